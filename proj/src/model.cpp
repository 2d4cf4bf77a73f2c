#include "cmkv/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmkv/expr.hpp"
#include "cmkv/stats.hpp"

namespace cmkv {

Model::Model(std::string name, Coef1 drift, Coef1 diffusion, Coef1 rate, PsiFn jump,
             NuSpec nu1, Nu0 nu0, double rate_bound)
    : name_(std::move(name)),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      rate_(std::move(rate)),
      jump_(std::move(jump)),
      nu1_(std::move(nu1)),
      nu0_(std::move(nu0)),
      rate_bound_(rate_bound) {
    if (!(rate_bound_ > 0.0)) throw ConfigError("rate bound f_max must be strictly positive");
    mark_atoms_ = nu1_.is_discrete() ? nu1_.atoms()
                                     : nu1_.quantize(kQuantizerResolution).atoms;
}

double Model::checked_rate(double x, const EmpiricalMeasure1D& m) const {
    const double f = rate_(x, m);
    if (!(f > 0.0)) throw ModelError("rate must be strictly positive");
    if (f > rate_bound_ * (1.0 + 1e-9)) throw ModelError("rate bound violated");
    return f;
}

double Model::psi_tilde(double x, double y, const EmpiricalMeasure1D& m, double v) const {
    if (psi_tilde_known_zero_) return 0.0;
    double s = 0.0;
    for (const Atom& a : mark_atoms_) s += a.weight * jump_(x, y, m, v, a.value);
    return s;
}

double Model::psi_sq_int(double x, double y, const EmpiricalMeasure1D& m) const {
    double s = 0.0;
    for (const Atom& au : mark_atoms_)
        for (const Atom& av : mark_atoms_) {
            const double p = jump_(x, y, m, au.value, av.value);
            s += au.weight * av.weight * p * p;
        }
    return s;
}

double Model::kappa_sq(double x, double y, const EmpiricalMeasure1D& m) const {
    double tilde_sq = 0.0;
    if (!psi_tilde_known_zero_)
        for (const Atom& a : mark_atoms_) {
            const double t = psi_tilde(x, y, m, a.value);
            tilde_sq += a.weight * t * t;
        }
    const double k2 = psi_sq_int(x, y, m) - tilde_sq;
    if (k2 < -kKappaClampTol) throw ModelError("Cauchy-Schwarz violation in kappa^2");
    return k2 < 0.0 ? 0.0 : k2;
}

std::pair<double, double> Model::sigma_xi_pair() const {
    if (!psi_state_independent_) throw ModelError("not a constant-kernel model");
    const EmpiricalMeasure1D dirac({0.0});
    const double varsigma_sq = psi_sq_int(0.0, 0.0, dirac);
    double xi_sq = 0.0;
    for (const Atom& a : mark_atoms_) {
        const double t = psi_tilde(0.0, 0.0, dirac, a.value);
        xi_sq += a.weight * t * t;
    }
    if (xi_sq < -kKappaClampTol || varsigma_sq < xi_sq - kKappaClampTol)
        throw ModelError("Cauchy-Schwarz violation in (varsigma^2, xi^2)");
    return {varsigma_sq, std::max(xi_sq, 0.0)};
}

CheckReport Model::check_centering(const std::vector<std::pair<double, double>>& probes,
                                   const EmpiricalMeasure1D& m, std::size_t n_mc) const {
    if (probes.empty()) throw std::invalid_argument("check_centering: no probe points");
    CheckReport report;
    report.exact = nu1_.is_discrete();
    if (!report.exact)
        report.note = "nu1 quantized to V=" + std::to_string(kQuantizerResolution) +
                      " atoms for exterior quadratures; centering checked by Monte-Carlo";
    const NoiseStream mc(0x63656e74ULL, 0);
    std::uint32_t draw = 0;
    for (auto [x, y] : probes) {
        CheckReport::Entry e{x, y, 0.0, 0.0, true};
        if (report.exact) {
            double s = 0.0;
            for (const Atom& au : nu1_.atoms())
                for (const Atom& av : nu1_.atoms())
                    s += au.weight * av.weight * jump_(x, y, m, au.value, av.value);
            e.value = s;
            e.tolerance = 1e-12;
        } else {
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t i = 0; i < n_mc; ++i) {
                const double u = nu1_.sample(mc.uniform(Channel::aux, 1, 0, draw++));
                const double v = nu1_.sample(mc.uniform(Channel::aux, 2, 0, draw++));
                const double p = jump_(x, y, m, u, v);
                sum += p;
                sumsq += p * p;
            }
            const double mean = sum / static_cast<double>(n_mc);
            const double var =
                std::max(0.0, (sumsq - sum * mean) / static_cast<double>(n_mc - 1));
            e.value = mean;
            e.tolerance = 4.0 * std::sqrt(var / static_cast<double>(n_mc));
        }
        e.pass = std::abs(e.value) <= std::max(e.tolerance, 1e-300);
        if (!e.pass) report.passed = false;
        report.entries.push_back(e);
    }
    return report;
}

DerivedCoefficients derive_coefficients(const std::shared_ptr<const Model>& model) {
    DerivedCoefficients d;
    d.psi_tilde = [model](double x, double y, const EmpiricalMeasure1D& m, double v) {
        return model->psi_tilde(x, y, m, v);
    };
    d.kappa_sq = [model](double x, double y, const EmpiricalMeasure1D& m) {
        return model->kappa_sq(x, y, m);
    };
    if (model->psi_state_independent()) {
        auto [vs, xs] = model->sigma_xi_pair();
        d.varsigma_sq = vs;
        d.xi_sq = xs;
    }
    return d;
}

class ModelBuilder {
  public:
    static void set_flags(Model& m, bool state_independent, bool tilde_zero) {
        m.psi_state_independent_ = state_independent;
        m.psi_tilde_known_zero_ = tilde_zero;
    }
};

namespace {

using nlohmann::json;

Coef1 constant_coef(double c) {
    return [c](double, const EmpiricalMeasure1D&) { return c; };
}

Expr parse_expr_checked(const std::string& src) {
    try {
        return Expr::parse(src);
    } catch (const ExprError& e) {
        throw ConfigError(std::string("malformed expression tree: ") + e.what());
    }
}

Coef1 expr_coef(const std::string& src) {
    Expr e = parse_expr_checked(src);
    if (e.uses_y() || e.uses_u() || e.uses_v())
        throw ConfigError("coefficient expression may only use x and measure functionals: " + src);
    return [e = std::move(e)](double x, const EmpiricalMeasure1D& m) {
        return e.eval(x, 0.0, 0.0, 0.0, m.mean(), m.abs_mean());
    };
}

Coef1 coef_from(const json& j, double fallback) {
    if (j.is_null()) return constant_coef(fallback);
    if (j.is_number()) return constant_coef(j.get<double>());
    if (j.is_string()) return expr_coef(j.get<std::string>());
    throw ConfigError("coefficient must be a number or an expression string");
}

NuSpec nu1_from(const json& j) {
    if (j.is_null()) return NuSpec::rademacher();
    if (j.contains("atoms")) {
        std::vector<Atom> atoms;
        for (const auto& pair : j.at("atoms")) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("nu1 atoms must be [value, weight] pairs");
            atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        return NuSpec::discrete(std::move(atoms));
    }
    if (j.contains("gaussian")) {
        const double mean = j["gaussian"].value("mean", 0.0);
        const double sd = j["gaussian"].value("sd", 1.0);
        if (!(sd > 0.0)) throw ConfigError("nu1 gaussian sd must be positive");
        return NuSpec::continuous(
            [mean, sd](double u) { return mean + sd * inverse_normal_cdf(u); },
            "gaussian");
    }
    throw ConfigError("nu1 must supply atoms or a gaussian block");
}

Nu0 nu0_from(const json& j) {
    if (j.is_null()) return Nu0::normal(0.0, 1.0);
    if (j.contains("normal"))
        return Nu0::normal(j["normal"].value("mean", 0.0), j["normal"].value("sd", 1.0));
    if (j.contains("uniform"))
        return Nu0::uniform(j["uniform"].value("a", 0.0), j["uniform"].value("b", 1.0));
    if (j.contains("point")) return Nu0::point(j["point"].value("value", 0.0));
    if (j.contains("atoms")) return Nu0::discrete(nu1_from(j));
    throw ConfigError("nu0 must supply normal, uniform, point, or atoms");
}

struct BuiltinParams {
    double rate = 1.0;
    double f_max = 0.0;  // 0 = follow rate (or the expression bound supplied)
    double jump_scale = 1.0;
    double epsilon = 0.5;
    json drift;  // number or expression
    json sigma;
    json f;  // overrides constant rate when present (expression)
};

BuiltinParams params_from(const json& cfg) {
    BuiltinParams p;
    if (!cfg.contains("params")) return p;
    const json& pj = cfg["params"];
    p.rate = pj.value("rate", 1.0);
    p.f_max = pj.value("f_max", 0.0);
    p.jump_scale = pj.value("jump_scale", 1.0);
    p.epsilon = pj.value("epsilon", 0.5);
    if (pj.contains("b")) p.drift = pj["b"];
    if (pj.contains("sigma")) p.sigma = pj["sigma"];
    if (pj.contains("f")) p.f = pj["f"];
    return p;
}

std::shared_ptr<Model> make_builtin(const std::string& name, const json& cfg) {
    const BuiltinParams p = params_from(cfg);
    Coef1 drift = coef_from(p.drift, 0.0);
    Coef1 sigma = coef_from(p.sigma, 0.0);
    Coef1 rate = p.f.is_null() ? constant_coef(p.rate) : coef_from(p.f, p.rate);
    double f_max = p.f_max > 0.0 ? p.f_max : p.rate;
    const Nu0 nu0 = nu0_from(cfg.contains("nu0") ? cfg["nu0"] : json());

    PsiFn psi;
    bool state_independent = true;
    bool tilde_zero = false;
    const double s = p.jump_scale;
    if (name == "example1") {
        psi = [s](double, double, const EmpiricalMeasure1D&, double u, double) { return s * u; };
    } else if (name == "example2") {
        psi = [s](double, double, const EmpiricalMeasure1D&, double, double v) { return s * v; };
        tilde_zero = true;  // nu1 is centred Rademacher and Psi is linear in v
    } else if (name == "example3") {
        psi = [s](double, double, const EmpiricalMeasure1D&, double u, double v) {
            return s * u * (1.0 + v);
        };
    } else if (name == "arctan_rademacher") {
        const double eps = p.epsilon;
        if (!(eps > 0.0)) throw ConfigError("arctan_rademacher: epsilon must be positive");
        psi = [eps, s](double x, double y, const EmpiricalMeasure1D& m, double u, double v) {
            return s * u * v * (eps + M_PI / 2.0 + std::atan(x - y + m.mean()));
        };
        state_independent = false;
        tilde_zero = true;  // u*v is odd in the receiver mark under Rademacher
    } else if (name == "zero_dynamics") {
        psi = [](double, double, const EmpiricalMeasure1D&, double, double) { return 0.0; };
        tilde_zero = true;
        rate = constant_coef(1e-12);
        f_max = 1e-12;
    } else {
        throw ConfigError("unknown model name '" + name + "'");
    }

    auto model = std::make_shared<Model>(name, std::move(drift), std::move(sigma),
                                         std::move(rate), std::move(psi),
                                         NuSpec::rademacher(), nu0, f_max);
    ModelBuilder::set_flags(*model, state_independent, tilde_zero);
    return model;
}

std::shared_ptr<Model> make_custom(const json& cfg) {
    for (const char* field : {"psi", "f_max"})
        if (!cfg.contains(field))
            throw ConfigError(std::string("custom model: missing field '") + field + "'");
    Coef1 drift = coef_from(cfg.contains("b") ? cfg["b"] : json(), 0.0);
    Coef1 sigma = coef_from(cfg.contains("sigma") ? cfg["sigma"] : json(), 0.0);
    Coef1 rate = coef_from(cfg.contains("f") ? cfg["f"] : json(), 1.0);
    const double f_max = cfg["f_max"].get<double>();

    Expr psi_expr = parse_expr_checked(cfg["psi"].get<std::string>());
    const bool state_independent = !psi_expr.uses_x() && !psi_expr.uses_y() &&
                                   !psi_expr.uses_measure();
    PsiFn psi = [e = std::move(psi_expr)](double x, double y, const EmpiricalMeasure1D& m,
                                          double u, double v) {
        return e.eval(x, y, u, v, m.mean(), m.abs_mean());
    };

    auto model = std::make_shared<Model>(
        "custom", std::move(drift), std::move(sigma), std::move(rate), std::move(psi),
        nu1_from(cfg.contains("nu1") ? cfg["nu1"] : json()),
        nu0_from(cfg.contains("nu0") ? cfg["nu0"] : json()), f_max);
    ModelBuilder::set_flags(*model, state_independent, false);
    return model;
}

}  // namespace

std::shared_ptr<const Model> build_model(const std::string& json_text) {
    json cfg;
    try {
        cfg = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
    if (!cfg.is_object() || !cfg.contains("model"))
        throw ConfigError("model config must be an object with a 'model' field");
    const std::string name = cfg["model"].get<std::string>();
    std::shared_ptr<Model> model =
        name == "custom" ? make_custom(cfg) : make_builtin(name, cfg);

    // Fail fast on a kernel that is obviously not centred.
    const EmpiricalMeasure1D probe({0.0});
    const CheckReport centred =
        model->check_centering({{0.0, 0.0}, {0.7, -0.3}}, probe, 20'000);
    if (!centred.passed) throw ConfigError("jump kernel is not centred under nu1");
    return model;
}

std::shared_ptr<const Model> build_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return build_model(ss.str());
}

}  // namespace cmkv
