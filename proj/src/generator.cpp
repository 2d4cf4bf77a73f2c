#include "cmkv/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace cmkv {

TestFunction2D TestFunction2D::builtin(const std::string& name) {
    if (name == "constant") {
        TestFunction2D f(name, [](double, double) { return 1.0; });
        f.d1_ = f.d2_ = f.d11_ = f.d22_ = f.d12_ = [](double, double) { return 0.0; };
        return f;
    }
    if (name == "y1") {
        TestFunction2D f(name, [](double y1, double) { return y1; });
        f.d1_ = [](double, double) { return 1.0; };
        f.d2_ = f.d11_ = f.d22_ = f.d12_ = [](double, double) { return 0.0; };
        return f;
    }
    if (name == "y1y2") {
        TestFunction2D f(name, [](double y1, double y2) { return y1 * y2; });
        f.d1_ = [](double, double y2) { return y2; };
        f.d2_ = [](double y1, double) { return y1; };
        f.d11_ = f.d22_ = [](double, double) { return 0.0; };
        f.d12_ = [](double, double) { return 1.0; };
        return f;
    }
    if (name == "sin_cos") {
        TestFunction2D f(name,
                         [](double y1, double y2) { return std::sin(y1) + std::cos(y2); });
        f.d1_ = [](double y1, double) { return std::cos(y1); };
        f.d2_ = [](double, double y2) { return -std::sin(y2); };
        f.d11_ = [](double y1, double) { return -std::sin(y1); };
        f.d22_ = [](double, double y2) { return -std::cos(y2); };
        f.d12_ = [](double, double) { return 0.0; };
        return f;
    }
    throw ConfigError("unknown test function '" + name + "'");
}

namespace {
inline double fd_h(double y) { return TestFunction2D::kFdScale * (1.0 + std::abs(y)); }
}  // namespace

double TestFunction2D::d1(double y1, double y2) const {
    if (d1_) return d1_(y1, y2);
    const double h = fd_h(y1);
    return (g_(y1 + h, y2) - g_(y1 - h, y2)) / (2.0 * h);
}

double TestFunction2D::d2(double y1, double y2) const {
    if (d2_) return d2_(y1, y2);
    const double h = fd_h(y2);
    return (g_(y1, y2 + h) - g_(y1, y2 - h)) / (2.0 * h);
}

double TestFunction2D::d11(double y1, double y2) const {
    if (d11_) return d11_(y1, y2);
    const double h = fd_h(y1);
    return (g_(y1 + h, y2) - 2.0 * g_(y1, y2) + g_(y1 - h, y2)) / (h * h);
}

double TestFunction2D::d22(double y1, double y2) const {
    if (d22_) return d22_(y1, y2);
    const double h = fd_h(y2);
    return (g_(y1, y2 + h) - 2.0 * g_(y1, y2) + g_(y1, y2 - h)) / (h * h);
}

double TestFunction2D::d12(double y1, double y2) const {
    if (d12_) return d12_(y1, y2);
    const double h1 = fd_h(y1), h2 = fd_h(y2);
    return (g_(y1 + h1, y2 + h2) - g_(y1 + h1, y2 - h2) - g_(y1 - h1, y2 + h2) +
            g_(y1 - h1, y2 - h2)) /
           (4.0 * h1 * h2);
}

double generator_apply(const TestFunction2D& g, double y1, double y2,
                       const EmpiricalMeasure1D& m, double x, double v, const Model& model) {
    const double g1 = g.d1(y1, y2), g2 = g.d2(y1, y2);
    const double g11 = g.d11(y1, y2), g22 = g.d22(y1, y2), g12 = g.d12(y1, y2);
    const double f = model.rate(x, m);
    const double s1 = model.diffusion(y1, m), s2 = model.diffusion(y2, m);
    double out = model.drift(y1, m) * g1 + model.drift(y2, m) * g2;
    out += 0.5 * s1 * s1 * g11 + 0.5 * s2 * s2 * g22;
    out += 0.5 * f * model.kappa_sq(x, y1, m) * g11;
    out += 0.5 * f * model.kappa_sq(x, y2, m) * g22;
    const double p1 = model.psi_tilde(x, y1, m, v);
    const double p2 = model.psi_tilde(x, y2, m, v);
    out += 0.5 * f * (p1 * p1 * g11 + 2.0 * p1 * p2 * g12 + p2 * p2 * g22);
    return out;
}

double martingale_residual_path(const Model& model, const TestFunction2D& g, double s_time,
                                double t_time, const TrajectoryBundle& bundle, double dt) {
    const std::size_t gs = bundle.grid_index(s_time);
    const std::size_t gt = bundle.grid_index(t_time);
    if (gs >= gt) throw std::invalid_argument("martingale residual needs s < t on the grid");

    const std::vector<Atom>& atoms = model.mark_atoms();
    const bool tilde_zero = model.psi_tilde_known_zero();
    double integral = 0.0;
    for (std::size_t r = gs; r < gt; ++r) {
        const std::vector<double>& row = bundle.states[r];
        const double y1 = row[0], y2 = row[1];
        const EmpiricalMeasure1D mu{std::vector<double>(row)};
        const double g1 = g.d1(y1, y2), g2 = g.d2(y1, y2);
        const double g11 = g.d11(y1, y2), g22 = g.d22(y1, y2), g12 = g.d12(y1, y2);
        const double s1 = model.diffusion(y1, mu), s2 = model.diffusion(y2, mu);
        // terms independent of the mu(dx) and nu_1(dv) integrations
        double value = model.drift(y1, mu) * g1 + model.drift(y2, mu) * g2 +
                       0.5 * s1 * s1 * g11 + 0.5 * s2 * s2 * g22;
        double xsum = 0.0;
        for (double xc : row) {
            const double f = model.rate(xc, mu);
            double term = 0.5 * f *
                          (model.kappa_sq(xc, y1, mu) * g11 + model.kappa_sq(xc, y2, mu) * g22);
            if (!tilde_zero) {
                double cross = 0.0;
                for (const Atom& a : atoms) {
                    const double p1 = model.psi_tilde(xc, y1, mu, a.value);
                    const double p2 = model.psi_tilde(xc, y2, mu, a.value);
                    cross += a.weight * (p1 * p1 * g11 + 2.0 * p1 * p2 * g12 + p2 * p2 * g22);
                }
                term += 0.5 * f * cross;
            }
            xsum += term;
        }
        value += xsum / static_cast<double>(row.size());
        integral += dt * value;
    }
    const std::vector<double>& rs = bundle.states[gs];
    const std::vector<double>& rt = bundle.states[gt];
    return g(rt[0], rt[1]) - g(rs[0], rs[1]) - integral;
}

MeanStderr martingale_residual(const Model& model, const TestFunction2D& g, double s_time,
                               double t_time, const LimitSimConfig& config,
                               std::uint32_t reps, std::uint32_t base_replication) {
    if (reps < 2) throw std::invalid_argument("martingale_residual: need reps >= 2");
    LimitSimConfig cfg = config;
    cfg.grid_stride = 1;  // the compensator is integrated on the simulation grid
    std::vector<double> residuals(reps);
    for (std::uint32_t r = 0; r < reps; ++r) {
        const TrajectoryBundle bundle = simulate_limit(model, cfg, base_replication + r);
        residuals[r] = martingale_residual_path(model, g, s_time, t_time, bundle, cfg.dt);
    }
    return mean_stderr(residuals);
}

}  // namespace cmkv
