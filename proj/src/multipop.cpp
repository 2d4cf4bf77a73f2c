#include "cmkv/multipop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cmkv/expr.hpp"
#include "cmkv/limit_kernels.hpp"
#include "cmkv/noise.hpp"

namespace cmkv {

const CrossKernel& MultiPopSpec::kernel(std::uint32_t l, std::uint32_t k) const {
    auto it = kernels.find({l, k});
    if (it == kernels.end())
        throw ConfigError("missing cross kernel " + std::to_string(l + 1) + "->" +
                          std::to_string(k + 1));
    return it->second;
}

void MultiPopSpec::validate() const {
    if (populations.empty()) throw ConfigError("multipop: no populations");
    if (inputs.size() != populations.size())
        throw ConfigError("multipop: inputs must cover every population");
    for (std::uint32_t k = 0; k < n_pop(); ++k) {
        if (populations[k].size < 2) throw ConfigError("multipop: population sizes must be >= 2");
        if (!std::is_sorted(inputs[k].begin(), inputs[k].end()))
            throw ConfigError("multipop: input lists must be ascending");
        for (std::uint32_t l : inputs[k]) {
            if (l >= n_pop()) throw ConfigError("multipop: input population out of range");
            kernel(l, k);  // existence
        }
    }
    // centering of every used cross kernel, exact over atom pairs
    const EmpiricalMeasure1D probe({0.0});
    for (std::uint32_t k = 0; k < n_pop(); ++k)
        for (std::uint32_t l : inputs[k]) {
            const CrossKernel& ck = kernel(l, k);
            double s = 0.0;
            for (const Atom& au : populations[l].base->mark_atoms())
                for (const Atom& av : populations[k].base->mark_atoms())
                    s += au.weight * av.weight * ck.fn(0.3, -0.2, probe, probe, au.value, av.value);
            if (std::abs(s) > 1e-10)
                throw ConfigError("cross kernel " + std::to_string(l + 1) + "->" +
                                  std::to_string(k + 1) + " is not centred");
        }
}

double MultiPopSpec::psi_tilde(std::uint32_t l, std::uint32_t k, double x, double y,
                               const EmpiricalMeasure1D& ml, const EmpiricalMeasure1D& mk,
                               double v) const {
    const CrossKernel& ck = kernel(l, k);
    if (ck.tilde_known_zero) return 0.0;
    double s = 0.0;
    for (const Atom& a : populations[k].base->mark_atoms())
        s += a.weight * ck.fn(x, y, ml, mk, v, a.value);
    return s;
}

double MultiPopSpec::kappa_sq(std::uint32_t l, std::uint32_t k, double x, double y,
                              const EmpiricalMeasure1D& ml,
                              const EmpiricalMeasure1D& mk) const {
    const CrossKernel& ck = kernel(l, k);
    double sq = 0.0;
    for (const Atom& au : populations[l].base->mark_atoms())
        for (const Atom& av : populations[k].base->mark_atoms()) {
            const double p = ck.fn(x, y, ml, mk, au.value, av.value);
            sq += au.weight * av.weight * p * p;
        }
    double tilde_sq = 0.0;
    if (!ck.tilde_known_zero)
        for (const Atom& a : populations[l].base->mark_atoms()) {
            const double t = psi_tilde(l, k, x, y, ml, mk, a.value);
            tilde_sq += a.weight * t * t;
        }
    const double k2 = sq - tilde_sq;
    if (k2 < -Model::kKappaClampTol) throw ModelError("Cauchy-Schwarz violation in kappa^2");
    return k2 < 0.0 ? 0.0 : k2;
}

MultiPopSpec single_population_spec(std::shared_ptr<const Model> model, std::uint32_t size) {
    MultiPopSpec spec;
    spec.populations.push_back({model, size});
    spec.inputs.push_back({0});
    CrossKernel ck;
    ck.fn = [model](double x, double y, const EmpiricalMeasure1D& ml,
                    const EmpiricalMeasure1D&, double u, double v) {
        return model->jump(x, y, ml, u, v);
    };
    ck.state_independent = model->psi_state_independent();
    ck.tilde_known_zero = model->psi_tilde_known_zero();
    spec.kernels[{0, 0}] = std::move(ck);
    return spec;
}

namespace {

using nlohmann::json;

struct AcceptedEvent {
    double time;
    std::uint32_t sender;
    std::uint32_t local_index;
    double u_sender;
};

void validate_grid(const MultiPopSimConfig& c) {
    if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(c.horizon >= c.dt)) throw ConfigError("horizon must be at least dt");
    const double s = c.horizon / c.dt;
    if (std::abs(s - std::round(s)) > 1e-9)
        throw ConfigError("horizon must be a multiple of dt");
}

std::uint32_t total_steps(const MultiPopSimConfig& c) {
    return static_cast<std::uint32_t>(std::llround(c.horizon / c.dt));
}

}  // namespace

std::vector<TrajectoryBundle> simulate_multipop_finite(const MultiPopSpec& spec,
                                                       const MultiPopSimConfig& config,
                                                       std::uint32_t replication) {
    spec.validate();
    validate_grid(config);
    const std::uint32_t n_pop = spec.n_pop();
    const std::uint32_t steps = total_steps(config);
    const double dt = config.dt;
    const NoiseStream stream(config.seed, replication);

    std::vector<std::vector<double>> cur(n_pop), next(n_pop), rate_at(n_pop);
    std::vector<double> inv_sqrt_n(n_pop);
    for (std::uint32_t k = 0; k < n_pop; ++k) {
        const std::uint32_t nk = spec.populations[k].size;
        cur[k].resize(nk);
        next[k].resize(nk);
        rate_at[k].resize(nk);
        inv_sqrt_n[k] = 1.0 / std::sqrt(static_cast<double>(nk));
        for (std::uint32_t i = 0; i < nk; ++i)
            cur[k][i] =
                spec.populations[k].base->nu0().sample(stream.uniform(Channel::initial, k, 0, i, 0, 0));
    }

    std::vector<TrajectoryBundle> out(n_pop);
    std::vector<double> rate_integral(n_pop, 0.0);
    auto record = [&](double t) {
        for (std::uint32_t k = 0; k < n_pop; ++k) {
            out[k].times.push_back(t);
            out[k].states.push_back(cur[k]);
            out[k].rate_integral.push_back(rate_integral[k]);
        }
    };
    if (config.record_jump_log)
        for (auto& b : out) b.jump_log.emplace();
    record(0.0);

    std::vector<std::vector<AcceptedEvent>> accepted(n_pop);
    for (std::uint32_t s = 0; s < steps; ++s) {
        const double t = dt * s;
        std::vector<EmpiricalMeasure1D> mu;
        mu.reserve(n_pop);
        for (std::uint32_t k = 0; k < n_pop; ++k) {
            std::vector<double> sorted(cur[k]);
            std::sort(sorted.begin(), sorted.end());
            mu.push_back(EmpiricalMeasure1D::from_sorted(std::move(sorted)));
        }

        for (std::uint32_t k = 0; k < n_pop; ++k) {
            const Model& base = *spec.populations[k].base;
            double rate_sum = 0.0;
            for (std::uint32_t i = 0; i < cur[k].size(); ++i) {
                rate_at[k][i] = base.checked_rate(cur[k][i], mu[k]);
                rate_sum += rate_at[k][i];
            }
            rate_integral[k] += dt * rate_sum / static_cast<double>(cur[k].size());
        }

        const bool par = config.exec == Exec::openmp;
        for (std::uint32_t k = 0; k < n_pop; ++k) {
            const Model& base = *spec.populations[k].base;
#pragma omp parallel for schedule(static) if (par)
            for (std::uint32_t i = 0; i < cur[k].size(); ++i) {
                next[k][i] = cur[k][i] + base.drift(cur[k][i], mu[k]) * dt +
                             base.diffusion(cur[k][i], mu[k]) *
                                 (stream.gaussian(Channel::brownian, k, 0, i, s, 0) *
                                  std::sqrt(dt));
            }
        }

        // thinned events per sending population
        for (std::uint32_t l = 0; l < n_pop; ++l) {
            accepted[l].clear();
            const Model& base = *spec.populations[l].base;
            for (std::uint32_t j = 0; j < cur[l].size(); ++j) {
                const int count =
                    poisson_count(stream, l, j, s, base.rate_bound(), dt);
                for (int e = 0; e < count; ++e) {
                    const double te =
                        t + dt * stream.uniform(Channel::poisson_time, l, 0, j, s,
                                                static_cast<std::uint32_t>(e));
                    if (stream.uniform(Channel::poisson_accept, l, 0, j, s,
                                       static_cast<std::uint32_t>(e)) *
                            base.rate_bound() <=
                        rate_at[l][j])
                        accepted[l].push_back({te, j, static_cast<std::uint32_t>(e), 0.0});
                }
            }
            std::stable_sort(accepted[l].begin(), accepted[l].end(),
                             [](const AcceptedEvent& a, const AcceptedEvent& b) {
                                 if (a.time != b.time) return a.time < b.time;
                                 if (a.sender != b.sender) return a.sender < b.sender;
                                 return a.local_index < b.local_index;
                             });
            for (AcceptedEvent& ev : accepted[l])
                ev.u_sender = spec.populations[l].base->nu1().sample(
                    stream.uniform(Channel::mark_sender, l, 0, ev.sender, s, ev.local_index));
        }

        // receiver updates, population by population in fixed order
        for (std::uint32_t k = 0; k < n_pop; ++k) {
            std::vector<std::vector<JumpEvent>> step_logs(spec.inputs[k].size());
            if (out[k].jump_log) {
                for (std::size_t li = 0; li < spec.inputs[k].size(); ++li) {
                    const std::uint32_t l = spec.inputs[k][li];
                    step_logs[li].resize(accepted[l].size());
                    for (std::size_t g = 0; g < accepted[l].size(); ++g) {
                        step_logs[li][g].time = accepted[l][g].time;
                        step_logs[li][g].sender_pop = l;
                        step_logs[li][g].sender = accepted[l][g].sender;
                        step_logs[li][g].receiver_increments.assign(cur[k].size(), 0.0);
                    }
                }
            }
#pragma omp parallel for schedule(static) if (par)
            for (std::uint32_t i = 0; i < cur[k].size(); ++i) {
                double jsum = 0.0;
                for (std::size_t li = 0; li < spec.inputs[k].size(); ++li) {
                    const std::uint32_t l = spec.inputs[k][li];
                    const CrossKernel& ck = spec.kernel(l, k);
                    const NuSpec& nu1_k = spec.populations[k].base->nu1();
                    for (std::size_t g = 0; g < accepted[l].size(); ++g) {
                        const AcceptedEvent& ev = accepted[l][g];
                        if (l == k && ev.sender == i) continue;  // no auto-interaction
                        const double ui = nu1_k.sample(
                            stream.uniform(Channel::mark_receiver, l, k, i, s,
                                           static_cast<std::uint32_t>(g)));
                        const double incr =
                            inv_sqrt_n[l] *
                            ck.fn(cur[l][ev.sender], cur[k][i], mu[l], mu[k], ev.u_sender, ui);
                        jsum += incr;
                        if (out[k].jump_log)
                            step_logs[li][g].receiver_increments[i] = incr;
                    }
                }
                next[k][i] += jsum;
            }
            if (out[k].jump_log)
                for (auto& log : step_logs)
                    for (auto& ev : log) out[k].jump_log->push_back(std::move(ev));
        }

        for (std::uint32_t k = 0; k < n_pop; ++k)
            for (std::uint32_t i = 0; i < cur[k].size(); ++i) {
                if (!std::isfinite(next[k][i])) throw NumericalError("non-finite state", s);
                cur[k][i] = next[k][i];
            }
        if ((s + 1) % config.grid_stride == 0 || s + 1 == steps) record(dt * (s + 1));
    }
    return out;
}

std::vector<TrajectoryBundle> simulate_multipop_limit(const MultiPopSpec& spec,
                                                      const MultiPopSimConfig& config,
                                                      std::uint32_t replication) {
    spec.validate();
    validate_grid(config);
    const std::uint32_t n_pop = spec.n_pop();
    const std::uint32_t steps = total_steps(config);
    const double dt = config.dt;
    const NoiseStream stream(config.seed, replication);

    std::vector<std::vector<double>> cur(n_pop);
    for (std::uint32_t k = 0; k < n_pop; ++k) {
        cur[k].resize(spec.populations[k].size);
        for (std::uint32_t i = 0; i < cur[k].size(); ++i)
            cur[k][i] =
                spec.populations[k].base->nu0().sample(stream.uniform(Channel::initial, k, 0, i, 0, 0));
    }

    std::vector<TrajectoryBundle> out(n_pop);
    std::vector<double> rate_integral(n_pop, 0.0);
    for (std::uint32_t k = 0; k < n_pop; ++k) {
        const std::uint32_t rec = std::min<std::uint32_t>(config.record_increment_copies,
                                                          spec.populations[k].size);
        if (rec > 0) {
            out[k].increments.emplace();
            out[k].increments->steps = steps;
            out[k].increments->copies = rec;
            const std::size_t total = static_cast<std::size_t>(steps) * rec;
            out[k].increments->drift.assign(total, 0.0);
            out[k].increments->diffusion.assign(total, 0.0);
            out[k].increments->common.assign(total, 0.0);
            out[k].increments->idio.assign(total, 0.0);
        }
    }
    auto record = [&](double t) {
        for (std::uint32_t k = 0; k < n_pop; ++k) {
            out[k].times.push_back(t);
            out[k].states.push_back(cur[k]);
            out[k].rate_integral.push_back(rate_integral[k]);
        }
    };
    record(0.0);

    for (std::uint32_t s = 0; s < steps; ++s) {
        // per-population measures, quantile bins and rates
        std::vector<EmpiricalMeasure1D> mu;
        mu.reserve(n_pop);
        std::vector<std::vector<double>> sqrt_rate(n_pop);
        std::vector<double> rate_mean(n_pop, 0.0);
        for (std::uint32_t l = 0; l < n_pop; ++l) {
            std::vector<double> sorted(cur[l]);
            std::sort(sorted.begin(), sorted.end());
            mu.push_back(EmpiricalMeasure1D::from_sorted(std::move(sorted)));
            const Model& base = *spec.populations[l].base;
            const auto ml = static_cast<std::uint32_t>(cur[l].size());
            sqrt_rate[l].resize(ml);
            double rate_sum = 0.0;
            for (std::uint32_t j = 0; j < ml; ++j) {
                const double f = base.checked_rate(mu[l].samples()[j], mu[l]);
                sqrt_rate[l][j] = std::sqrt(f);
                rate_sum += f;
            }
            rate_mean[l] = rate_sum / static_cast<double>(ml);
            rate_integral[l] += dt * rate_mean[l];
        }

        // the sender population's common panel is one object per step, shared
        // by every receiving population
        std::vector<WhiteNoisePanel> common_panel(n_pop);
        std::vector<char> panel_needed(n_pop, 0);
        for (std::uint32_t k = 0; k < n_pop; ++k)
            for (std::uint32_t l : spec.inputs[k])
                if (!spec.kernel(l, k).tilde_known_zero) panel_needed[l] = 1;
        for (std::uint32_t l = 0; l < n_pop; ++l)
            if (panel_needed[l])
                common_panel[l] = sample_common_panel(
                    stream, l, s, static_cast<int>(cur[l].size()),
                    spec.populations[l].base->mark_atoms(), dt);

        // per-(l,k) shared common increments and collapsed kappas
        std::map<std::pair<std::uint32_t, std::uint32_t>, double> shared_common;
        std::map<std::pair<std::uint32_t, std::uint32_t>, double> kappa_const;
        for (std::uint32_t k = 0; k < n_pop; ++k)
            for (std::uint32_t l : spec.inputs[k]) {
                const CrossKernel& ck = spec.kernel(l, k);
                if (ck.state_independent) {
                    if (!ck.tilde_known_zero) {
                        const auto& atoms = spec.populations[l].base->mark_atoms();
                        std::vector<double> pt(atoms.size());
                        for (std::size_t a = 0; a < atoms.size(); ++a)
                            pt[a] = spec.psi_tilde(l, k, 0.0, 0.0, mu[l], mu[k],
                                                   atoms[a].value);
                        shared_common[{l, k}] =
                            common_increment_shared(common_panel[l], sqrt_rate[l], pt);
                    }
                    kappa_const[{l, k}] =
                        std::sqrt(spec.kappa_sq(l, k, 0.0, 0.0, mu[l], mu[k]));
                }
            }

        const bool par = config.exec == Exec::openmp;
        for (std::uint32_t k = 0; k < n_pop; ++k) {
            const Model& base = *spec.populations[k].base;
            const std::uint32_t rec = out[k].increments ? out[k].increments->copies : 0;
#pragma omp parallel for schedule(static) if (par)
            for (std::uint32_t i = 0; i < cur[k].size(); ++i) {
                const double x = cur[k][i];
                const double drift = base.drift(x, mu[k]) * dt;
                const double diff = base.diffusion(x, mu[k]) *
                                    (stream.gaussian(Channel::brownian, k, 0, i, s, 0) *
                                     std::sqrt(dt));
                double incr = drift;
                incr += diff;
                double common_total = 0.0, idio_total = 0.0;
                for (std::uint32_t l : spec.inputs[k]) {
                    const CrossKernel& ck = spec.kernel(l, k);
                    const auto& atoms_l = spec.populations[l].base->mark_atoms();
                    double common = 0.0;
                    if (!ck.tilde_known_zero) {
                        common =
                            ck.state_independent
                                ? shared_common.at({l, k})
                                : common_increment_generic(
                                      common_panel[l], sqrt_rate[l], [&](int j, int a) {
                                          return spec.psi_tilde(
                                              l, k,
                                              mu[l].samples()[static_cast<std::size_t>(j)], x,
                                              mu[l], mu[k],
                                              atoms_l[static_cast<std::size_t>(a)].value);
                                      });
                    }
                    double idio;
                    if (ck.state_independent) {
                        idio = kappa_const.at({l, k}) * std::sqrt(dt * rate_mean[l]) *
                               stream.gaussian(Channel::idio_w, l, k, i, s, 0);
                    } else {
                        const WhiteNoisePanel h = sample_idio_panel(
                            stream, l, k, i, s, static_cast<int>(cur[l].size()), dt);
                        idio = idio_increment_panel(h, sqrt_rate[l], [&](int j) {
                            return std::sqrt(spec.kappa_sq(
                                l, k, mu[l].samples()[static_cast<std::size_t>(j)], x, mu[l],
                                mu[k]));
                        });
                    }
                    incr += common;
                    incr += idio;
                    common_total += common;
                    idio_total += idio;
                }
                if (out[k].increments && i < rec) {
                    const std::size_t at = static_cast<std::size_t>(s) * rec + i;
                    out[k].increments->drift[at] = drift;
                    out[k].increments->diffusion[at] = diff;
                    out[k].increments->common[at] = common_total;
                    out[k].increments->idio[at] = idio_total;
                }
                cur[k][i] = x + incr;
            }
            for (std::uint32_t i = 0; i < cur[k].size(); ++i)
                if (!std::isfinite(cur[k][i])) throw NumericalError("non-finite state", s);
        }
        if ((s + 1) % config.grid_stride == 0 || s + 1 == steps) record(dt * (s + 1));
    }
    return out;
}

namespace {

CrossKernel cross_kernel_from_expr(const std::string& src) {
    Expr e = [&] {
        try {
            return Expr::parse(src);
        } catch (const ExprError& err) {
            throw ConfigError(std::string("malformed expression tree: ") + err.what());
        }
    }();
    CrossKernel ck;
    ck.state_independent = !e.uses_x() && !e.uses_y() && !e.uses_measure();
    ck.fn = [e = std::move(e)](double x, double y, const EmpiricalMeasure1D& ml,
                               const EmpiricalMeasure1D&, double u, double v) {
        return e.eval(x, y, u, v, ml.mean(), ml.abs_mean());
    };
    return ck;
}

}  // namespace

MultiPopSpec build_multipop(const std::string& json_text) {
    json cfg;
    try {
        cfg = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed multipop config: ") + e.what());
    }
    if (!cfg.contains("populations") || !cfg["populations"].is_array())
        throw ConfigError("multipop config needs a populations array");
    MultiPopSpec spec;
    for (const auto& pj : cfg["populations"]) {
        MultiPopSpec::Population p;
        p.base = build_model(pj.dump());
        spec.populations.push_back(std::move(p));
    }
    if (cfg.contains("sizes")) {
        const auto& sizes = cfg["sizes"];
        if (sizes.size() != spec.populations.size())
            throw ConfigError("multipop: sizes must match populations");
        for (std::size_t k = 0; k < spec.populations.size(); ++k)
            spec.populations[k].size = sizes[k].get<std::uint32_t>();
    }
    spec.inputs.assign(spec.populations.size(), {});
    if (cfg.contains("inputs"))
        for (const auto& [key, val] : cfg["inputs"].items()) {
            const auto k = static_cast<std::uint32_t>(std::stoul(key)) - 1;
            if (k >= spec.populations.size())
                throw ConfigError("multipop: inputs key out of range: " + key);
            for (const auto& l : val)
                spec.inputs[k].push_back(l.get<std::uint32_t>() - 1);
            std::sort(spec.inputs[k].begin(), spec.inputs[k].end());
        }
    if (cfg.contains("cross_kernels"))
        for (const auto& [key, val] : cfg["cross_kernels"].items()) {
            const auto arrow = key.find("->");
            if (arrow == std::string::npos)
                throw ConfigError("multipop: cross kernel keys look like \"l->k\": " + key);
            const auto l = static_cast<std::uint32_t>(std::stoul(key.substr(0, arrow))) - 1;
            const auto k = static_cast<std::uint32_t>(std::stoul(key.substr(arrow + 2))) - 1;
            spec.kernels[{l, k}] = cross_kernel_from_expr(val.get<std::string>());
        }
    spec.validate();
    return spec;
}

MultiPopSpec build_multipop_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open multipop file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return build_multipop(ss.str());
}

}  // namespace cmkv
