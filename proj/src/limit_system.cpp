#include "cmkv/limit_system.hpp"

#include <algorithm>
#include <cmath>

#include "cmkv/limit_step.hpp"

namespace cmkv {

void LimitSimConfig::validate() const {
    if (n_copies < 2) throw ConfigError("limit system needs M >= 2");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(horizon >= dt)) throw ConfigError("horizon must be at least dt");
    if (grid_stride < 1) throw ConfigError("grid stride must be >= 1");
    const double s = horizon / dt;
    if (std::abs(s - std::round(s)) > 1e-9)
        throw ConfigError("horizon must be a multiple of dt");
}

std::uint32_t LimitSimConfig::steps() const {
    return static_cast<std::uint32_t>(std::llround(horizon / dt));
}

IdioPath limit_idio_path(const Model& model) {
    // kappa is constant exactly when Psi ignores (x, y, m); collapsing the
    // per-bin panel to one Gaussian of the same total variance is then
    // law-equivalent.
    return model.psi_state_independent() ? IdioPath::collapsed : IdioPath::panel;
}

TrajectoryBundle simulate_limit(const Model& model, const LimitSimConfig& config,
                                std::uint32_t replication) {
    config.validate();
    const std::uint32_t m_copies = config.n_copies;
    const std::uint32_t steps = config.steps();
    const double dt = config.dt;
    const NoiseStream stream(config.seed, replication);
    const NoiseStream common_stream(config.seed,
                                    config.common_replication.value_or(replication));

    std::vector<double> cur(m_copies), incr(m_copies);
    for (std::uint32_t i = 0; i < m_copies; ++i)
        cur[i] = model.nu0().sample(stream.uniform(Channel::initial, i, 0, 0));

    TrajectoryBundle out;
    const std::uint32_t rec_copies = std::min(config.record_increment_copies, m_copies);
    if (rec_copies > 0) {
        out.increments.emplace();
        out.increments->steps = steps;
        out.increments->copies = rec_copies;
        const std::size_t total = static_cast<std::size_t>(steps) * rec_copies;
        out.increments->drift.assign(total, 0.0);
        out.increments->diffusion.assign(total, 0.0);
        out.increments->common.assign(total, 0.0);
        out.increments->idio.assign(total, 0.0);
    }
    double rate_integral = 0.0;
    auto record = [&](double t) {
        out.times.push_back(t);
        out.states.push_back(cur);
        out.rate_integral.push_back(rate_integral);
    };
    record(0.0);

    for (std::uint32_t s = 0; s < steps; ++s) {
        const LimitStepResult r = limit_step_increments(
            model, stream, common_stream, s, dt, cur, config.exec, incr,
            out.increments ? &*out.increments : nullptr);
        rate_integral += dt * r.rate_mean;
        for (std::uint32_t i = 0; i < m_copies; ++i) {
            cur[i] += incr[i];
            if (!std::isfinite(cur[i])) throw NumericalError("non-finite state", s);
        }
        if ((s + 1) % config.grid_stride == 0 || s + 1 == steps) record(dt * (s + 1));
    }
    return out;
}

CovariationEstimate limit_covariance_check(const Model& model, const LimitSimConfig& config,
                                           std::uint32_t copy_i, std::uint32_t copy_j,
                                           std::uint32_t replication) {
    if (!model.psi_state_independent())
        throw ModelError("not a constant-kernel model");
    LimitSimConfig cfg = config;
    cfg.record_increment_copies =
        std::max({cfg.record_increment_copies, copy_i + 1, copy_j + 1});
    const TrajectoryBundle bundle = simulate_limit(model, cfg, replication);
    const auto [varsigma_sq, xi_sq] = model.sigma_xi_pair();
    const double factor = copy_i == copy_j ? varsigma_sq : xi_sq;

    CovariationEstimate est;
    est.copy_i = copy_i;
    est.copy_j = copy_j;
    est.times = bundle.times;
    est.theoretical.resize(bundle.times.size());
    for (std::size_t g = 0; g < bundle.times.size(); ++g)
        est.theoretical[g] = factor * bundle.rate_integral[g];

    est.realized.assign(bundle.times.size(), 0.0);
    const IncrementLog& log = *bundle.increments;
    double acc = 0.0;
    std::size_t grid = 1;
    const std::uint32_t steps = cfg.steps();
    for (std::uint32_t s = 0; s < steps; ++s) {
        acc += log.jump_driven_at(s, copy_i) * log.jump_driven_at(s, copy_j);
        if ((s + 1) % cfg.grid_stride == 0 || s + 1 == steps) {
            est.realized[grid] = acc;
            ++grid;
        }
    }
    return est;
}

}  // namespace cmkv
