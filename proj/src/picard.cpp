#include "cmkv/picard.hpp"

#include <cmath>

#include "cmkv/limit_step.hpp"

namespace cmkv {

PicardState picard_init(const Model& model, const LimitSimConfig& config,
                        std::uint32_t replication) {
    config.validate();
    const NoiseStream stream(config.seed, replication);
    std::vector<double> x0(config.n_copies);
    for (std::uint32_t i = 0; i < config.n_copies; ++i)
        x0[i] = model.nu0().sample(stream.uniform(Channel::initial, i, 0, 0));
    PicardState st;
    st.n = 0;
    st.trajectory.assign(config.steps() + 1, x0);  // X^[0]_t := X_0
    return st;
}

void picard_step(const Model& model, const LimitSimConfig& config, PicardState& state,
                 std::uint32_t replication) {
    const std::uint32_t steps = config.steps();
    const std::uint32_t m_copies = config.n_copies;
    const NoiseStream stream(config.seed, replication);
    const NoiseStream common_stream(config.seed,
                                    config.common_replication.value_or(replication));

    std::vector<std::vector<double>> next(steps + 1);
    next[0] = state.trajectory[0];
    std::vector<double> incr(m_copies);
    std::vector<double> gap(steps + 1, 0.0);
    for (std::uint32_t s = 0; s < steps; ++s) {
        limit_step_increments(model, stream, common_stream, s, config.dt,
                              state.trajectory[s], config.exec, incr);
        next[s + 1].resize(m_copies);
        double g = 0.0;
        for (std::uint32_t i = 0; i < m_copies; ++i) {
            const double v = next[s][i] + incr[i];
            if (!std::isfinite(v)) throw NumericalError("non-finite state", s);
            next[s + 1][i] = v;
            const double d = v - state.trajectory[s + 1][i];
            g += d * d;
        }
        gap[s + 1] = g / static_cast<double>(m_copies);
    }
    if (!state.gaps.empty()) {
        const double prev_gap = state.gaps.back().back();
        if (prev_gap > 0.0 && gap.back() > 10.0 * prev_gap)
            throw ModelError("divergence: check Lipschitz scale");
    }
    state.gaps.push_back(std::move(gap));
    state.trajectory = std::move(next);
    state.n += 1;
}

std::pair<TrajectoryBundle, PicardReport> picard_solve(const Model& model,
                                                       const LimitSimConfig& config,
                                                       std::uint32_t n_iter,
                                                       std::uint32_t replication) {
    if (n_iter < 1) throw ConfigError("picard needs at least one iteration");
    PicardState st = picard_init(model, config, replication);
    for (std::uint32_t n = 0; n < n_iter; ++n) picard_step(model, config, st, replication);

    TrajectoryBundle bundle;
    const std::uint32_t steps = config.steps();
    for (std::uint32_t s = 0; s <= steps; ++s) {
        if (s == 0 || s % config.grid_stride == 0 || s == steps) {
            bundle.times.push_back(config.dt * s);
            bundle.states.push_back(st.trajectory[s]);
            bundle.rate_integral.push_back(0.0);
        }
    }

    PicardReport report;
    report.gap_paths = st.gaps;
    for (const auto& g : st.gaps) report.gap_terminal.push_back(g.back());

    const TrajectoryBundle direct = simulate_limit(model, config, replication);
    report.w2_vs_direct =
        wasserstein(EmpiricalMeasure1D(st.trajectory.back()),
                    EmpiricalMeasure1D(direct.states.back()), 2);
    return {std::move(bundle), std::move(report)};
}

}  // namespace cmkv
