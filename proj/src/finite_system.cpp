#include "cmkv/finite_system.hpp"

#include <algorithm>
#include <cmath>

#include "cmkv/noise.hpp"

namespace cmkv {

void FiniteSimConfig::validate() const {
    if (n_particles < 2) throw ConfigError("finite system needs N >= 2");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(horizon >= dt)) throw ConfigError("horizon must be at least dt");
    if (grid_stride < 1) throw ConfigError("grid stride must be >= 1");
    const double s = horizon / dt;
    if (std::abs(s - std::round(s)) > 1e-9)
        throw ConfigError("horizon must be a multiple of dt");
}

std::uint32_t FiniteSimConfig::steps() const {
    return static_cast<std::uint32_t>(std::llround(horizon / dt));
}

namespace {

struct AcceptedEvent {
    double time;
    std::uint32_t sender;
    std::uint32_t local_index;
    double u_sender;
};

}  // namespace

TrajectoryBundle simulate_finite(const Model& model, const FiniteSimConfig& config,
                                 std::uint32_t replication) {
    config.validate();
    const std::uint32_t n = config.n_particles;
    const std::uint32_t steps = config.steps();
    const double dt = config.dt;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    const NoiseStream stream(config.seed, replication);

    std::vector<double> cur(n), next(n), rate_at(n);
    for (std::uint32_t i = 0; i < n; ++i)
        cur[i] = model.nu0().sample(stream.uniform(Channel::initial, i, 0, 0));

    TrajectoryBundle out;
    if (config.record_jump_log) out.jump_log.emplace();
    auto record = [&](double t, double rate_int) {
        out.times.push_back(t);
        out.states.push_back(cur);
        out.rate_integral.push_back(rate_int);
    };
    double rate_integral = 0.0;
    record(0.0, rate_integral);

    std::vector<AcceptedEvent> accepted;
    for (std::uint32_t s = 0; s < steps; ++s) {
        const double t = dt * s;
        std::vector<double> sorted(cur);
        std::sort(sorted.begin(), sorted.end());
        const EmpiricalMeasure1D mu = EmpiricalMeasure1D::from_sorted(std::move(sorted));

        // rates at the frozen left-limit states
        double rate_sum = 0.0;
        for (std::uint32_t k = 0; k < n; ++k) {
            rate_at[k] = model.checked_rate(cur[k], mu);
            rate_sum += rate_at[k];
        }
        rate_integral += dt * rate_sum / static_cast<double>(n);

        // diffusion phase, independent given the frozen measure
        const bool par = config.exec == Exec::openmp;
#pragma omp parallel for schedule(static) if (par)
        for (std::uint32_t i = 0; i < n; ++i) {
            next[i] = cur[i] + model.drift(cur[i], mu) * dt +
                      model.diffusion(cur[i], mu) * brownian_increment(stream, 0, i, s, dt);
        }

        // thinned events at bound rate, accepted with probability f/f_max
        accepted.clear();
        for (std::uint32_t k = 0; k < n; ++k) {
            const int count = poisson_count(stream, 0, k, s, model.rate_bound(), dt);
            for (int e = 0; e < count; ++e) {
                const double te = t + dt * stream.uniform(Channel::poisson_time, 0, 0, k, s,
                                                          static_cast<std::uint32_t>(e));
                if (stream.uniform(Channel::poisson_accept, 0, 0, k, s,
                                   static_cast<std::uint32_t>(e)) *
                        model.rate_bound() <=
                    rate_at[k])
                    accepted.push_back({te, k, static_cast<std::uint32_t>(e), 0.0});
            }
        }
        std::stable_sort(accepted.begin(), accepted.end(),
                         [](const AcceptedEvent& a, const AcceptedEvent& b) {
                             if (a.time != b.time) return a.time < b.time;
                             if (a.sender != b.sender) return a.sender < b.sender;
                             return a.local_index < b.local_index;
                         });
        for (AcceptedEvent& ev : accepted)
            ev.u_sender = sender_mark(stream, model.nu1(), 0, ev.sender, s, ev.local_index);

        std::vector<JumpEvent> step_log;
        if (out.jump_log) {
            step_log.resize(accepted.size());
            for (std::size_t g = 0; g < accepted.size(); ++g) {
                step_log[g].time = accepted[g].time;
                step_log[g].sender = accepted[g].sender;
                step_log[g].receiver_increments.assign(n, 0.0);
            }
        }

        if (!accepted.empty()) {
#pragma omp parallel for schedule(static) if (par)
            for (std::uint32_t i = 0; i < n; ++i) {
                double jsum = 0.0;
                for (std::size_t g = 0; g < accepted.size(); ++g) {
                    const AcceptedEvent& ev = accepted[g];
                    if (ev.sender == i) continue;  // no auto-interaction
                    const double ui = receiver_mark(stream, model.nu1(), 0, 0, i, s,
                                                    static_cast<std::uint32_t>(g));
                    const double incr =
                        inv_sqrt_n *
                        model.jump(cur[ev.sender], cur[i], mu, ev.u_sender, ui);
                    jsum += incr;
                    if (out.jump_log) step_log[g].receiver_increments[i] = incr;
                }
                next[i] += jsum;
            }
        }

        for (std::uint32_t i = 0; i < n; ++i)
            if (!std::isfinite(next[i])) throw NumericalError("non-finite state", s);

        cur.swap(next);
        if (out.jump_log)
            for (auto& ev : step_log) out.jump_log->push_back(std::move(ev));
        if ((s + 1) % config.grid_stride == 0 || s + 1 == steps)
            record(dt * (s + 1), rate_integral);
    }
    return out;
}

}  // namespace cmkv
