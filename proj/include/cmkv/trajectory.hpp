#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cmkv/measure.hpp"

namespace cmkv {

// Numerical abort carrying the offending step.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what, std::uint32_t step_index)
        : std::runtime_error(what + " at step " + std::to_string(step_index)),
          step(step_index) {}
    std::uint32_t step;
};

struct JumpEvent {
    double time;
    std::uint32_t sender_pop = 0;
    std::uint32_t sender;
    std::vector<double> receiver_increments;  // one slot per particle, 0 at the sender
};

// Per-step noise decomposition for selected copies of a limit run.
struct IncrementLog {
    std::uint32_t steps = 0;
    std::uint32_t copies = 0;  // number of recorded copies (leading copy ids)
    std::vector<double> drift, diffusion, common, idio;  // step-major [s * copies + c]

    double common_at(std::uint32_t s, std::uint32_t c) const { return common[s * copies + c]; }
    double idio_at(std::uint32_t s, std::uint32_t c) const { return idio[s * copies + c]; }
    double jump_driven_at(std::uint32_t s, std::uint32_t c) const {
        return common[s * copies + c] + idio[s * copies + c];
    }
};

// Observation-grid states of one replication plus optional event-level logs.
struct TrajectoryBundle {
    std::vector<double> times;                // observation grid
    std::vector<std::vector<double>> states;  // times x particles
    std::optional<std::vector<JumpEvent>> jump_log;
    std::optional<IncrementLog> increments;
    std::vector<double> rate_integral;  // per grid time: int_0^t int f dmu ds (left Riemann)

    std::size_t n_particles() const { return states.empty() ? 0 : states.front().size(); }

    std::size_t grid_index(double t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::abs(times[i] - t) <= 1e-12 * (1.0 + std::abs(t))) return i;
        throw std::invalid_argument("time not on the output grid");
    }

    EmpiricalMeasure1D empirical(double t) const {
        return EmpiricalMeasure1D(states[grid_index(t)]);
    }
};

// The spec's empirical_path operation.
inline EmpiricalMeasure1D empirical_path(const TrajectoryBundle& bundle, double t) {
    return bundle.empirical(t);
}

}  // namespace cmkv
