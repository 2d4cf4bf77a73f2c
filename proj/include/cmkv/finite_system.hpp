#pragma once

#include <cstdint>
#include <memory>

#include "cmkv/exec.hpp"
#include "cmkv/model.hpp"
#include "cmkv/trajectory.hpp"

namespace cmkv {

struct FiniteSimConfig {
    std::uint32_t n_particles = 2;
    double horizon = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::uint32_t grid_stride = 1;  // record every k-th step (t=0 and T always)
    bool record_jump_log = false;
    Exec exec = Exec::serial;

    void validate() const;
    std::uint32_t steps() const;
};

// Euler scheme for the N-particle system: diffusion plus Poisson-thinned
// simultaneous jumps, one sender event moving every other particle by
// N^{-1/2} Psi evaluated at left-limit states. Coefficients and the empirical
// measure are frozen at the step's left endpoint (weak order 1).
TrajectoryBundle simulate_finite(const Model& model, const FiniteSimConfig& config,
                                 std::uint32_t replication = 0);

}  // namespace cmkv
