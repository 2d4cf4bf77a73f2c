#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cmkv/limit_system.hpp"

namespace cmkv {

// One Picard iterate: the full dt-grid trajectory of every copy, plus the
// contraction gaps measured while producing it. Iterate 0 is the initial draw
// frozen in time. All noise is frozen across iterates (draw addresses carry no
// iterate index), so the scheme contracts pathwise and its fixed point is the
// direct Euler run on the same stream.
struct PicardState {
    std::uint32_t n = 0;
    std::vector<std::vector<double>> trajectory;  // (steps+1) x copies
    // gaps[k][s] estimates E[(X^[k+1]_t - X^[k]_t)^2] at grid step s
    std::vector<std::vector<double>> gaps;
};

PicardState picard_init(const Model& model, const LimitSimConfig& config,
                        std::uint32_t replication = 0);

// Advances iterate n to n+1 with coefficients evaluated on iterate n.
void picard_step(const Model& model, const LimitSimConfig& config, PicardState& state,
                 std::uint32_t replication = 0);

struct PicardReport {
    std::vector<std::vector<double>> gap_paths;  // per iterate, full grid
    std::vector<double> gap_terminal;            // u^[n](T) per iterate
    double w2_vs_direct = 0.0;  // terminal W2 against simulate_limit, same stream
};

std::pair<TrajectoryBundle, PicardReport> picard_solve(const Model& model,
                                                       const LimitSimConfig& config,
                                                       std::uint32_t n_iter,
                                                       std::uint32_t replication = 0);

}  // namespace cmkv
