#pragma once

#include <cstdint>
#include <optional>

#include "cmkv/exec.hpp"
#include "cmkv/model.hpp"
#include "cmkv/trajectory.hpp"

namespace cmkv {

struct LimitSimConfig {
    std::uint32_t n_copies = 2;
    double horizon = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::uint32_t grid_stride = 1;
    std::uint32_t record_increment_copies = 0;  // leading copies to log per step
    // When set, the common white-noise channel reads this replication's stream
    // while everything idiosyncratic follows the run's own replication. Used
    // to sample the conditional law given a frozen common noise.
    std::optional<std::uint32_t> common_replication;
    Exec exec = Exec::serial;

    void validate() const;
    std::uint32_t steps() const;
};

// Which realization of the idiosyncratic martingale-measure term a run used:
// the per-bin white-noise panel, or the law-equivalent single Gaussian that is
// valid when kappa does not depend on the bin coordinate.
enum class IdioPath { panel, collapsed };

// Conditional McKean-Vlasov limit: M exchangeable copies share one common
// white-noise panel per step and own idiosyncratic noise, with the conditional
// law approximated by the copies' empirical measure. Quantile bins align with
// copy order statistics, which makes the panel discretization exact given the
// empirical measure.
TrajectoryBundle simulate_limit(const Model& model, const LimitSimConfig& config,
                                std::uint32_t replication = 0);

IdioPath limit_idio_path(const Model& model);

// Realized vs predicted covariation of the jump-driven increments of a copy
// pair over the full horizon (constant-kernel models only).
struct CovariationEstimate {
    std::vector<double> times;
    std::uint32_t copy_i = 0, copy_j = 1;
    std::vector<double> realized;     // cumulative sum of increment products
    std::vector<double> theoretical;  // (xi^2 or varsigma^2) * int int f dmu ds
};

CovariationEstimate limit_covariance_check(const Model& model, const LimitSimConfig& config,
                                           std::uint32_t copy_i, std::uint32_t copy_j,
                                           std::uint32_t replication = 0);

}  // namespace cmkv
