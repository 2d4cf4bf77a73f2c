#pragma once

#include <cstdint>
#include <vector>

#include "cmkv/finite_system.hpp"
#include "cmkv/limit_system.hpp"

namespace cmkv {

// Realized covariation of the jump terms of particles (i, j) from a finite
// run's jump log, against the constant-kernel closed form (varsigma^2 for
// i = j, xi^2 otherwise) integrated along the recorded empirical measures.
CovariationEstimate estimate_covariation(const Model& model, const TrajectoryBundle& bundle,
                                         std::uint32_t particle_i, std::uint32_t particle_j);

struct ConvergenceRow {
    std::uint32_t n_particles;
    double median_w2;
    double iqr;
    std::uint32_t reps;
    std::uint64_t seed;
};

// W2 between the finite system's terminal empirical measure and a fixed
// per-seed reference limit run (no common-noise pairing; convergence is in
// law). Finite and limit replications use disjoint stream halves.
std::vector<ConvergenceRow> convergence_study(const Model& model,
                                              const std::vector<std::uint32_t>& n_list,
                                              std::uint32_t m_limit, double horizon, double dt,
                                              std::uint32_t reps, std::uint64_t seed,
                                              Exec exec = Exec::serial);

struct MomentAuditRow {
    std::uint32_t n_particles;
    double e_sup_sq;
    double stderr_;
    std::uint32_t reps;
};

struct MomentAuditReport {
    std::vector<MomentAuditRow> rows;
    double spearman_rho = 0.0;
    double p_value = 1.0;  // exact one-sided permutation p for an increasing trend
    bool pass = true;      // p >= 0.05: no significant increasing trend
};

double sup_square_of_particle(const TrajectoryBundle& bundle, std::uint32_t particle);

MomentAuditReport moment_audit(
    const std::vector<std::pair<std::uint32_t, std::vector<double>>>& sup_sq_by_n);

// Orchestrated audit: runs `reps` finite replications per N and audits
// E[sup_t |X^{N,1}|^2] for an increasing trend.
MomentAuditReport moment_audit_run(const Model& model, const std::vector<std::uint32_t>& n_list,
                                   double horizon, double dt, std::uint32_t reps,
                                   std::uint64_t seed, Exec exec = Exec::serial);

}  // namespace cmkv
