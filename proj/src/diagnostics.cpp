#include "cmkv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cmkv/stats.hpp"

namespace cmkv {

CovariationEstimate estimate_covariation(const Model& model, const TrajectoryBundle& bundle,
                                         std::uint32_t particle_i, std::uint32_t particle_j) {
    if (!bundle.jump_log) throw std::invalid_argument("estimate_covariation: missing jump log");
    const auto [varsigma_sq, xi_sq] = model.sigma_xi_pair();
    const double factor = particle_i == particle_j ? varsigma_sq : xi_sq;

    CovariationEstimate est;
    est.copy_i = particle_i;
    est.copy_j = particle_j;
    est.times = bundle.times;
    est.theoretical.resize(bundle.times.size());
    for (std::size_t g = 0; g < bundle.times.size(); ++g)
        est.theoretical[g] = factor * bundle.rate_integral[g];

    est.realized.assign(bundle.times.size(), 0.0);
    double acc = 0.0;
    std::size_t ev = 0;
    const auto& log = *bundle.jump_log;
    for (std::size_t g = 0; g < bundle.times.size(); ++g) {
        while (ev < log.size() && log[ev].time <= bundle.times[g]) {
            acc += log[ev].receiver_increments[particle_i] *
                   log[ev].receiver_increments[particle_j];
            ++ev;
        }
        est.realized[g] = acc;
    }
    return est;
}

std::vector<ConvergenceRow> convergence_study(const Model& model,
                                              const std::vector<std::uint32_t>& n_list,
                                              std::uint32_t m_limit, double horizon, double dt,
                                              std::uint32_t reps, std::uint64_t seed,
                                              Exec exec) {
    if (n_list.empty()) throw std::invalid_argument("convergence_study: empty N list");
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw std::invalid_argument("convergence_study: N list must be ascending");
    if (m_limit < *std::max_element(n_list.begin(), n_list.end()))
        throw std::invalid_argument("convergence_study: M_limit below max N");

    // one fixed reference limit run per seed pair; replication ids are shared
    // with the finite runs, so initial draws coincide on the common prefix
    // (engine channels are otherwise disjoint; no common-noise pairing)
    const auto steps = static_cast<std::uint32_t>(std::llround(horizon / dt));
    std::vector<std::vector<double>> ref_terminal(reps);
    LimitSimConfig lim;
    lim.n_copies = m_limit;
    lim.horizon = horizon;
    lim.dt = dt;
    lim.seed = seed;
    lim.grid_stride = steps;
    lim.exec = exec;
    for (std::uint32_t r = 0; r < reps; ++r)
        ref_terminal[r] = simulate_limit(model, lim, r).states.back();

    std::vector<ConvergenceRow> rows;
    for (std::uint32_t n : n_list) {
        FiniteSimConfig fin;
        fin.n_particles = n;
        fin.horizon = horizon;
        fin.dt = dt;
        fin.seed = seed;
        fin.grid_stride = steps;
        fin.exec = exec;
        std::vector<double> w2s(reps);
        for (std::uint32_t r = 0; r < reps; ++r) {
            const TrajectoryBundle fb = simulate_finite(model, fin, r);
            w2s[r] = wasserstein(EmpiricalMeasure1D(fb.states.back()),
                                 EmpiricalMeasure1D(ref_terminal[r]), 2);
        }
        rows.push_back({n, median(w2s), interquartile_range(w2s), reps, seed});
    }
    return rows;
}

double sup_square_of_particle(const TrajectoryBundle& bundle, std::uint32_t particle) {
    double sup = 0.0;
    for (const auto& row : bundle.states)
        sup = std::max(sup, row[particle] * row[particle]);
    return sup;
}

MomentAuditReport moment_audit(
    const std::vector<std::pair<std::uint32_t, std::vector<double>>>& sup_sq_by_n) {
    if (sup_sq_by_n.size() < 3)
        throw std::invalid_argument("moment_audit: need at least three N values");
    MomentAuditReport report;
    std::vector<double> estimates;
    for (const auto& [n, samples] : sup_sq_by_n) {
        const MeanStderr ms = mean_stderr(samples);
        report.rows.push_back({n, ms.mean, ms.stderr_, static_cast<std::uint32_t>(ms.n)});
        estimates.push_back(ms.mean);
    }
    report.spearman_rho = spearman_rho(estimates);
    report.p_value = spearman_trend_p(estimates);
    report.pass = report.p_value >= 0.05;
    return report;
}

MomentAuditReport moment_audit_run(const Model& model, const std::vector<std::uint32_t>& n_list,
                                   double horizon, double dt, std::uint32_t reps,
                                   std::uint64_t seed, Exec exec) {
    std::vector<std::pair<std::uint32_t, std::vector<double>>> samples;
    for (std::uint32_t n : n_list) {
        FiniteSimConfig fin;
        fin.n_particles = n;
        fin.horizon = horizon;
        fin.dt = dt;
        fin.seed = seed;
        fin.exec = exec;
        std::vector<double> sup(reps);
        for (std::uint32_t r = 0; r < reps; ++r)
            sup[r] = sup_square_of_particle(simulate_finite(model, fin, r), 0);
        samples.emplace_back(n, std::move(sup));
    }
    return moment_audit(samples);
}

}  // namespace cmkv
