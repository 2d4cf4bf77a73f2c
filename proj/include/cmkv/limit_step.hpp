#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cmkv/exec.hpp"
#include "cmkv/limit_kernels.hpp"
#include "cmkv/model.hpp"
#include "cmkv/trajectory.hpp"

namespace cmkv {

struct LimitStepResult {
    double rate_mean = 0.0;
};

// One Euler step of the limit system, factored so the direct simulator and
// the Picard iteration evaluate identical arithmetic: coefficients, quantile
// bins and panels all come from `coef_states` (the current states for the
// direct scheme, the previous iterate for Picard), while the caller owns the
// trajectory the increments are added to. Draws are addressed by (step, copy,
// bin) only, so a Picard pass with the same stream re-reads the same noise.
inline LimitStepResult limit_step_increments(const Model& model, const NoiseStream& stream,
                                             const NoiseStream& common_stream,
                                             std::uint32_t step, double dt,
                                             std::span<const double> coef_states, Exec exec,
                                             std::span<double> increments_out,
                                             IncrementLog* log = nullptr) {
    const auto m_copies = static_cast<std::uint32_t>(coef_states.size());
    const std::vector<Atom>& atoms = model.mark_atoms();
    const bool skip_common = model.psi_tilde_known_zero();
    const bool shared_common = model.psi_state_independent();
    const bool collapse_idio = model.psi_state_independent();

    std::vector<double> sorted(coef_states.begin(), coef_states.end());
    std::sort(sorted.begin(), sorted.end());
    const EmpiricalMeasure1D mu = EmpiricalMeasure1D::from_sorted(std::move(sorted));
    const auto qs = mu.samples();  // bin j realizes F^{-1} at (j + 1/2)/M

    std::vector<double> sqrt_rate(m_copies);
    double rate_sum = 0.0;
    for (std::uint32_t j = 0; j < m_copies; ++j) {
        const double f = model.checked_rate(qs[j], mu);
        sqrt_rate[j] = std::sqrt(f);
        rate_sum += f;
    }
    const double rate_mean = rate_sum / static_cast<double>(m_copies);

    WhiteNoisePanel common_panel;
    std::vector<double> psi_tilde_atoms;
    double shared_increment = 0.0;
    if (!skip_common) {
        common_panel =
            sample_common_panel(common_stream, 0, step, static_cast<int>(m_copies), atoms, dt);
        if (shared_common) {
            psi_tilde_atoms.resize(atoms.size());
            for (std::size_t a = 0; a < atoms.size(); ++a)
                psi_tilde_atoms[a] = model.psi_tilde(0.0, 0.0, mu, atoms[a].value);
            shared_increment =
                common_increment_shared(common_panel, sqrt_rate, psi_tilde_atoms);
        }
    }
    const double kappa_const =
        collapse_idio ? std::sqrt(model.kappa_sq(0.0, 0.0, mu)) : 0.0;
    const double collapsed_scale = std::sqrt(dt * rate_mean);

    const std::uint32_t rec_copies = log ? log->copies : 0;
    const bool par = exec == Exec::openmp;
#pragma omp parallel for schedule(static) if (par)
    for (std::uint32_t i = 0; i < m_copies; ++i) {
        const double x = coef_states[i];
        const double drift = model.drift(x, mu) * dt;
        const double diff =
            model.diffusion(x, mu) * brownian_increment(stream, 0, i, step, dt);
        double common = 0.0;
        if (!skip_common) {
            common = shared_common
                         ? shared_increment
                         : common_increment_generic(common_panel, sqrt_rate, [&](int j, int a) {
                               return model.psi_tilde(qs[static_cast<std::size_t>(j)], x, mu,
                                                      atoms[static_cast<std::size_t>(a)].value);
                           });
        }
        double idio;
        if (collapse_idio) {
            idio = kappa_const * collapsed_scale * stream.gaussian(Channel::idio_w, i, step, 0);
        } else {
            const WhiteNoisePanel h =
                sample_idio_panel(stream, 0, 0, i, step, static_cast<int>(m_copies), dt);
            idio = idio_increment_panel(h, sqrt_rate, [&](int j) {
                return std::sqrt(model.kappa_sq(qs[static_cast<std::size_t>(j)], x, mu));
            });
        }
        double incr = drift;
        incr += diff;
        incr += common;
        incr += idio;
        increments_out[i] = incr;
        if (log && i < rec_copies) {
            const std::size_t at = static_cast<std::size_t>(step) * rec_copies + i;
            log->drift[at] = drift;
            log->diffusion[at] = diff;
            log->common[at] = common;
            log->idio[at] = idio;
        }
    }
    return {rate_mean};
}

}  // namespace cmkv
