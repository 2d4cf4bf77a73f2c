#pragma once

#include <span>
#include <vector>

#include "cmkv/noise.hpp"

namespace cmkv {

// Shared building blocks of the limit-system step, used by the direct
// simulator, the Picard iteration and the multi-population engine so that
// reductions happen in one canonical order everywhere.

// Common-noise increment when psi_tilde does not depend on (x, y, m):
// sum_j sqrt(f(q_j)) * sum_a psi_tilde(v_a) * G[j][a].
inline double common_increment_shared(const WhiteNoisePanel& panel,
                                      std::span<const double> sqrt_rate,
                                      std::span<const double> psi_tilde_atoms) {
    double total = 0.0;
    for (int j = 0; j < panel.bins; ++j) {
        double inner = 0.0;
        for (int a = 0; a < panel.atoms; ++a)
            inner += psi_tilde_atoms[static_cast<std::size_t>(a)] * panel.at(j, a);
        total += sqrt_rate[static_cast<std::size_t>(j)] * inner;
    }
    return total;
}

// Generic common-noise increment for one copy at state y:
// sum_{j,a} sqrt(f(q_j)) * psi_tilde(q_j, y, v_a) * G[j][a].
template <typename PsiTildeAt>  // (bin j, atom a) -> psi_tilde(q_j, y, ., v_a)
inline double common_increment_generic(const WhiteNoisePanel& panel,
                                       std::span<const double> sqrt_rate,
                                       PsiTildeAt&& psi_tilde_at) {
    double total = 0.0;
    for (int j = 0; j < panel.bins; ++j) {
        double inner = 0.0;
        for (int a = 0; a < panel.atoms; ++a) inner += psi_tilde_at(j, a) * panel.at(j, a);
        total += sqrt_rate[static_cast<std::size_t>(j)] * inner;
    }
    return total;
}

// Idiosyncratic increment with the per-bin panel kept:
// sum_j sqrt(f(q_j)) * kappa(q_j, y) * H[j].
template <typename KappaAt>  // (bin j) -> kappa(q_j, y, .)
inline double idio_increment_panel(const WhiteNoisePanel& panel,
                                   std::span<const double> sqrt_rate, KappaAt&& kappa_at) {
    double total = 0.0;
    for (int j = 0; j < panel.bins; ++j)
        total += sqrt_rate[static_cast<std::size_t>(j)] * kappa_at(j) *
                 panel.entries[static_cast<std::size_t>(j)];
    return total;
}

}  // namespace cmkv
