#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cmkv/nu.hpp"
#include "cmkv/rng.hpp"

namespace cmkv {

// Discretization of the white noise W(dt, dp, dnu1): one Gaussian per
// (quantile bin j, mark atom a) with variance dt * (1/bins) * weight(a).
// The idiosyncratic noises W^i use the degenerate single-atom variant with
// variance dt / bins per bin. Total variance over all entries is dt.
struct WhiteNoisePanel {
    int bins = 0;
    int atoms = 0;
    std::vector<double> entries;  // bins x atoms, row-major

    double& at(int j, int a) { return entries[static_cast<std::size_t>(j) * atoms + a]; }
    double at(int j, int a) const { return entries[static_cast<std::size_t>(j) * atoms + a]; }

    double sum_squares() const {
        double s = 0.0;
        for (double e : entries) s += e * e;
        return s;
    }
};

inline WhiteNoisePanel sample_common_panel(const NoiseStream& s, std::uint32_t pop,
                                           std::uint32_t step, int bins,
                                           const std::vector<Atom>& atoms, double dt) {
    WhiteNoisePanel p;
    p.bins = bins;
    p.atoms = static_cast<int>(atoms.size());
    p.entries.resize(static_cast<std::size_t>(bins) * atoms.size());
    const double inv_bins = 1.0 / static_cast<double>(bins);
    for (int j = 0; j < bins; ++j)
        for (int a = 0; a < p.atoms; ++a)
            p.at(j, a) = s.gaussian(Channel::common_w, pop, 0, static_cast<std::uint32_t>(j),
                                    step, static_cast<std::uint32_t>(a)) *
                         std::sqrt(dt * inv_bins * atoms[static_cast<std::size_t>(a)].weight);
    return p;
}

inline WhiteNoisePanel sample_idio_panel(const NoiseStream& s, std::uint32_t pop_sender,
                                         std::uint32_t pop_receiver, std::uint32_t copy,
                                         std::uint32_t step, int bins, double dt) {
    WhiteNoisePanel p;
    p.bins = bins;
    p.atoms = 1;
    p.entries.resize(static_cast<std::size_t>(bins));
    const double scale = std::sqrt(dt / static_cast<double>(bins));
    for (int j = 0; j < bins; ++j)
        p.entries[static_cast<std::size_t>(j)] =
            s.gaussian(Channel::idio_w, pop_sender, pop_receiver, copy, step,
                       static_cast<std::uint32_t>(j)) *
            scale;
    return p;
}

// Brownian increment over one step of size dt.
inline double brownian_increment(const NoiseStream& s, std::uint32_t pop,
                                 std::uint32_t particle, std::uint32_t step, double dt) {
    return s.gaussian(Channel::brownian, pop, 0, particle, step, 0) * std::sqrt(dt);
}

// Event count of a homogeneous Poisson process at `rate` over an interval of
// length `len` (Knuth's product method; the expected count per step is small).
inline int poisson_count(const NoiseStream& s, std::uint32_t pop, std::uint32_t sender,
                         std::uint32_t step, double rate, double len) {
    const double lambda = rate * len;
    if (!(lambda > 0.0)) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double prod = 1.0;
    for (;;) {
        prod *= s.uniform(Channel::poisson_count, pop, 0, sender, step,
                          static_cast<std::uint32_t>(k));
        if (prod <= limit) return k;
        ++k;
    }
}

// Ordered event times of a homogeneous Poisson process at `rate` on (t0, t1].
inline std::vector<double> poisson_events(const NoiseStream& s, std::uint32_t pop,
                                          std::uint32_t sender, std::uint32_t step,
                                          double rate, double t0, double t1) {
    const int k = poisson_count(s, pop, sender, step, rate, t1 - t0);
    std::vector<double> times(static_cast<std::size_t>(k));
    for (int e = 0; e < k; ++e)
        times[static_cast<std::size_t>(e)] =
            t0 + (t1 - t0) * s.uniform(Channel::poisson_time, pop, 0, sender, step,
                                       static_cast<std::uint32_t>(e));
    std::sort(times.begin(), times.end());
    return times;
}

inline double thinning_uniform(const NoiseStream& s, std::uint32_t pop, std::uint32_t sender,
                               std::uint32_t step, std::uint32_t event) {
    return s.uniform(Channel::poisson_accept, pop, 0, sender, step, event);
}

// Lazily realizes the mark coordinates an event consumes: the sender's own
// coordinate plus one coordinate per receiver, all i.i.d. under the mark law.
inline double sender_mark(const NoiseStream& s, const NuSpec& nu1, std::uint32_t pop,
                          std::uint32_t sender, std::uint32_t step, std::uint32_t event) {
    return nu1.sample(s.uniform(Channel::mark_sender, pop, 0, sender, step, event));
}

inline double receiver_mark(const NoiseStream& s, const NuSpec& nu1, std::uint32_t pop_sender,
                            std::uint32_t pop_receiver, std::uint32_t receiver,
                            std::uint32_t step, std::uint32_t event_index) {
    return nu1.sample(s.uniform(Channel::mark_receiver, pop_sender, pop_receiver, receiver,
                                step, event_index));
}

struct MarkDraw {
    double u_sender;
    std::vector<double> u_receivers;
};

inline MarkDraw draw_marks(const NoiseStream& s, const NuSpec& nu1, std::uint32_t pop,
                           std::uint32_t sender, std::uint32_t step, std::uint32_t event,
                           std::uint32_t event_index, std::size_t n_receivers) {
    MarkDraw d;
    d.u_sender = sender_mark(s, nu1, pop, sender, step, event);
    d.u_receivers.resize(n_receivers);
    for (std::size_t i = 0; i < n_receivers; ++i)
        d.u_receivers[i] = receiver_mark(s, nu1, pop, pop, static_cast<std::uint32_t>(i),
                                         step, event_index);
    return d;
}

}  // namespace cmkv
