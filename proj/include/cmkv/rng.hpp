#pragma once

#include <cmath>
#include <cstdint>

#include "cmkv/philox.hpp"

namespace cmkv {

// Randomness channels. Every draw in a simulation is addressed by
// (root seed, replication, channel, sender population, receiver population,
// entity, step, draw index); two distinct addresses never share output.
enum class Channel : std::uint8_t {
    initial = 1,         // nu_0 draws, one per particle/copy
    brownian = 2,        // diffusion increments
    poisson_count = 3,   // event counts per (sender, step)
    poisson_time = 4,    // event times within a step
    poisson_accept = 5,  // thinning uniforms
    mark_sender = 6,     // sender coordinate u^k of the mark vector
    mark_receiver = 7,   // receiver coordinates u^i, one per (receiver, event)
    common_w = 8,        // shared white-noise panel entries
    idio_w = 9,          // per-copy white-noise panel entries
    aux = 10,            // quantizers and other internal draws
};

// Inverse standard normal CDF: Acklam's rational approximation polished with
// two Newton steps through erfc, giving ~1e-15 accuracy over (0,1).
inline double inverse_normal_cdf(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
        double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

// Stateless stream of reproducible draws for one (root seed, replication).
class NoiseStream {
  public:
    NoiseStream(std::uint64_t root_seed, std::uint32_t replication)
        : key_{splitmix64(splitmix64(root_seed) + replication), 0x434D4B56ULL},
          root_seed_(root_seed),
          replication_(replication) {}

    std::uint64_t root_seed() const { return root_seed_; }
    std::uint32_t replication() const { return replication_; }

    std::uint64_t raw(Channel ch, std::uint32_t pop_a, std::uint32_t pop_b,
                      std::uint32_t entity, std::uint32_t step, std::uint32_t draw) const {
        std::array<std::uint64_t, 4> ctr = {
            static_cast<std::uint64_t>(draw), static_cast<std::uint64_t>(step),
            static_cast<std::uint64_t>(entity),
            (static_cast<std::uint64_t>(ch) << 48) |
                (static_cast<std::uint64_t>(pop_a) << 32) |
                (static_cast<std::uint64_t>(pop_b) << 16)};
        return Philox4x64::block(ctr, key_)[0];
    }

    double uniform(Channel ch, std::uint32_t pop_a, std::uint32_t pop_b,
                   std::uint32_t entity, std::uint32_t step, std::uint32_t draw) const {
        return uniform_from_bits(raw(ch, pop_a, pop_b, entity, step, draw));
    }

    double gaussian(Channel ch, std::uint32_t pop_a, std::uint32_t pop_b,
                    std::uint32_t entity, std::uint32_t step, std::uint32_t draw) const {
        return inverse_normal_cdf(uniform(ch, pop_a, pop_b, entity, step, draw));
    }

    // Single-population shorthands (population tags fixed at 0; the multi-
    // population engines pass explicit tags, and population 0 of a one-
    // population run reproduces these streams bit for bit).
    double uniform(Channel ch, std::uint32_t entity, std::uint32_t step,
                   std::uint32_t draw) const {
        return uniform(ch, 0, 0, entity, step, draw);
    }
    double gaussian(Channel ch, std::uint32_t entity, std::uint32_t step,
                    std::uint32_t draw) const {
        return gaussian(ch, 0, 0, entity, step, draw);
    }

  private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t root_seed_;
    std::uint32_t replication_;
};

}  // namespace cmkv
