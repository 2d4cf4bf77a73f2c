#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cmkv/rng.hpp"

namespace cmkv {

struct Atom {
    double value;
    double weight;
};

// Mark law nu_1. The product measure nu = nu_1^(x)N* over the infinite mark
// space is never materialized: each jump event draws exactly the coordinates
// it consumes (sender's plus one per receiver), i.i.d. nu_1.
class NuSpec {
  public:
    // law of a single coordinate given one uniform in (0,1)
    using InverseCdf = std::function<double(double)>;

    static NuSpec discrete(std::vector<Atom> atoms) {
        if (atoms.empty()) throw std::invalid_argument("nu1: no atoms");
        double total = 0.0;
        for (const Atom& a : atoms) {
            if (!(a.weight > 0.0)) throw std::invalid_argument("nu1: weights must be positive");
            total += a.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("nu1: weights must sum to 1 within 1e-12");
        NuSpec s;
        s.atoms_ = std::move(atoms);
        s.discrete_ = true;
        return s;
    }

    static NuSpec rademacher() { return discrete({{-1.0, 0.5}, {1.0, 0.5}}); }

    static NuSpec continuous(InverseCdf inv_cdf, std::string label) {
        if (!inv_cdf) throw std::invalid_argument("nu1: null sampler");
        NuSpec s;
        s.inv_cdf_ = std::move(inv_cdf);
        s.label_ = std::move(label);
        s.discrete_ = false;
        return s;
    }

    bool is_discrete() const { return discrete_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::string& label() const { return label_; }

    double sample(double uniform01) const {
        if (discrete_) {
            double acc = 0.0;
            for (const Atom& a : atoms_) {
                acc += a.weight;
                if (uniform01 <= acc) return a.value;
            }
            return atoms_.back().value;
        }
        return inv_cdf_(uniform01);
    }

    double mean() const {
        if (discrete_) {
            double s = 0.0;
            for (const Atom& a : atoms_) s += a.value * a.weight;
            return s;
        }
        return quantize(64).mean_of_atoms();
    }

    // Equal-probability quantization of a continuous law into V atoms placed
    // at bin conditional means, estimated from a fixed 10^6-draw sample. Bin
    // means preserve the sample mean exactly, which anchors the centering and
    // kappa^2 quadratures built on the quantized atoms.
    struct Quantized {
        std::vector<Atom> atoms;
        double sample_mean = 0.0;  // mean of the underlying Monte-Carlo draw
        double mean_of_atoms() const {
            double s = 0.0;
            for (const Atom& a : atoms) s += a.value * a.weight;
            return s;
        }
    };

    Quantized quantize(int resolution) const;

  private:
    NuSpec() = default;

    bool discrete_ = true;
    std::vector<Atom> atoms_;
    InverseCdf inv_cdf_;
    std::string label_;
};

inline NuSpec::Quantized NuSpec::quantize(int resolution) const {
    if (resolution < 1) throw std::invalid_argument("quantize: resolution must be >= 1");
    Quantized out;
    if (discrete_) {
        out.atoms = atoms_;
        out.sample_mean = mean();
        return out;
    }
    constexpr std::size_t kSamples = 1'000'000;
    const NoiseStream qs(0x6e75712dULL, 0);  // fixed internal quantizer stream
    std::vector<double> xs(kSamples);
    double total = 0.0;
    for (std::size_t i = 0; i < kSamples; ++i) {
        xs[i] = inv_cdf_(qs.uniform(Channel::aux, 0, 0, static_cast<std::uint32_t>(i)));
        total += xs[i];
    }
    out.sample_mean = total / static_cast<double>(kSamples);
    std::sort(xs.begin(), xs.end());
    out.atoms.resize(static_cast<std::size_t>(resolution));
    const std::size_t per = kSamples / static_cast<std::size_t>(resolution);
    for (int b = 0; b < resolution; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * per;
        const std::size_t hi = (b + 1 == resolution) ? kSamples : lo + per;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += xs[i];
        out.atoms[static_cast<std::size_t>(b)] = {
            s / static_cast<double>(hi - lo),
            static_cast<double>(hi - lo) / static_cast<double>(kSamples)};
    }
    return out;
}

// Initial law nu_0: a named sampler with finite second moment.
class Nu0 {
  public:
    static Nu0 normal(double mean, double sd) {
        Nu0 n;
        n.sampler_ = [mean, sd](double u) { return mean + sd * inverse_normal_cdf(u); };
        n.label_ = "normal";
        return n;
    }
    static Nu0 uniform(double a, double b) {
        Nu0 n;
        n.sampler_ = [a, b](double u) { return a + (b - a) * u; };
        n.label_ = "uniform";
        return n;
    }
    static Nu0 point(double c) {
        Nu0 n;
        n.sampler_ = [c](double) { return c; };
        n.label_ = "point";
        return n;
    }
    static Nu0 discrete(NuSpec spec) {
        Nu0 n;
        n.sampler_ = [spec = std::move(spec)](double u) { return spec.sample(u); };
        n.label_ = "discrete";
        return n;
    }

    double sample(double uniform01) const { return sampler_(uniform01); }
    const std::string& label() const { return label_; }

  private:
    std::function<double(double)> sampler_;
    std::string label_;
};

}  // namespace cmkv
