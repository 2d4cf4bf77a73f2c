#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cmkv {

// Uniformly weighted empirical measure on the line. Samples are sorted once
// at construction; every query after that is read-only, so instances can be
// shared freely across workers.
class EmpiricalMeasure1D {
  public:
    explicit EmpiricalMeasure1D(std::vector<double> samples)
        : samples_(std::move(samples)) {
        if (samples_.empty())
            throw std::invalid_argument("EmpiricalMeasure1D: need at least one sample");
        for (double x : samples_)
            if (!std::isfinite(x))
                throw std::invalid_argument("EmpiricalMeasure1D: non-finite sample");
        std::sort(samples_.begin(), samples_.end());
        init_moments();
    }

    // Caller guarantees the samples are already sorted and finite.
    static EmpiricalMeasure1D from_sorted(std::vector<double> samples) {
        EmpiricalMeasure1D m;
        m.samples_ = std::move(samples);
        m.init_moments();
        return m;
    }

    std::size_t size() const { return samples_.size(); }
    std::span<const double> samples() const { return samples_; }

    // Generalized inverse of the empirical CDF: right-continuous piecewise
    // constant, quantile(p) = x_(ceil(p n)) for p in (0,1], quantile(0) = x_(1).
    double quantile(double p) const {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::domain_error("quantile: p outside [0,1]");
        if (p == 0.0) return samples_.front();
        auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples_.size()))) - 1;
        if (idx >= samples_.size()) idx = samples_.size() - 1;
        return samples_[idx];
    }

    template <typename G>
    double integrate(G&& g) const {
        double acc = 0.0;
        for (double x : samples_) acc += g(x);
        return acc / static_cast<double>(samples_.size());
    }

    double mean() const { return mean_; }
    double abs_mean() const { return abs_mean_; }

  private:
    EmpiricalMeasure1D() = default;

    void init_moments() {
        double s = 0.0, sa = 0.0;
        for (double x : samples_) {
            s += x;
            sa += std::abs(x);
        }
        mean_ = s / static_cast<double>(samples_.size());
        abs_mean_ = sa / static_cast<double>(samples_.size());
    }

    std::vector<double> samples_;
    double mean_ = 0.0;
    double abs_mean_ = 0.0;
};

// Exact W_p (p = 1 or 2) between two empirical measures via the inverse-CDF
// representation, integrating |F^-1 - G^-1|^p over the merged refinement of
// the two quantile partitions. Exact for unequal sample counts as well.
inline double wasserstein(const EmpiricalMeasure1D& m1, const EmpiricalMeasure1D& m2,
                          int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("wasserstein: order must be 1 or 2");
    auto a = m1.samples();
    auto b = m2.samples();
    const auto n = static_cast<double>(a.size());
    const auto m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double u = 0.0, acc = 0.0;
    while (i < a.size() && j < b.size()) {
        const double ca = static_cast<double>(i + 1) / n;
        const double cb = static_cast<double>(j + 1) / m;
        const double c = std::min(ca, cb);
        const double d = std::abs(a[i] - b[j]);
        acc += (c - u) * (order == 1 ? d : d * d);
        u = c;
        if (ca == c) ++i;
        if (cb == c) ++j;
    }
    return order == 1 ? acc : std::sqrt(acc);
}

}  // namespace cmkv
