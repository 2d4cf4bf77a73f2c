#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace cmkv {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr r;
    r.n = xs.size();
    if (r.n == 0) return r;
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(r.n);
    if (r.n < 2) return r;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    return r;
}

inline double sample_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("sample_correlation: need two equal-length series");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_n - G_m|.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto n = static_cast<double>(a.size());
    const auto m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;  // step over ties together
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

// Rejection threshold for the two-sample KS test at level alpha.
inline double ks_threshold(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

namespace detail {
// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // Lentz continued fraction for Q(a,x)
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}
}  // namespace detail

// Survival function of the chi-square distribution with k dof.
inline double chi2_sf(double x, double k) {
    return 1.0 - detail::gamma_p(k / 2.0, x / 2.0);
}

// Two-sample chi-square homogeneity test over integer-valued observations.
// Bins are pooled from both samples; sparse tail bins are merged so every
// expected count is at least 5. Returns the p-value.
inline double chi2_homogeneity_p(std::span<const int> a, std::span<const int> b) {
    int hi = 0;
    for (int v : a) hi = std::max(hi, v);
    for (int v : b) hi = std::max(hi, v);
    std::vector<double> ca(hi + 1, 0.0), cb(hi + 1, 0.0);
    for (int v : a) ca[v] += 1.0;
    for (int v : b) cb[v] += 1.0;
    // merge bins until pooled expected counts are reasonable
    std::vector<std::pair<double, double>> bins;
    double acc_a = 0.0, acc_b = 0.0;
    for (int v = 0; v <= hi; ++v) {
        acc_a += ca[v];
        acc_b += cb[v];
        if (acc_a + acc_b >= 10.0) {
            bins.emplace_back(acc_a, acc_b);
            acc_a = acc_b = 0.0;
        }
    }
    if (acc_a + acc_b > 0.0) {
        if (bins.empty())
            bins.emplace_back(acc_a, acc_b);
        else {
            bins.back().first += acc_a;
            bins.back().second += acc_b;
        }
    }
    if (bins.size() < 2) return 1.0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double chi2 = 0.0;
    for (auto& [oa, ob] : bins) {
        const double tot = oa + ob;
        const double ea = tot * na / (na + nb);
        const double eb = tot * nb / (na + nb);
        chi2 += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    return chi2_sf(chi2, static_cast<double>(bins.size() - 1));
}

// Spearman rank correlation of xs against the index order 0..n-1.
inline double spearman_rho(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
    std::vector<double> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[idx[r]] = static_cast<double>(r + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rank[i] - static_cast<double>(i + 1);
        s += d * d;
    }
    const auto dn = static_cast<double>(n);
    return 1.0 - 6.0 * s / (dn * (dn * dn - 1.0));
}

// Exact one-sided permutation p-value for an increasing trend (n <= 8).
inline double spearman_trend_p(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 3 || n > 8) throw std::invalid_argument("spearman_trend_p: need 3 <= n <= 8");
    const double obs = spearman_rho(xs);
    std::vector<double> perm(xs.begin(), xs.end());
    std::sort(perm.begin(), perm.end());
    std::size_t count = 0, total = 0;
    do {
        ++total;
        if (spearman_rho(perm) >= obs - 1e-12) ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(count) / static_cast<double>(total);
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double interquartile_range(std::vector<double> xs) {
    if (xs.size() < 2) return 0.0;
    std::sort(xs.begin(), xs.end());
    auto q = [&](double p) {
        const double h = p * static_cast<double>(xs.size() - 1);
        const auto lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, xs.size() - 1);
        return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
    };
    return q(0.75) - q(0.25);
}

}  // namespace cmkv
