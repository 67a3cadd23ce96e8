#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"
#include "mixed_distribution.hpp"

// Goodness-of-fit helpers used by the verification harnesses.

namespace brockwell::stats {

// Kolmogorov-Smirnov distance between the empirical CDF of `xs` and a
// (possibly discontinuous) CDF. At each distinct sample value v the ECDF
// jumps from i/n to j/n while F jumps from F(v-) to F(v); both one-sided gaps
// are compared there, which also covers the stretches between sample values.
inline double ks_distance(std::span<const double> xs, const mixed_distribution& d) {
    if (xs.empty()) throw error("ks_distance: no samples");
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        dist = std::max(dist, std::abs(static_cast<double>(j) / n - d.cdf(s[i])));
        dist = std::max(dist, std::abs(static_cast<double>(i) / n - d.cdf_left(s[i])));
        i = j;
    }
    return dist;
}

inline double ks_uniform_distance(std::span<const double> xs) {
    return ks_distance(xs, mixed_distribution::uniform());
}

// Large-sample critical value sqrt(-log(alpha / 2) / 2) / sqrt(n) of the
// one-sample KS distance.
inline double ks_critical_value(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

// Pearson chi-square statistic of the independence hypothesis on a
// bins x bins contingency table of two samples in [0, 1]. Degrees of freedom
// are (bins - 1)^2.
inline double chi_square_independence(std::span<const double> a, std::span<const double> b, std::size_t bins) {
    if (a.size() != b.size() || a.empty()) throw error("chi_square_independence: bad sample sizes");
    std::vector<double> table(bins * bins, 0.0);
    auto cell = [bins](double v) {
        auto c = static_cast<std::size_t>(v * static_cast<double>(bins));
        return std::min(c, bins - 1);
    };
    for (std::size_t i = 0; i < a.size(); ++i) table[cell(a[i]) * bins + cell(b[i])] += 1.0;
    std::vector<double> rows(bins, 0.0), cols(bins, 0.0);
    for (std::size_t r = 0; r < bins; ++r)
        for (std::size_t c = 0; c < bins; ++c) {
            rows[r] += table[r * bins + c];
            cols[c] += table[r * bins + c];
        }
    const double n = static_cast<double>(a.size());
    double chi2 = 0.0;
    for (std::size_t r = 0; r < bins; ++r)
        for (std::size_t c = 0; c < bins; ++c) {
            const double expected = rows[r] * cols[c] / n;
            if (expected > 0.0) {
                const double diff = table[r * bins + c] - expected;
                chi2 += diff * diff / expected;
            }
        }
    return chi2;
}

// Upper 1% point of chi-square with 9 degrees of freedom (4 x 4 table).
inline constexpr double chi_square_9df_p01 = 21.665994333461924;

} // namespace brockwell::stats
