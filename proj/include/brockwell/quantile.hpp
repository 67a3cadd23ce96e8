#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"
#include "mixed_distribution.hpp"
#include "random.hpp"

namespace brockwell {

namespace detail {

// Monotone bijection between doubles (minus NaN, with -0 folded into +0) and
// unsigned integers.
inline std::uint64_t ordered_key(double x) {
    const auto u = std::bit_cast<std::uint64_t>(x + 0.0);
    return (u >> 63) ? ~u : (u | (1ULL << 63));
}

inline double from_ordered_key(std::uint64_t k) {
    const std::uint64_t u = (k >> 63) ? (k & ~(1ULL << 63)) : ~k;
    return std::bit_cast<double>(u);
}

// Smallest double x in (lo, hi] with pred(x), given !pred(lo) and pred(hi).
template <typename Pred>
double first_true(double lo, double hi, Pred pred) {
    std::uint64_t a = ordered_key(lo);
    std::uint64_t b = ordered_key(hi);
    while (b - a > 1) {
        const std::uint64_t mid = a + (b - a) / 2;
        if (pred(from_ordered_key(mid))) b = mid; else a = mid;
    }
    return from_ordered_key(b);
}

// Largest double x in [lo, hi) with pred(x), given pred(lo) and !pred(hi).
template <typename Pred>
double last_true(double lo, double hi, Pred pred) {
    std::uint64_t a = ordered_key(lo);
    std::uint64_t b = ordered_key(hi);
    while (b - a > 1) {
        const std::uint64_t mid = a + (b - a) / 2;
        if (pred(from_ordered_key(mid))) a = mid; else b = mid;
    }
    return from_ordered_key(a);
}

inline void check_level(double y) {
    if (!(y > 0.0 && y < 1.0))
        throw domain_error("quantile level must lie strictly inside (0, 1), got " + std::to_string(y));
}

} // namespace detail

// Left-continuous inverse inf{x : F(x) >= y}.
//
// The infimum is taken over doubles against the same floating-point F that
// cdf() evaluates, so F(x) >= y <=> q_left(y) <= x holds exactly for every
// double x.
inline double q_left(const mixed_distribution& d, double y) {
    detail::check_level(y);
    const auto b = d.breakpoints();
    std::size_t k = 0;
    while (d.right_value(k) < y) ++k;
    if (k == 0 || d.left_value(k) < y) return b[k];
    return detail::first_true(b[k - 1], b[k], [&](double x) { return d.cdf(x) >= y; });
}

// Right-continuous inverse sup{x : F(x) <= y}.
//
// When {F <= y} stops just short of a breakpoint whose left limit is still
// <= y (the jump case), the supremum is that breakpoint. Otherwise it is the
// largest double with F(x) <= y, except when the computed F steps over y
// between two adjacent doubles: the real supremum then lies between them and
// the upper one is returned, which keeps q_left(y) <= q_right(y).
inline double q_right(const mixed_distribution& d, double y) {
    detail::check_level(y);
    const auto b = d.breakpoints();
    if (d.right_value(0) > y) return b[0];
    std::size_t k = 0;
    while (k + 1 < b.size() && d.right_value(k + 1) <= y) ++k;
    if (d.left_value(k + 1) <= y) return b[k + 1];
    const double a = detail::last_true(b[k], b[k + 1], [&](double x) { return d.cdf(x) <= y; });
    if (d.cdf(a) < y) return std::nextafter(a, b[k + 1]);
    return a;
}

// One side of an interval with open/closed ends.
struct interval {
    double lower;
    double upper;
    bool lower_closed;
    bool upper_closed;

    bool contains(double x) const {
        const bool above = lower_closed ? x >= lower : x > lower;
        const bool below = upper_closed ? x <= upper : x < upper;
        return above && below;
    }
};

// A level y in (0, 1) on which F is flat over a nondegenerate interval:
// lo = q_left(y) < hi = q_right(y), and F == y on (lo, hi).
struct flat_interval {
    double level;
    double lo;
    double hi;

    // Points of G where q_left(F(x)) < x: (lo, hi] if F is continuous at hi,
    // (lo, hi) if F jumps there.
    interval e1(const mixed_distribution& d) const {
        return {lo, hi, false, d.jump(hi) == 0.0};
    }
    // Points of G where q_right(F(x)) > x.
    interval e2() const { return {lo, hi, true, false}; }

    friend bool operator==(const flat_interval&, const flat_interval&) = default;
};

// All flat levels strictly inside (0, 1). For the piecewise representation
// these are exactly the zero-density gaps between breakpoints.
inline std::vector<flat_interval> flat_set(const mixed_distribution& d) {
    std::vector<flat_interval> out;
    const auto b = d.breakpoints();
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        if (d.gap_slope(k) != 0.0) continue;
        const double level = d.right_value(k);
        if (!(level > 0.0 && level < 1.0)) continue;
        if (!out.empty() && out.back().level == level) continue;
        const double lo = q_left(d, level);
        const double hi = q_right(d, level);
        if (lo < hi) out.push_back({level, lo, hi});
    }
    return out;
}

// Inverse-transform draw: q_left of an open uniform.
inline double sample(const mixed_distribution& d, rng_type& rng) {
    return q_left(d, uniform_open01(rng));
}

inline std::vector<double> sample_n(const mixed_distribution& d, std::size_t n, rng_type& rng) {
    std::vector<double> out(n);
    for (auto& v : out) v = sample(d, rng);
    return out;
}

} // namespace brockwell
