#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace brockwell {

// Tolerance on the total mass of a distribution.
inline constexpr double mass_tolerance = 1e-12;

struct atom {
    double location;
    double mass;

    friend bool operator==(const atom&, const atom&) = default;
};

// Mass spread uniformly over [lower, upper).
struct piece {
    double lower;
    double upper;
    double mass;

    double density() const { return mass / (upper - lower); }

    friend bool operator==(const piece&, const piece&) = default;
};

// A probability law on the real line made of finitely many atoms plus
// finitely many uniform pieces with disjoint interiors.
//
// The constructor canonicalizes (sorts, merges equal atom locations, drops
// zero-mass entries) and validates. Afterwards the value is immutable.
//
// CDF evaluation goes through a breakpoint table: the sorted union of atom
// locations and piece endpoints b_0 < ... < b_{K-1}, with the stored values
// F(b_k-) and F(b_k), and the density on each open gap (b_k, b_{k+1}).
// Inside a gap F is evaluated as F(b_k) + slope * (x - b_k), clamped above by
// F(b_{k+1}-). Each step is a monotone floating-point operation, so the
// computed F is nondecreasing over the doubles. The quantile module depends
// on that.
class mixed_distribution {
public:
    mixed_distribution(std::vector<atom> atoms, std::vector<piece> pieces)
        : atoms_(std::move(atoms)), pieces_(std::move(pieces)) {
        canonicalize();
        validate();
        build_table();
    }

    static mixed_distribution point_mass(double x) { return {{{x, 1.0}}, {}}; }
    static mixed_distribution uniform(double lower = 0.0, double upper = 1.0) {
        return {{}, {{lower, upper, 1.0}}};
    }

    const std::vector<atom>& atoms() const { return atoms_; }
    const std::vector<piece>& pieces() const { return pieces_; }

    bool purely_atomic() const { return pieces_.empty(); }
    bool non_atomic() const { return atoms_.empty(); }

    // F(x) = mass of (-inf, x].
    double cdf(double x) const {
        if (x < breaks_.front()) return 0.0;
        const std::size_t k = static_cast<std::size_t>(
            std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin() - 1);
        if (breaks_[k] == x) return right_[k];
        return gap_value(k, x);
    }

    // F(x-) = mass of (-inf, x).
    double cdf_left(double x) const {
        if (x <= breaks_.front()) return 0.0;
        const std::size_t k = static_cast<std::size_t>(
            std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin() - 1);
        if (k + 1 < breaks_.size() && breaks_[k + 1] == x) return left_[k + 1];
        return gap_value(k, x);
    }

    // mu({x}) as seen by the CDF table, F(x) - F(x-).
    double jump(double x) const { return cdf(x) - cdf_left(x); }

    bool is_atom(double x) const {
        return std::binary_search(atoms_.begin(), atoms_.end(), atom{x, 0.0},
                                  [](const atom& a, const atom& b) { return a.location < b.location; });
    }

    double support_min() const { return breaks_.front(); }
    double support_max() const { return breaks_.back(); }

    // Breakpoint table, exposed for the quantile and transform code.
    std::span<const double> breakpoints() const { return breaks_; }
    double left_value(std::size_t k) const { return left_[k]; }
    double right_value(std::size_t k) const { return right_[k]; }
    double gap_slope(std::size_t k) const { return slope_[k]; }

    // F on the open gap (b_k, b_{k+1}); constant 1 past the last breakpoint.
    double gap_value(std::size_t k, double x) const {
        if (k + 1 >= breaks_.size()) return right_.back();
        if (slope_[k] == 0.0) return right_[k];
        return std::min(right_[k] + slope_[k] * (x - breaks_[k]), left_[k + 1]);
    }

    friend bool operator==(const mixed_distribution& a, const mixed_distribution& b) {
        return a.atoms_ == b.atoms_ && a.pieces_ == b.pieces_;
    }

private:
    void canonicalize() {
        std::erase_if(atoms_, [](const atom& a) { return a.mass == 0.0; });
        std::erase_if(pieces_, [](const piece& p) { return p.mass == 0.0; });
        std::stable_sort(atoms_.begin(), atoms_.end(),
                         [](const atom& a, const atom& b) { return a.location < b.location; });
        std::vector<atom> merged;
        merged.reserve(atoms_.size());
        for (const auto& a : atoms_) {
            if (!merged.empty() && merged.back().location == a.location) {
                merged.back().mass += a.mass;
            } else {
                merged.push_back(a);
            }
        }
        atoms_ = std::move(merged);
        std::stable_sort(pieces_.begin(), pieces_.end(),
                         [](const piece& a, const piece& b) { return a.lower < b.lower; });
    }

    void validate() const {
        if (atoms_.empty() && pieces_.empty()) throw error("distribution has no mass");
        double total = 0.0;
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.location) || !std::isfinite(a.mass))
                throw error("atom with non-finite location or mass");
            if (a.mass < 0.0 || a.mass > 1.0 + mass_tolerance)
                throw error("atom mass outside (0, 1]: " + std::to_string(a.mass));
            total += a.mass;
        }
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const auto& p = pieces_[i];
            if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !std::isfinite(p.mass))
                throw error("piece with non-finite bound or mass");
            if (!(p.lower < p.upper)) throw error("piece requires lower < upper");
            if (p.mass < 0.0 || p.mass > 1.0 + mass_tolerance)
                throw error("piece mass outside (0, 1]: " + std::to_string(p.mass));
            if (i > 0 && pieces_[i - 1].upper > p.lower) throw error("pieces overlap");
            total += p.mass;
        }
        if (std::abs(total - 1.0) > mass_tolerance)
            throw error("total mass " + std::to_string(total) + " differs from 1");
    }

    void build_table() {
        breaks_.clear();
        for (const auto& a : atoms_) breaks_.push_back(a.location);
        for (const auto& p : pieces_) {
            breaks_.push_back(p.lower);
            breaks_.push_back(p.upper);
        }
        std::sort(breaks_.begin(), breaks_.end());
        breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());

        const std::size_t n = breaks_.size();
        slope_.assign(n, 0.0);
        for (const auto& p : pieces_) {
            const auto first = std::lower_bound(breaks_.begin(), breaks_.end(), p.lower) - breaks_.begin();
            const auto last = std::lower_bound(breaks_.begin(), breaks_.end(), p.upper) - breaks_.begin();
            for (auto k = first; k < last; ++k) slope_[static_cast<std::size_t>(k)] += p.density();
        }

        left_.assign(n, 0.0);
        right_.assign(n, 0.0);
        std::size_t ai = 0;
        double running = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            left_[k] = std::min(running, 1.0);
            if (ai < atoms_.size() && atoms_[ai].location == breaks_[k]) running += atoms_[ai++].mass;
            right_[k] = std::min(running, 1.0);
            if (k + 1 < n) running += slope_[k] * (breaks_[k + 1] - breaks_[k]);
        }
        right_[n - 1] = 1.0;
    }

    std::vector<atom> atoms_;
    std::vector<piece> pieces_;

    std::vector<double> breaks_;
    std::vector<double> left_;
    std::vector<double> right_;
    std::vector<double> slope_;
};

inline double cdf(const mixed_distribution& d, double x) { return d.cdf(x); }
inline double cdf_left(const mixed_distribution& d, double x) { return d.cdf_left(x); }

struct enumerated_atom {
    std::size_t index; // 1-based
    double location;
    double mass;

    friend bool operator==(const enumerated_atom&, const enumerated_atom&) = default;
};

// Increasing enumeration x_1 < x_2 < ... of the atoms. A finite atom set is
// always well-ordered by <=, so `well_ordered` is always true here; it is kept
// so callers that consume enumerations can assert the hypothesis explicitly.
struct atom_enumeration {
    std::vector<enumerated_atom> entries;
    bool well_ordered = true;
};

inline atom_enumeration enumerate_atoms(const mixed_distribution& d) {
    atom_enumeration out;
    out.entries.reserve(d.atoms().size());
    std::size_t i = 1;
    for (const auto& a : d.atoms()) out.entries.push_back({i++, a.location, a.mass});
    return out;
}

// Law of -X.
inline mixed_distribution negate(const mixed_distribution& d) {
    std::vector<atom> atoms;
    std::vector<piece> pieces;
    // 0.0 - v rather than -v keeps an atom at 0 at +0.0
    for (const auto& a : d.atoms()) atoms.push_back({0.0 - a.location, a.mass});
    for (const auto& p : d.pieces()) pieces.push_back({0.0 - p.upper, 0.0 - p.lower, p.mass});
    return {std::move(atoms), std::move(pieces)};
}

inline mixed_distribution empirical_from_samples(std::span<const double> data) {
    if (data.empty()) throw error("no samples");
    std::vector<double> sorted(data.begin(), data.end());
    for (double v : sorted)
        if (!std::isfinite(v)) throw error("non-finite sample value");
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<atom> atoms;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        atoms.push_back({sorted[i], static_cast<double>(j - i) / n});
        i = j;
    }
    return {std::move(atoms), {}};
}

// Finite stand-in for a discrete law on {0, 1, 2, ...}: keeps the shortest
// prefix whose remaining tail mass is at most tail_tol and renormalizes it.
// `weights(k)` is the probability of k and must sum to 1 over all k.
template <typename Weights>
mixed_distribution truncate_discrete(Weights&& weights, double tail_tol,
                                     std::uint64_t max_terms = 10'000'000) {
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw error("tail_tol must lie in (0, 1)");
    std::vector<atom> atoms;
    double cumulative = 0.0;
    for (std::uint64_t k = 0; k < max_terms; ++k) {
        const double w = weights(k);
        if (!std::isfinite(w) || w < 0.0) throw error("weight at " + std::to_string(k) + " is not a probability");
        if (w > 0.0) {
            atoms.push_back({static_cast<double>(k), w});
            cumulative += w;
        }
        if (!atoms.empty() && 1.0 - cumulative <= tail_tol) {
            for (auto& a : atoms) a.mass /= cumulative;
            return {std::move(atoms), {}};
        }
    }
    throw error("truncate_discrete: prefix did not reach tail tolerance within " +
                std::to_string(max_terms) + " terms");
}

} // namespace brockwell
