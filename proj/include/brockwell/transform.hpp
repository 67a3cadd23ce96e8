#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "mixed_distribution.hpp"

namespace brockwell {

// Law of X (f) and of the auxiliary randomizer U (h).
//
// h must put no mass below 0 or at 0, and some mass on (0, 1]:
// H(0) = 0 and H(1) > 0.
class transform_spec {
public:
    transform_spec(mixed_distribution f, mixed_distribution h) : f_(std::move(f)), h_(std::move(h)) {
        if (h_.support_min() < 0.0) throw error("randomizer law must be supported on [0, +inf)");
        if (h_.cdf(0.0) != 0.0) throw error("randomizer law violates H(0) = 0");
        if (!(h_.cdf(1.0) > 0.0)) throw error("randomizer law violates H(1) > 0");
    }

    const mixed_distribution& f() const { return f_; }
    const mixed_distribution& h() const { return h_; }

private:
    mixed_distribution f_;
    mixed_distribution h_;
};

// below + (above - below) u, pinned to `above` at u = 1 and kept monotone in
// u on both sides of 1. Every image of an atom's jump (transform values, law
// atoms, operator integrands, grid points) goes through here, so they agree
// bit for bit.
inline double jump_image(double below, double above, double u) {
    const double v = below + (above - below) * u;
    return u <= 1.0 ? std::min(v, above) : std::max(v, above);
}

// Z = (1 - u) F(x-) + u F(x).
inline double transform(const mixed_distribution& f, double x, double u) {
    return jump_image(f.cdf_left(x), f.cdf(x), u);
}

inline double transform(const transform_spec& spec, double x, double u) {
    return transform(spec.f(), x, u);
}

inline std::vector<double> transform_samples(const transform_spec& spec, std::span<const double> xs,
                                             std::span<const double> us) {
    if (xs.size() != us.size())
        throw error("transform_samples: " + std::to_string(xs.size()) + " values but " +
                    std::to_string(us.size()) + " randomizers");
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = transform(spec, xs[i], us[i]);
    return out;
}

// Atom locations of the pushforward law are merged only when equal as
// doubles; grids and reported jump sets are deduplicated at this tolerance.
inline constexpr double law_merge_tolerance = 1e-12;

namespace detail {

inline std::vector<atom> merge_atoms(std::vector<atom> xs, double tol) {
    std::sort(xs.begin(), xs.end(), [](const atom& a, const atom& b) { return a.location < b.location; });
    std::vector<atom> out;
    for (const auto& a : xs) {
        if (!out.empty() && a.location - out.back().location <= tol) {
            out.back().mass += a.mass;
        } else {
            out.push_back(a);
        }
    }
    return out;
}

// Overlapping pieces are split at every endpoint and their densities summed.
// Endpoints within tol of each other are snapped together first; adjacent
// cells with equal density are joined again afterwards.
inline std::pair<std::vector<piece>, std::vector<atom>> merge_pieces(std::vector<piece> xs, double tol) {
    std::vector<double> ends;
    for (const auto& p : xs) {
        ends.push_back(p.lower);
        ends.push_back(p.upper);
    }
    std::sort(ends.begin(), ends.end());
    std::vector<double> cuts;
    for (double e : ends)
        if (cuts.empty() || e - cuts.back() > tol) cuts.push_back(e);
    auto snap = [&](double v) {
        auto it = std::upper_bound(cuts.begin(), cuts.end(), v);
        return *(it - 1);
    };

    std::vector<atom> collapsed;
    std::vector<double> cell_mass(cuts.empty() ? 0 : cuts.size() - 1, 0.0);
    for (const auto& p : xs) {
        const double lo = snap(p.lower);
        const double hi = snap(p.upper);
        if (lo == hi) {
            collapsed.push_back({lo, p.mass});
            continue;
        }
        const auto first = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), lo) - cuts.begin());
        const auto last = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), hi) - cuts.begin());
        const double width = hi - lo;
        for (std::size_t c = first; c < last; ++c)
            cell_mass[c] += p.mass * ((cuts[c + 1] - cuts[c]) / width);
    }

    std::vector<piece> out;
    for (std::size_t c = 0; c < cell_mass.size(); ++c) {
        if (cell_mass[c] <= 0.0) continue;
        const piece cell{cuts[c], cuts[c + 1], cell_mass[c]};
        if (!out.empty() && out.back().upper == cell.lower) {
            const double d1 = out.back().density();
            const double d2 = cell.density();
            if (std::abs(d1 - d2) <= 1e-9 * std::max(d1, d2)) {
                out.back().upper = cell.upper;
                out.back().mass += cell.mass;
                continue;
            }
        }
        out.push_back(cell);
    }
    return {std::move(out), std::move(collapsed)};
}

} // namespace detail

// Exact law of Z for X ~ f independent of U ~ h.
//
// An atom x of F with s = F(x-) and p = mu({x}) contributes p times the law of
// s + p U. The non-atomic part of F is pushed forward through F itself: a gap
// with positive density is mapped linearly onto (F(b_k), F(b_{k+1}-)), so its
// mass stays uniform; zero-density gaps carry no mass and vanish.
inline mixed_distribution transform_law(const transform_spec& spec) {
    const auto& f = spec.f();
    const auto& h = spec.h();
    std::vector<atom> atoms;
    std::vector<piece> pieces;

    for (const auto& a : f.atoms()) {
        const double s = f.cdf_left(a.location);
        const double t = f.cdf(a.location);
        const double p = t - s;
        for (const auto& ha : h.atoms()) atoms.push_back({jump_image(s, t, ha.location), p * ha.mass});
        for (const auto& hp : h.pieces())
            pieces.push_back({jump_image(s, t, hp.lower), jump_image(s, t, hp.upper), p * hp.mass});
    }

    const auto b = f.breakpoints();
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        if (f.gap_slope(k) == 0.0) continue;
        const double lo = f.right_value(k);
        const double hi = f.left_value(k + 1);
        if (hi > lo) pieces.push_back({lo, hi, hi - lo});
    }

    auto [merged_pieces, collapsed] = detail::merge_pieces(std::move(pieces), 0.0);
    atoms.insert(atoms.end(), collapsed.begin(), collapsed.end());
    return {detail::merge_atoms(std::move(atoms), 0.0), std::move(merged_pieces)};
}

// Jump points of F_Z: the union over atoms x of F of F(x-) + mu({x}) D_H,
// sorted and distinct.
inline std::vector<double> z_discontinuities(const transform_spec& spec) {
    const auto& f = spec.f();
    std::vector<double> out;
    for (const auto& a : f.atoms())
        for (const auto& ha : spec.h().atoms()) out.push_back(transform(f, a.location, ha.location));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Sorted copy with points closer than tol to their predecessor dropped.
inline std::vector<double> dedup(std::vector<double> xs, double tol = law_merge_tolerance) {
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    for (double v : xs)
        if (out.empty() || v - out.back() > tol) out.push_back(v);
    return out;
}

} // namespace brockwell
