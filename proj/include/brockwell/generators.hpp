#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "mixed_distribution.hpp"
#include "random.hpp"

// Random distributions for property tests and verification sweeps.

namespace brockwell {

struct generator_options {
    std::size_t max_atoms = 5;
    std::size_t max_pieces = 3;
    // Locations are drawn from the lattice step * {-half_width, ..., half_width}
    // so that atoms regularly land on piece endpoints and gaps appear between
    // pieces.
    double step = 0.25;
    int half_width = 16;
    double min_weight = 0.05;
};

namespace detail {

inline std::vector<double> normalized_weights(std::size_t n, double min_weight, rng_type& rng) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = min_weight + uniform01(rng));
    for (auto& v : w) v /= total;
    return w;
}

// k distinct lattice indices in increasing order.
inline std::vector<int> distinct_lattice(std::size_t k, int half_width, rng_type& rng) {
    std::vector<int> all;
    for (int i = -half_width; i <= half_width; ++i) all.push_back(i);
    shuffle(std::span<int>(all), rng);
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace detail

inline mixed_distribution random_mixed_distribution(rng_type& rng, const generator_options& opt = {}) {
    std::size_t n_atoms = 0, n_pieces = 0;
    while (n_atoms + n_pieces == 0) {
        n_atoms = static_cast<std::size_t>(uniform_below(rng, opt.max_atoms + 1));
        n_pieces = static_cast<std::size_t>(uniform_below(rng, opt.max_pieces + 1));
    }
    const auto weights = detail::normalized_weights(n_atoms + n_pieces, opt.min_weight, rng);

    std::vector<piece> pieces;
    const auto ends = detail::distinct_lattice(2 * n_pieces, opt.half_width, rng);
    for (std::size_t i = 0; i < n_pieces; ++i) {
        double lo = opt.step * ends[2 * i];
        const double hi = opt.step * ends[2 * i + 1];
        // sometimes glue the piece to its predecessor
        if (i > 0 && uniform01(rng) < 0.3) lo = pieces.back().upper;
        pieces.push_back({lo, hi, weights[n_atoms + i]});
    }

    std::vector<atom> atoms;
    const auto locs = detail::distinct_lattice(n_atoms, opt.half_width, rng);
    for (std::size_t i = 0; i < n_atoms; ++i) atoms.push_back({opt.step * locs[i], weights[i]});
    return {std::move(atoms), std::move(pieces)};
}

// m atoms at distinct continuous locations in [-10, 10].
inline mixed_distribution random_atomic_distribution(rng_type& rng, std::size_t m, double min_weight = 0.05) {
    const auto weights = detail::normalized_weights(m, min_weight, rng);
    std::vector<double> locs;
    while (locs.size() < m) {
        const double v = -10.0 + 20.0 * uniform01(rng);
        if (std::find(locs.begin(), locs.end(), v) == locs.end()) locs.push_back(v);
    }
    std::vector<atom> atoms;
    for (std::size_t i = 0; i < m; ++i) atoms.push_back({locs[i], weights[i]});
    return {std::move(atoms), {}};
}

// A valid randomizer law: supported in (0, 2], some mass on (0, 1].
inline mixed_distribution random_randomizer(rng_type& rng) {
    switch (uniform_below(rng, 4)) {
    case 0: return mixed_distribution::uniform();
    case 1: return mixed_distribution::point_mass(1.0);
    case 2: return {{{0.5, 0.5}, {1.0, 0.5}}, {}};
    default: {
        const auto w = detail::normalized_weights(3, 0.05, rng);
        const double a = 0.05 + 0.9 * uniform01(rng);
        return {{{a, w[0]}, {1.5, w[1]}}, {{0.25, 1.75, w[2]}}};
    }
    }
}

} // namespace brockwell
