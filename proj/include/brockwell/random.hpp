#pragma once

#include <bit>
#include <cstddef>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

// Seeded randomness with a fixed, platform-independent draw pipeline.
//
// std::uniform_real_distribution and std::shuffle are implementation-defined,
// so every draw here goes through our own conversions on top of mt19937_64,
// whose output sequence is fixed by the standard.

namespace brockwell {

using rng_type = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Sub-seed for (master seed, replicate index, stream id). Each coordinate is
// folded through splitmix64 so neighbouring indices give unrelated seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                    std::uint64_t stream = 0) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ splitmix64(stream + 0x85157af5ULL));
    return h;
}

inline rng_type make_rng(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t stream = 0) {
    return rng_type(derive_seed(seed, index, stream));
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(rng_type& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1).
inline double uniform_open01(rng_type& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection; bound > 0.
inline std::uint64_t uniform_below(rng_type& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

// Fisher-Yates.
template <typename T>
void shuffle(std::span<T> xs, rng_type& rng) {
    for (std::size_t i = xs.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(xs[i - 1], xs[j]);
    }
}

inline std::vector<std::size_t> random_permutation(std::size_t n, rng_type& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle(std::span<std::size_t>(p), rng);
    return p;
}

// Standard normal via Box-Muller on open uniforms.
inline double standard_normal(rng_type& rng) {
    const double u1 = uniform_open01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace brockwell
