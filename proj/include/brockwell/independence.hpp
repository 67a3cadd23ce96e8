#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "error.hpp"
#include "mixed_distribution.hpp"
#include "quantile.hpp"
#include "random.hpp"
#include "transform.hpp"

namespace brockwell {

// Square n x n matrix in row-major order.
struct pairwise_matrix {
    std::size_t n = 0;
    std::vector<double> values;

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

inline pairwise_matrix distance_matrix(std::span<const double> xs) {
    pairwise_matrix d{xs.size(), std::vector<double>(xs.size() * xs.size())};
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) d(i, j) = std::abs(xs[i] - xs[j]);
    return d;
}

// Euclidean distances between the points (xs[i], ys[i]).
inline pairwise_matrix distance_matrix(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw error("distance_matrix: coordinate length mismatch");
    pairwise_matrix d{xs.size(), std::vector<double>(xs.size() * xs.size())};
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) d(i, j) = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
    return d;
}

// a_ij - mean_i. - mean_.j + mean_..
inline pairwise_matrix double_center(pairwise_matrix d) {
    const std::size_t n = d.n;
    std::vector<double> row(n, 0.0), col(n, 0.0);
    double all = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            row[i] += d(i, j);
            col[j] += d(i, j);
            all += d(i, j);
        }
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) = d(i, j) - row[i] / nn - col[j] / nn + all / (nn * nn);
    return d;
}

// (1/n^2) sum_ij a_{p(i)p(j)} b_ij for double-centered a and b, with the rows
// and columns of `a` relabelled by `perm` (identity when empty).
inline double centered_product(const pairwise_matrix& a, const pairwise_matrix& b,
                               std::span<const std::size_t> perm = {}) {
    const std::size_t n = a.n;
    double total = 0.0;
    if (perm.empty()) {
        for (std::size_t k = 0; k < n * n; ++k) total += a.values[k] * b.values[k];
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* arow = &a.values[perm[i] * n];
            const double* brow = &b.values[i * n];
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[perm[j]] * brow[j];
            total += acc;
        }
    }
    const double nn = static_cast<double>(n);
    return std::max(total / (nn * nn), 0.0);
}

// Squared sample distance covariance (V-statistic).
inline double distance_covariance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw error("distance_covariance: length mismatch");
    if (xs.size() < 2) throw error("distance_covariance: need at least 2 observations");
    return centered_product(double_center(distance_matrix(xs)), double_center(distance_matrix(ys)));
}

struct test_report {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_permutations = 0;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;

    friend bool operator==(const test_report&, const test_report&) = default;
};

// Permuted statistics within this relative distance of the observed one
// count as ties (equal statistics may differ by summation order).
inline constexpr double permutation_tie_tolerance = 1e-12;

// Permutation null for any statistic of the form centered_product(a, b):
// p = (1 + #{permuted >= observed}) / (n_perm + 1).
inline test_report permutation_test(const pairwise_matrix& a_centered, const pairwise_matrix& b_centered,
                                    std::size_t n_perm, std::uint64_t seed) {
    const std::size_t n = a_centered.n;
    if (b_centered.n != n) throw error("permutation_test: sample size mismatch");
    if (n < 4) throw error("permutation_test: need at least 4 observations");
    if (n_perm < 19) throw error("permutation_test: need at least 19 permutations");

    test_report rep;
    rep.statistic = centered_product(a_centered, b_centered);
    rep.n_permutations = n_perm;
    rep.seed = seed;
    rep.n_samples = n;

    const double threshold = rep.statistic - permutation_tie_tolerance * std::abs(rep.statistic);
    auto rng = rng_type(seed);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::size_t exceed = 0;
    for (std::size_t r = 0; r < n_perm; ++r) {
        shuffle(std::span<std::size_t>(perm), rng);
        if (centered_product(a_centered, b_centered, perm) >= threshold) ++exceed;
    }
    rep.p_value = static_cast<double>(1 + exceed) / static_cast<double>(n_perm + 1);
    return rep;
}

inline test_report permutation_test(std::span<const double> xs, std::span<const double> ys, std::size_t n_perm,
                                    std::uint64_t seed) {
    if (xs.size() != ys.size()) throw error("permutation_test: length mismatch");
    if (xs.size() < 4) throw error("permutation_test: need at least 4 observations");
    return permutation_test(double_center(distance_matrix(xs)), double_center(distance_matrix(ys)), n_perm, seed);
}

// Conditional laws F_{.|3}(. | x3) for each point of a finite conditioning
// support.
class conditional_family {
public:
    conditional_family(std::vector<std::pair<double, mixed_distribution>> laws) : laws_(std::move(laws)) {
        if (laws_.empty()) throw error("conditional family has no support points");
        std::stable_sort(laws_.begin(), laws_.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < laws_.size(); ++i)
            if (laws_[i - 1].first == laws_[i].first)
                throw error("conditional family lists support point " + std::to_string(laws_[i].first) + " twice");
    }

    std::vector<double> support() const {
        std::vector<double> s;
        for (const auto& [x3, law] : laws_) s.push_back(x3);
        return s;
    }

    const mixed_distribution& law(double x3) const {
        auto it = std::lower_bound(laws_.begin(), laws_.end(), x3,
                                   [](const auto& e, double v) { return e.first < v; });
        if (it == laws_.end() || it->first != x3)
            throw error("conditioning value " + std::to_string(x3) + " outside the family's support");
        return it->second;
    }

    const std::vector<std::pair<double, mixed_distribution>>& entries() const { return laws_; }

private:
    std::vector<std::pair<double, mixed_distribution>> laws_;
};

inline double conditional_transform(const conditional_family& fam, double x, double x3, double u) {
    return transform(fam.law(x3), x, u);
}

enum class dependence { none, comonotone, gaussian };

inline std::string to_string(dependence d) {
    switch (d) {
    case dependence::none: return "none";
    case dependence::comonotone: return "comonotone";
    case dependence::gaussian: return "gaussian";
    }
    return "none";
}

// Independent sub-streams of one replicate's randomness. Pairwise and
// conditional experiments share the ids for the quantities they have in
// common, so a degenerate conditioning variable reproduces the unconditional
// run draw for draw.
namespace stream {
inline constexpr std::uint64_t latent_1 = 1;
inline constexpr std::uint64_t latent_2 = 2;
inline constexpr std::uint64_t aux_1 = 3;
inline constexpr std::uint64_t aux_2 = 4;
inline constexpr std::uint64_t aux_3 = 5;
inline constexpr std::uint64_t conditioning = 6;
inline constexpr std::uint64_t perm_12 = 7;
inline constexpr std::uint64_t perm_13 = 8;
inline constexpr std::uint64_t perm_23 = 9;
inline constexpr std::uint64_t perm_joint = 10;
} // namespace stream

struct corollary1_config {
    mixed_distribution dist_x = mixed_distribution::uniform();
    mixed_distribution dist_y = mixed_distribution::uniform();
    mixed_distribution dist_hx = mixed_distribution::uniform();
    mixed_distribution dist_hy = mixed_distribution::uniform();
    dependence mode = dependence::none;
    double copula_rho = 0.5; // gaussian mode only
    std::size_t n_samples = 200;
    std::size_t n_replicates = 500;
    std::size_t n_perm = 199;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct replicate_result {
    std::vector<test_report> tests;
};

struct experiment_summary {
    std::vector<std::string> test_names;
    std::vector<replicate_result> replicates;
    std::vector<double> rejection_rates; // per test, at alpha
};

namespace detail {

// Runs fn(r) for r in [0, n) on up to `threads` workers; results land by index.
template <typename Fn>
std::vector<replicate_result> run_replicates(std::size_t n, std::size_t threads, Fn fn) {
    std::vector<replicate_result> out(n);
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t r = 0; r < n; ++r) out[r] = fn(r);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t r = next++; r < n; r = next++) out[r] = fn(r);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Latent uniforms (v1, v2) for one observation under the dependence mode.
inline std::pair<double, double> latent_pair(dependence mode, double rho, rng_type& r1, rng_type& r2) {
    switch (mode) {
    case dependence::none: {
        const double v1 = uniform_open01(r1);
        return {v1, uniform_open01(r2)};
    }
    case dependence::comonotone: {
        const double v = uniform_open01(r1);
        return {v, v};
    }
    case dependence::gaussian: {
        const double g1 = standard_normal(r1);
        const double g2 = rho * g1 + std::sqrt(1.0 - rho * rho) * standard_normal(r2);
        // clamp away from {0, 1} so the quantile stays in its domain
        auto to_unit = [](double g) { return std::clamp(normal_cdf(g), 0x1.0p-53, 1.0 - 0x1.0p-53); };
        return {to_unit(g1), to_unit(g2)};
    }
    }
    return {0.5, 0.5};
}

inline void check_randomizer(const mixed_distribution& h, const char* field) {
    try {
        transform_spec(mixed_distribution::point_mass(0.0), h);
    } catch (const error& e) {
        throw error(std::string("invalid config field ") + field + ": " + e.what());
    }
}

inline std::vector<double> rejection_rates(const std::vector<replicate_result>& reps, std::size_t n_tests,
                                           double alpha) {
    std::vector<double> rates(n_tests, 0.0);
    for (const auto& r : reps)
        for (std::size_t t = 0; t < n_tests; ++t)
            if (r.tests[t].p_value <= alpha) rates[t] += 1.0;
    for (auto& v : rates) v /= static_cast<double>(std::max<std::size_t>(reps.size(), 1));
    return rates;
}

inline void check_common(std::size_t n_samples, std::size_t n_replicates, std::size_t n_perm, double alpha) {
    if (n_samples < 4) throw error("invalid config field n_samples: need at least 4");
    if (n_replicates < 1) throw error("invalid config field n_replicates: need at least 1");
    if (n_perm < 19) throw error("invalid config field n_perm: need at least 19");
    if (!(alpha > 0.0 && alpha < 1.0)) throw error("invalid config field alpha: must lie in (0, 1)");
}

} // namespace detail

// One replicate's transformed sample (Z_X, Z_Y).
inline std::pair<std::vector<double>, std::vector<double>> corollary1_sample(const corollary1_config& cfg,
                                                                             std::size_t replicate) {
    auto lat1 = make_rng(cfg.seed, replicate, stream::latent_1);
    auto lat2 = make_rng(cfg.seed, replicate, stream::latent_2);
    auto aux1 = make_rng(cfg.seed, replicate, stream::aux_1);
    auto aux2 = make_rng(cfg.seed, replicate, stream::aux_2);
    std::vector<double> zx(cfg.n_samples), zy(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const auto [v1, v2] = detail::latent_pair(cfg.mode, cfg.copula_rho, lat1, lat2);
        const double x = q_left(cfg.dist_x, v1);
        const double y = q_left(cfg.dist_y, v2);
        zx[i] = transform(cfg.dist_x, x, sample(cfg.dist_hx, aux1));
        zy[i] = transform(cfg.dist_y, y, sample(cfg.dist_hy, aux2));
    }
    return {std::move(zx), std::move(zy)};
}

// Transform both margins with independent randomizers and test Z_X vs Z_Y.
inline experiment_summary corollary1_experiment(const corollary1_config& cfg) {
    detail::check_common(cfg.n_samples, cfg.n_replicates, cfg.n_perm, cfg.alpha);
    detail::check_randomizer(cfg.dist_hx, "dist_hx");
    detail::check_randomizer(cfg.dist_hy, "dist_hy");
    if (cfg.mode == dependence::gaussian && !(std::abs(cfg.copula_rho) < 1.0))
        throw error("invalid config field copula_rho: must lie in (-1, 1)");

    experiment_summary out;
    out.test_names = {"zx_vs_zy"};
    out.replicates = detail::run_replicates(cfg.n_replicates, cfg.threads, [&](std::size_t r) {
        const auto [zx, zy] = corollary1_sample(cfg, r);
        replicate_result res;
        res.tests.push_back(permutation_test(zx, zy, cfg.n_perm, derive_seed(cfg.seed, r, stream::perm_12)));
        return res;
    });
    out.rejection_rates = detail::rejection_rates(out.replicates, 1, cfg.alpha);
    return out;
}

struct corollary2_config {
    conditional_family family_1{{{0.0, mixed_distribution::uniform()}}};
    conditional_family family_2{{{0.0, mixed_distribution::uniform()}}};
    mixed_distribution dist_x3 = mixed_distribution::point_mass(0.0);
    dependence mode = dependence::none; // conditional dependence of (X1, X2) given X3
    std::size_t n_samples = 200;
    std::size_t n_replicates = 500;
    std::size_t n_perm = 199;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct corollary2_sample_t {
    std::vector<double> z1, z2, z3;
};

inline corollary2_sample_t corollary2_sample(const corollary2_config& cfg, std::size_t replicate) {
    auto lat1 = make_rng(cfg.seed, replicate, stream::latent_1);
    auto lat2 = make_rng(cfg.seed, replicate, stream::latent_2);
    auto aux1 = make_rng(cfg.seed, replicate, stream::aux_1);
    auto aux2 = make_rng(cfg.seed, replicate, stream::aux_2);
    auto aux3 = make_rng(cfg.seed, replicate, stream::aux_3);
    auto cond = make_rng(cfg.seed, replicate, stream::conditioning);
    const auto uniform = mixed_distribution::uniform();
    corollary2_sample_t s;
    s.z1.resize(cfg.n_samples);
    s.z2.resize(cfg.n_samples);
    s.z3.resize(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const double x3 = sample(cfg.dist_x3, cond);
        const auto& f1 = cfg.family_1.law(x3);
        const auto& f2 = cfg.family_2.law(x3);
        const auto [v1, v2] = detail::latent_pair(cfg.mode, 0.0, lat1, lat2);
        const double x1 = q_left(f1, v1);
        const double x2 = q_left(f2, v2);
        s.z1[i] = conditional_transform(cfg.family_1, x1, x3, sample(uniform, aux1));
        s.z2[i] = conditional_transform(cfg.family_2, x2, x3, sample(uniform, aux2));
        s.z3[i] = transform(cfg.dist_x3, x3, sample(uniform, aux3));
    }
    return s;
}

// Conditional transforms of X1 and X2 given X3 plus the transform of X3,
// tested pairwise and jointly (Z_{1|3} against the pair (Z_{2|3}, Z_3)).
inline experiment_summary corollary2_experiment(const corollary2_config& cfg) {
    detail::check_common(cfg.n_samples, cfg.n_replicates, cfg.n_perm, cfg.alpha);
    if (cfg.mode == dependence::gaussian)
        throw error("invalid config field conditional_dependence: must be none or comonotone");
    if (!cfg.dist_x3.purely_atomic()) throw error("invalid config field dist_x3: must be purely atomic");
    std::vector<double> support;
    for (const auto& a : cfg.dist_x3.atoms()) support.push_back(a.location);
    if (support != cfg.family_1.support())
        throw error("invalid config field family_1: support differs from the atoms of dist_x3");
    if (support != cfg.family_2.support())
        throw error("invalid config field family_2: support differs from the atoms of dist_x3");

    experiment_summary out;
    out.test_names = {"z1_vs_z2", "z1_vs_z3", "z2_vs_z3", "z1_vs_z2z3"};
    out.replicates = detail::run_replicates(cfg.n_replicates, cfg.threads, [&](std::size_t r) {
        const auto s = corollary2_sample(cfg, r);
        const auto d1 = double_center(distance_matrix(s.z1));
        const auto d2 = double_center(distance_matrix(s.z2));
        const auto d3 = double_center(distance_matrix(s.z3));
        const auto d23 = double_center(distance_matrix(s.z2, s.z3));
        replicate_result res;
        res.tests.push_back(permutation_test(d1, d2, cfg.n_perm, derive_seed(cfg.seed, r, stream::perm_12)));
        res.tests.push_back(permutation_test(d1, d3, cfg.n_perm, derive_seed(cfg.seed, r, stream::perm_13)));
        res.tests.push_back(permutation_test(d2, d3, cfg.n_perm, derive_seed(cfg.seed, r, stream::perm_23)));
        res.tests.push_back(permutation_test(d1, d23, cfg.n_perm, derive_seed(cfg.seed, r, stream::perm_joint)));
        return res;
    });
    out.rejection_rates = detail::rejection_rates(out.replicates, out.test_names.size(), cfg.alpha);
    return out;
}

} // namespace brockwell
