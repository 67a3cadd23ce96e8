#include <cmath>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include <brockwell/independence.hpp>
#include <brockwell/stats.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace brockwell;
using fixtures::bern;
using fixtures::mix;
using fixtures::uni;

namespace {

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

corollary1_config null_config() {
    corollary1_config cfg;
    cfg.dist_x = bern();
    cfg.dist_y = mix();
    cfg.mode = dependence::none;
    cfg.n_samples = 200;
    cfg.n_replicates = 500;
    cfg.n_perm = 199;
    cfg.seed = 20240501;
    cfg.threads = worker_count();
    return cfg;
}

// Shared across tests: 500 null replicates are the expensive part.
const experiment_summary& null_run() {
    static const experiment_summary s = corollary1_experiment(null_config());
    return s;
}

conditional_family bern_mix_family() { return conditional_family({{0.0, bern()}, {1.0, mix()}}); }

} // namespace

TEST(DistanceCovariance, Examples) {
    const std::vector<double> xs = {0.0, 1.0, 2.0};
    EXPECT_NEAR(distance_covariance(xs, xs), 40.0 / 81.0, 1e-15);
    EXPECT_GT(distance_covariance(xs, xs), 0.0);

    const std::vector<double> c = {3.0, 3.0, 3.0};
    EXPECT_EQ(distance_covariance(c, xs), 0.0);

    const std::vector<double> a = {0.3, -1.2, 4.4, 0.0, 2.5}, b = {1.0, 0.2, -0.7, 3.3, 0.1};
    std::vector<double> a5 = a;
    for (auto& v : a5) v += 5.0;
    EXPECT_NEAR(distance_covariance(a, b), distance_covariance(a5, b), 1e-14);
}

TEST(DistanceCovariance, Errors) {
    const std::vector<double> one = {1.0}, two = {1.0, 2.0}, three = {1.0, 2.0, 3.0};
    EXPECT_THROW(distance_covariance(one, one), error);
    EXPECT_THROW(distance_covariance(two, three), error);
}

TEST(DistanceCovariance, MatchesOracleOnRandomData) {
    auto rng = make_rng(3);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + uniform_below(rng, 40);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = standard_normal(rng);
            y[i] = x[i] * uniform01(rng) + standard_normal(rng);
        }
        const double ours = distance_covariance(x, y);
        EXPECT_NEAR(ours, oracle::distance_covariance(x, y), 1e-12);
        EXPECT_GE(ours, 0.0);
    }
}

TEST(PermutationTest, IdenticalSamplesAreSignificant) {
    const std::vector<double> xs = {0.1, 0.9, 2.3, 3.0, 4.7, 5.2, 6.6, 7.1};
    const auto rep = permutation_test(xs, xs, 999, 42);
    EXPECT_LE(rep.p_value, 0.01);
    EXPECT_EQ(rep.n_permutations, 999u);
    EXPECT_EQ(rep.n_samples, 8u);
    EXPECT_EQ(rep.seed, 42u);
}

TEST(PermutationTest, AgreesWithExhaustiveOracle) {
    auto rng = make_rng(17);
    for (int t = 0; t < 5; ++t) {
        std::vector<double> x(6), y(6);
        for (int i = 0; i < 6; ++i) {
            x[i] = standard_normal(rng);
            y[i] = 0.5 * x[i] + standard_normal(rng);
        }
        const double exact = oracle::exhaustive_permutation_pvalue(x, y);
        const std::size_t n_perm = 20000;
        const double p = permutation_test(x, y, n_perm, 1000 + t).p_value;
        const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n_perm));
        EXPECT_NEAR(p, exact, 5.0 * se + 2.0 / static_cast<double>(n_perm)) << "trial " << t;
    }
    // x = y with no symmetric spacing: only the identity attains the maximum
    const std::vector<double> x = {0.0, 1.0, 2.5, 4.0, 4.5, 7.0};
    EXPECT_NEAR(oracle::exhaustive_permutation_pvalue(x, x), 1.0 / 720.0, 1e-15);
}

TEST(PermutationTest, Deterministic) {
    auto rng = make_rng(8);
    std::vector<double> x(30), y(30);
    for (auto& v : x) v = uniform01(rng);
    for (auto& v : y) v = uniform01(rng);
    const auto a = permutation_test(x, y, 199, 5);
    const auto b = permutation_test(x, y, 199, 5);
    EXPECT_EQ(a.statistic, b.statistic);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_GE(a.p_value, 1.0 / 200.0);
    EXPECT_LE(a.p_value, 1.0);
}

TEST(PermutationTest, Errors) {
    const std::vector<double> three = {1.0, 2.0, 3.0}, four = {1.0, 2.0, 3.0, 4.0}, five = {1, 2, 3, 4, 5};
    EXPECT_THROW(permutation_test(three, three, 99, 1), error);
    EXPECT_THROW(permutation_test(four, five, 99, 1), error);
    EXPECT_THROW(permutation_test(four, four, 18, 1), error);
    EXPECT_NO_THROW(permutation_test(four, four, 19, 1));
}

TEST(ConditionalTransform, Examples) {
    const auto fam = conditional_family({{0.0, bern()}, {1.0, uni()}});
    EXPECT_DOUBLE_EQ(conditional_transform(fam, 1.0, 0.0, 0.5), 0.65);
    EXPECT_DOUBLE_EQ(conditional_transform(fam, 0.4, 1.0, 0.9), 0.4);
    const auto point = conditional_family({{0.0, mixed_distribution::point_mass(7.0)}});
    EXPECT_DOUBLE_EQ(conditional_transform(point, 7.0, 0.0, 0.2), 0.2);
    EXPECT_THROW(conditional_transform(fam, 0.4, 0.5, 0.9), error);
}

TEST(ConditionalFamily, Validation) {
    EXPECT_THROW(conditional_family({}), error);
    EXPECT_THROW(conditional_family({{0.0, bern()}, {0.0, uni()}}), error);
    const auto fam = conditional_family({{1.0, uni()}, {0.0, bern()}});
    EXPECT_EQ(fam.support(), (std::vector<double>{0.0, 1.0}));
}

TEST(PairwiseExperiment, LevelWithinBand) {
    const auto& s = null_run();
    ASSERT_EQ(s.replicates.size(), 500u);
    EXPECT_GE(s.rejection_rates[0], 0.03);
    EXPECT_LE(s.rejection_rates[0], 0.07);
}

TEST(PairwiseExperiment, NullPValuesAreSuperUniform) {
    const auto& s = null_run();
    std::size_t small = 0;
    for (const auto& r : s.replicates)
        if (r.tests[0].p_value <= 0.05) ++small;
    EXPECT_LE(static_cast<double>(small) / static_cast<double>(s.replicates.size()), 0.07);
    for (const auto& r : s.replicates) EXPECT_GE(r.tests[0].p_value, 1.0 / 200.0);
}

TEST(PairwiseExperiment, ChiSquareIndependenceOfCopula) {
    auto cfg = null_config();
    std::size_t pass = 0;
    for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
        const auto [zx, zy] = corollary1_sample(cfg, r);
        if (stats::chi_square_independence(zx, zy, 4) <= stats::chi_square_9df_p01) ++pass;
    }
    EXPECT_GE(static_cast<double>(pass) / static_cast<double>(cfg.n_replicates), 0.98);
}

TEST(PairwiseExperiment, MarginsAreUniform) {
    auto cfg = null_config();
    cfg.n_samples = 20000;
    const auto [zx, zy] = corollary1_sample(cfg, 0);
    const double crit = stats::ks_critical_value(0.001, cfg.n_samples);
    EXPECT_LT(stats::ks_uniform_distance(zx), crit);
    EXPECT_LT(stats::ks_uniform_distance(zy), crit);
}

TEST(PairwiseExperiment, ComonotoneHasPower) {
    auto cfg = null_config();
    cfg.dist_y = bern();
    cfg.mode = dependence::comonotone;
    cfg.n_replicates = 200;
    const auto s = corollary1_experiment(cfg);
    EXPECT_GE(s.rejection_rates[0], 0.8);
}

TEST(PairwiseExperiment, PointMassMarginGivesUniformTransform) {
    auto cfg = null_config();
    cfg.dist_x = mixed_distribution::point_mass(3.0);
    cfg.n_replicates = 1;
    cfg.n_samples = 5000;
    const auto [zx, zy] = corollary1_sample(cfg, 0);
    EXPECT_LT(stats::ks_uniform_distance(zx), stats::ks_critical_value(0.001, cfg.n_samples));
}

TEST(PairwiseExperiment, DeterministicAcrossThreadCounts) {
    auto cfg = null_config();
    cfg.n_replicates = 24;
    cfg.threads = 1;
    const auto a = corollary1_experiment(cfg);
    cfg.threads = 4;
    const auto b = corollary1_experiment(cfg);
    ASSERT_EQ(a.replicates.size(), b.replicates.size());
    for (std::size_t r = 0; r < a.replicates.size(); ++r) {
        EXPECT_EQ(a.replicates[r].tests[0].statistic, b.replicates[r].tests[0].statistic);
        EXPECT_EQ(a.replicates[r].tests[0].p_value, b.replicates[r].tests[0].p_value);
    }
    EXPECT_EQ(a.rejection_rates, b.rejection_rates);
}

TEST(PairwiseExperiment, ConfigErrors) {
    auto cfg = null_config();
    cfg.n_samples = 3;
    EXPECT_THROW(corollary1_experiment(cfg), error);
    cfg = null_config();
    cfg.dist_hx = mixed_distribution::uniform(-1.0, 1.0);
    try {
        corollary1_experiment(cfg);
        FAIL();
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find("dist_hx"), std::string::npos);
    }
    cfg = null_config();
    cfg.n_perm = 10;
    EXPECT_THROW(corollary1_experiment(cfg), error);
}

TEST(ConditionalExperiment, NullRatesInBandAndMarginsUniform) {
    corollary2_config cfg;
    cfg.family_1 = bern_mix_family();
    cfg.family_2 = bern_mix_family();
    cfg.dist_x3 = mixed_distribution({{0.0, 0.5}, {1.0, 0.5}}, {});
    cfg.n_replicates = 500;
    cfg.seed = 99;
    cfg.threads = worker_count();
    const auto s = corollary2_experiment(cfg);
    ASSERT_EQ(s.test_names.size(), 4u);
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_GE(s.rejection_rates[t], 0.03) << s.test_names[t];
        EXPECT_LE(s.rejection_rates[t], 0.07) << s.test_names[t];
    }

    cfg.n_samples = 20000;
    const auto big = corollary2_sample(cfg, 0);
    const double crit = stats::ks_critical_value(0.001, cfg.n_samples);
    EXPECT_LT(stats::ks_uniform_distance(big.z1), crit);
    EXPECT_LT(stats::ks_uniform_distance(big.z2), crit);
    EXPECT_LT(stats::ks_uniform_distance(big.z3), crit);
}

TEST(ConditionalExperiment, ConditionalComonotoneDetectedButZ3Independent) {
    corollary2_config cfg;
    cfg.family_1 = bern_mix_family();
    cfg.family_2 = bern_mix_family();
    cfg.dist_x3 = mixed_distribution({{0.0, 0.5}, {1.0, 0.5}}, {});
    cfg.mode = dependence::comonotone;
    cfg.n_replicates = 500;
    cfg.seed = 100;
    cfg.threads = worker_count();
    const auto s = corollary2_experiment(cfg);
    EXPECT_GE(s.rejection_rates[0], 0.8);
    EXPECT_GE(s.rejection_rates[1], 0.03);
    EXPECT_LE(s.rejection_rates[1], 0.07);
}

TEST(ConditionalExperiment, DegenerateConditioningReproducesPairwise) {
    corollary2_config c2;
    c2.family_1 = conditional_family({{0.0, bern()}});
    c2.family_2 = conditional_family({{0.0, mix()}});
    c2.dist_x3 = mixed_distribution::point_mass(0.0);
    c2.n_replicates = 40;
    c2.seed = 7;
    c2.threads = worker_count();
    auto c1 = null_config();
    c1.n_replicates = 40;
    c1.seed = 7;
    const auto a = corollary1_experiment(c1);
    const auto b = corollary2_experiment(c2);
    for (std::size_t r = 0; r < 40; ++r) {
        EXPECT_EQ(a.replicates[r].tests[0].p_value, b.replicates[r].tests[0].p_value);
        EXPECT_EQ(a.replicates[r].tests[0].statistic, b.replicates[r].tests[0].statistic);
    }
}

TEST(ConditionalExperiment, ConfigErrors) {
    corollary2_config cfg;
    cfg.family_1 = bern_mix_family();
    cfg.family_2 = bern_mix_family();
    cfg.dist_x3 = mixed_distribution({{0.0, 0.5}, {2.0, 0.5}}, {});
    EXPECT_THROW(corollary2_experiment(cfg), error);
    cfg.dist_x3 = mixed_distribution({{0.0, 0.5}}, {{1.0, 2.0, 0.5}});
    EXPECT_THROW(corollary2_experiment(cfg), error);
    cfg.dist_x3 = mixed_distribution({{0.0, 0.5}, {1.0, 0.5}}, {});
    cfg.mode = dependence::gaussian;
    EXPECT_THROW(corollary2_experiment(cfg), error);
}
