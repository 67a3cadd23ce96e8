// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Everything runs on one thread so the timings are single-core figures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <brockwell/generators.hpp>
#include <brockwell/independence.hpp>
#include <brockwell/io.hpp>
#include <brockwell/kernel_operator.hpp>
#include <brockwell/lemma_battery.hpp>
#include <brockwell/transform.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace brockwell;
using fixtures::bern;
using fixtures::mix;
using fixtures::two_atom_h;
using fixtures::uni;

namespace {

// Seeds fixed before the first acceptance run. The power threshold was
// committed from a pilot at seed 1, which is not reused here.
constexpr std::uint64_t level_seed = 4242;
constexpr std::uint64_t power_seed = 4243;
constexpr std::uint64_t reduction_seed = 4244;
constexpr std::uint64_t conditional_seed = 4245;
constexpr double committed_power = 0.95;

struct outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void run(int id, const char* name, double budget_s, const std::function<outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = budget_s <= 0.0 || secs < budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %d %s (%.2f s%s) %s%s\n", pass ? "PASS" : "FAIL", id, name, secs,
                budget_s > 0.0 ? (" of " + std::to_string(static_cast<int>(budget_s)) + " s").c_str() : "",
                o.detail.c_str(), in_time ? "" : " [over time budget]");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

kernel_matrix random_signed_kernel(rng_type& rng, std::size_t m, std::size_t k) {
    matrix e(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    for (Eigen::Index r = 0; r < e.rows(); ++r)
        for (Eigen::Index c = 0; c < e.cols(); ++c) e(r, c) = 2.0 * uniform01(rng) - 1.0;
    // scale so rows have varying norms, not all 1
    return {e * (0.1 + 2.0 * uniform01(rng)), std::vector<double>(m, 0.0)};
}

std::vector<mixed_distribution> randomizers() { return {uni(), mixed_distribution::point_mass(1.0), two_atom_h()}; }

outcome uniform_z_law() {
    double worst = 0.0;
    std::size_t with_atoms = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto rng = make_rng(s, 0, 101);
        const auto law = transform_law(transform_spec(random_mixed_distribution(rng), uni()));
        if (!law.atoms().empty()) ++with_atoms;
        // the law is piecewise linear, so the sup deviation is attained at a breakpoint
        for (double z : law.breakpoints()) {
            const double id = std::clamp(z, 0.0, 1.0);
            worst = std::max({worst, std::abs(law.cdf(z) - id), std::abs(law.cdf_left(z) - id)});
        }
    }
    return {worst < 1e-12 && with_atoms == 0,
            "sup deviation " + fmt("%.3g", worst) + ", laws with atoms " + std::to_string(with_atoms)};
}

outcome jump_set() {
    std::size_t mismatches = 0, atomic_h = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto rng = make_rng(s, 0, 102);
        const auto f = random_mixed_distribution(rng);
        // every other pair gets a purely atomic randomizer
        const auto h = s % 2 ? randomizers()[1 + s / 2 % 2] : random_randomizer(rng);
        if (h.pieces().empty()) ++atomic_h;
        const transform_spec spec(f, h);
        const auto law = transform_law(spec);
        std::vector<double> law_atoms;
        for (const auto& a : law.atoms()) law_atoms.push_back(a.location);
        if (dedup(law_atoms) != dedup(z_discontinuities(spec))) ++mismatches;
    }
    return {mismatches == 0 && atomic_h >= 25,
            std::to_string(mismatches) + " mismatches, " + std::to_string(atomic_h) + " atomic randomizers"};
}

outcome quantile_battery() {
    const auto rep = verify_lemmas(100, 303, 10'000);
    std::size_t checks = 0, failed = 0;
    std::string which;
    for (const auto& c : rep.claims) {
        checks += c.checks;
        failed += c.failures;
        if (c.failures) which += " " + c.name;
    }
    return {rep.passed() && failed == 0,
            std::to_string(checks) + " checks, " + std::to_string(failed) + " violations" + which};
}

outcome operator_correctness() {
    double worst_residual = 0.0, worst_ratio = 0.0;
    std::size_t norm_failures = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto rng = make_rng(s, 0, 104);
        const std::size_t m = 1 + uniform_below(rng, 8);
        const std::size_t k = 1 + uniform_below(rng, 4);
        const transform_spec spec(random_atomic_distribution(rng, m), random_randomizer(rng));
        const auto nu = detail::normalized_weights(k, 0.05, rng);
        const auto op = build_operator_matrix(spec, refine_grid(default_z_grid(spec)), nu);
        worst_residual = std::max(worst_residual,
                                  (apply_operator(op, degenerate_kernel(nu, m)) - op.beta).cwiseAbs().maxCoeff());
        for (int t = 0; t < 1000; ++t) {
            const auto r = operator_norm_check(op, random_signed_kernel(rng, m, k));
            if (!(r.norm_out <= 2.0 * r.norm_in)) ++norm_failures;
            worst_ratio = std::max(worst_ratio, r.norm_out / r.norm_in);
        }
    }
    return {worst_residual <= 1e-12 && norm_failures == 0,
            "max |T kappa0 - beta| " + fmt("%.3g", worst_residual) + ", max ||T kappa||/||kappa|| " +
                fmt("%.4f", worst_ratio) + ", bound violations " + std::to_string(norm_failures)};
}

outcome uniqueness() {
    std::size_t checks = 0, bad = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto rng = make_rng(s, 0, 105);
        for (std::size_t m = 1; m <= 8; ++m) {
            const auto f = random_atomic_distribution(rng, m);
            for (const auto& h : randomizers()) {
                const auto rep = uniqueness_check(transform_spec(f, h), 2);
                ++checks;
                worst = std::max(worst, rep.kappa0_residual);
                if (!rep.verdict || rep.refined_null_space_dim != 0u || !(rep.kappa0_residual < 1e-10)) ++bad;
            }
        }
    }
    return {bad == 0, std::to_string(checks) + " specs, " + std::to_string(bad) + " failures, max residual " +
                          fmt("%.3g", worst)};
}

outcome hand_instance() {
    const transform_spec spec(bern(), uni());
    const std::vector<double> grid = {0.15, 0.65};
    const std::vector<double> nu = {1.0};
    const auto op = build_operator_matrix(spec, grid, nu);
    const std::vector<oracle::point_mass> atoms = {{0.0, 0.3}, {1.0, 0.7}};
    auto h_cdf = [](double t) { return std::clamp(t, 0.0, 1.0); };
    const double expected[2][2] = {{0.15, 0.0}, {0.3, 0.35}};
    double worst = 0.0;
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            const double got = op.entries(j, i);
            worst = std::max({worst, std::abs(got - expected[j][i]),
                              std::abs(got - oracle::operator_entry(atoms, static_cast<std::size_t>(i), h_cdf,
                                                                    grid[static_cast<std::size_t>(j)]))});
        }
    }
    const auto rank = numerical_rank(op.entries);
    return {op.entries.rows() == 2 && op.entries.cols() == 2 && worst <= 1e-15 && rank == 2,
            "max entry error " + fmt("%.3g", worst) + ", rank " + std::to_string(rank)};
}

corollary1_config bern_mix(dependence mode, std::uint64_t seed) {
    corollary1_config cfg;
    cfg.dist_x = bern();
    cfg.dist_y = mix();
    cfg.mode = mode;
    cfg.n_samples = 200;
    cfg.n_replicates = 500;
    cfg.n_perm = 199;
    cfg.alpha = 0.05;
    cfg.seed = seed;
    cfg.threads = 1;
    return cfg;
}

outcome monte_carlo() {
    const auto level = corollary1_experiment(bern_mix(dependence::none, level_seed)).rejection_rates[0];
    const auto power = corollary1_experiment(bern_mix(dependence::comonotone, power_seed)).rejection_rates[0];
    return {level >= 0.03 && level <= 0.07 && power >= committed_power,
            "level " + fmt("%.3f", level) + " (band [0.03, 0.07]), power " + fmt("%.3f", power) +
                " (committed >= " + fmt("%.2f", committed_power) + ")"};
}

corollary2_config degenerate_conditioning() {
    corollary2_config c;
    c.family_1 = conditional_family({{0.0, bern()}});
    c.family_2 = conditional_family({{0.0, mix()}});
    c.dist_x3 = mixed_distribution::point_mass(0.0);
    c.n_samples = 200;
    c.n_replicates = 500;
    c.n_perm = 199;
    c.seed = reduction_seed;
    c.threads = 1;
    return c;
}

outcome reduction() {
    const auto a = corollary1_experiment(bern_mix(dependence::none, reduction_seed));
    const auto b = corollary2_experiment(degenerate_conditioning());
    std::size_t differ = 0;
    for (std::size_t r = 0; r < a.replicates.size(); ++r)
        if (a.replicates[r].tests[0].p_value != b.replicates[r].tests[0].p_value) ++differ;
    return {a.replicates.size() == 500 && b.replicates.size() == 500 && differ == 0,
            std::to_string(differ) + " of 500 replicate p-values differ"};
}

std::string report(const corollary1_config& c) {
    const auto s = corollary1_experiment(c);
    return io::summary_json("corollary1", io::echo(c), s, c.alpha).dump() + "\n" + io::p_value_csv(s);
}

std::string report(const corollary2_config& c) {
    const auto s = corollary2_experiment(c);
    return io::summary_json("corollary2", io::echo(c), s, c.alpha).dump() + "\n" + io::p_value_csv(s);
}

outcome determinism() {
    corollary2_config cond;
    cond.family_1 = conditional_family({{0.0, bern()}, {1.0, mix()}});
    cond.family_2 = conditional_family({{0.0, mix()}, {1.0, bern()}});
    cond.dist_x3 = mixed_distribution({{0.0, 0.5}, {1.0, 0.5}}, {});
    cond.mode = dependence::comonotone;
    cond.n_replicates = 100;
    cond.seed = conditional_seed;
    cond.threads = 1;
    auto gauss = bern_mix(dependence::gaussian, level_seed);
    gauss.n_replicates = 100;

    std::vector<std::function<std::string()>> experiments = {
        [] { return report(bern_mix(dependence::none, level_seed)); },
        [] { return report(bern_mix(dependence::comonotone, power_seed)); },
        [=] { return report(gauss); },
        [] { return report(degenerate_conditioning()); },
        [=] { return report(cond); },
    };
    std::size_t differ = 0;
    for (const auto& e : experiments)
        if (e() != e()) ++differ;
    return {differ == 0, std::to_string(experiments.size()) + " experiments rerun, " + std::to_string(differ) +
                             " reports differ"};
}

} // namespace

int main() {
    run(1, "uniform_z_law", 5, uniform_z_law);
    run(2, "jump_set", 5, jump_set);
    run(3, "quantile_battery", 60, quantile_battery);
    run(4, "operator_correctness", 10, operator_correctness);
    run(5, "uniqueness", 30, uniqueness);
    run(6, "hand_instance", 0, hand_instance);
    run(7, "monte_carlo_level_and_power", 600, monte_carlo);
    run(8, "conditional_reduction", 0, reduction);
    run(9, "determinism", 0, determinism);
    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
