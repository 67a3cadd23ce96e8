#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "generators.hpp"
#include "mixed_distribution.hpp"
#include "quantile.hpp"
#include "random.hpp"
#include "transform.hpp"

// Property battery for the generalized inverses and the transform law.
//
// Every check is an exact comparison of doubles except the two that are
// stated with a tolerance (continuous round trip, uniform law). Limit forms
// F(q-) <= y are only asserted where F jumps at q: at a continuity point the
// left limit equals F(q) and the statement holds with equality over the
// reals, which floating point cannot represent. The epsilon form
// F(q - eps) <= y is asserted everywhere instead.

namespace brockwell {

struct claim_tally {
    std::string name;
    std::size_t checks = 0;
    std::size_t failures = 0;
};

struct battery_report {
    std::size_t n_distributions = 0;
    std::vector<claim_tally> claims;
    std::vector<mixed_distribution> failing;

    bool passed() const {
        for (const auto& c : claims)
            if (c.failures) return false;
        return true;
    }
};

namespace detail {

class battery_run {
public:
    battery_run(battery_report& rep) : rep_(rep) {}

    void check(const std::string& claim, bool ok) {
        auto& t = tally(claim);
        ++t.checks;
        if (!ok) {
            ++t.failures;
            failed_ = true;
        }
    }

    bool failed() const { return failed_; }

private:
    claim_tally& tally(const std::string& name) {
        for (auto& c : rep_.claims)
            if (c.name == name) return c;
        rep_.claims.push_back({name, 0, 0});
        return rep_.claims.back();
    }

    battery_report& rep_;
    bool failed_ = false;
};

inline double next_down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
inline double next_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

inline double probe_x(const mixed_distribution& d, rng_type& rng) {
    const auto b = d.breakpoints();
    const double lo = d.support_min() - 1.0;
    const double hi = d.support_max() + 1.0;
    switch (uniform_below(rng, 5)) {
    case 0: return b[uniform_below(rng, b.size())];
    case 1: return next_down(b[uniform_below(rng, b.size())]);
    case 2: return next_up(b[uniform_below(rng, b.size())]);
    default: return lo + (hi - lo) * uniform01(rng);
    }
}

inline double probe_y(const mixed_distribution& d, rng_type& rng) {
    const auto b = d.breakpoints();
    if (uniform_below(rng, 3) == 0) {
        const std::size_t k = uniform_below(rng, b.size());
        const double v = uniform_below(rng, 2) ? d.right_value(k) : d.left_value(k);
        if (v > 0.0 && v < 1.0) return v;
    }
    return uniform_open01(rng);
}

} // namespace detail

// Runs every check on one distribution with `probes` random (x, y) pairs.
// Returns true if nothing failed.
inline bool check_lemmas(const mixed_distribution& d, std::size_t probes, rng_type& rng, battery_report& rep) {
    detail::battery_run run(rep);
    const auto b = d.breakpoints();
    const auto flats = flat_set(d);

    // the atom enumeration is strictly increasing
    {
        const auto en = enumerate_atoms(d);
        bool ok = en.well_ordered;
        for (std::size_t i = 1; i < en.entries.size(); ++i)
            ok = ok && en.entries[i - 1].location < en.entries[i].location && en.entries[i].index == i + 1;
        run.check("atom_enumeration_increasing", ok);
    }

    for (std::size_t p = 0; p < probes; ++p) {
        const double x = detail::probe_x(d, rng);
        const double y = detail::probe_y(d, rng);
        const double fx = d.cdf(x);
        const double ql = q_left(d, y);
        const double qr = q_right(d, y);

        run.check("galois_equivalence", (fx >= y) == (ql <= x));
        run.check("right_inverse_dominates", !(fx <= y) || qr >= x);
        run.check("right_inverse_strict", !(qr > x) || fx <= y);
        run.check("right_inverse_left_limit", d.cdf(detail::next_down(qr)) <= y);
        if (d.is_atom(qr)) run.check("right_inverse_left_limit", d.cdf_left(qr) <= y);
        run.check("inverse_order", ql <= qr);

        const double y2 = detail::probe_y(d, rng);
        const double lo_y = std::min(y, y2), hi_y = std::max(y, y2);
        run.check("inverse_monotone", q_left(d, lo_y) <= q_left(d, hi_y) && q_right(d, lo_y) <= q_right(d, hi_y));

        // epsilon form, with the smallest and a random epsilon
        const double eps = uniform01(rng) + 1e-9;
        run.check("inverse_cdf_bounds", d.cdf(detail::next_down(ql)) < y && y <= d.cdf(ql));
        run.check("inverse_cdf_bounds", d.cdf(ql - eps) < y);
        run.check("inverse_cdf_bounds", d.cdf(detail::next_down(qr)) <= y && d.cdf(qr - eps) <= y);
        if (d.is_atom(ql)) run.check("inverse_cdf_bounds", d.cdf_left(ql) <= y && y <= d.cdf(ql));

        // round trips on G = {0 < F < 1}
        if (fx > 0.0 && fx < 1.0) {
            const double back_l = q_left(d, fx);
            const double back_r = q_right(d, fx);
            run.check("roundtrip_bounds", back_l <= x && back_r >= x);
            bool in_e1 = false, in_e2 = false;
            for (const auto& fl : flats) {
                in_e1 = in_e1 || fl.e1(d).contains(x);
                in_e2 = in_e2 || fl.e2().contains(x);
            }
            // (E1, E2 subsets) exact; (converse) for gaps wider than rounding
            const double slack = 1e-9 * (1.0 + std::abs(x));
            run.check("flat_decomposition", !in_e1 || back_l < x);
            run.check("flat_decomposition", !in_e2 || back_r > x);
            run.check("flat_decomposition", !(back_l < x - slack) || in_e1);
            run.check("flat_decomposition", !(back_r > x + slack) || in_e2);
            // points where q_left(F(x)) < x carry no atom
            run.check("null_set", !(back_l < x) || !d.is_atom(x));
        }
    }

    // every flat level
    for (const auto& fl : flats) {
        run.check("flat_identities", d.cdf(fl.lo) == fl.level && d.cdf_left(fl.hi) == fl.level);
        run.check("flat_identities", d.cdf(0.5 * (fl.lo + fl.hi)) == fl.level);
        run.check("flat_identities", q_left(d, fl.level) == fl.lo && q_right(d, fl.level) == fl.hi);
    }

    // every atom, endpoints of the jump included
    for (const auto& a : d.atoms()) {
        const double lo = d.cdf_left(a.location);
        const double hi = d.cdf(a.location);
        std::vector<double> ys = {lo + (hi - lo) * uniform_open01(rng), hi, lo};
        for (double y : ys) {
            if (!(y > 0.0 && y < 1.0)) continue;
            if (y > lo && y <= hi) run.check("atom_identities", q_left(d, y) == a.location);
            if (y >= lo && y < hi) run.check("atom_identities", q_right(d, y) == a.location);
        }
    }

    // sampled points are never in the null set, and on a continuous F
    // both inverses undo F
    for (std::size_t s = 0; s < 200; ++s) {
        const double xs = sample(d, rng);
        const double fx = d.cdf(xs);
        if (fx > 0.0 && fx < 1.0) run.check("null_set", q_left(d, fx) == xs);
        if (d.non_atomic() && fx > 0.0 && fx < 1.0)
            run.check("continuous_roundtrip",
                      std::abs(q_left(d, fx) - xs) <= 1e-12 && std::abs(q_right(d, fx) - xs) <= 1e-12);
    }

    // uniform randomizer gives a uniform law; jump set of F_Z
    {
        const auto law = transform_law(transform_spec(d, mixed_distribution::uniform()));
        double dev = 0.0;
        for (double z : law.breakpoints()) {
            dev = std::max(dev, std::abs(law.cdf(z) - std::clamp(z, 0.0, 1.0)));
            dev = std::max(dev, std::abs(law.cdf_left(z) - std::clamp(z, 0.0, 1.0)));
        }
        run.check("uniform_law", law.atoms().empty() && dev < 1e-12);

        const transform_spec two_atom(d, mixed_distribution({{0.5, 0.5}, {1.0, 0.5}}, {}));
        std::vector<double> law_atoms;
        const auto two_atom_law = transform_law(two_atom);
        for (const auto& a : two_atom_law.atoms()) law_atoms.push_back(a.location);
        run.check("jump_set", law_atoms == z_discontinuities(two_atom));
    }

    ++rep.n_distributions;
    if (run.failed()) rep.failing.push_back(d);
    return !run.failed();
}

inline battery_report verify_lemmas(std::size_t n_distributions, std::uint64_t seed, std::size_t probes = 10'000,
                                    const std::vector<mixed_distribution>& injected = {}) {
    if (n_distributions == 0) throw error("verify_lemmas needs at least one distribution");
    battery_report rep;
    for (std::size_t i = 0; i < n_distributions; ++i) {
        auto rng = make_rng(seed, i, 0);
        const auto d = i < injected.size() ? injected[i] : random_mixed_distribution(rng);
        check_lemmas(d, probes, rng, rep);
    }
    return rep;
}

} // namespace brockwell
