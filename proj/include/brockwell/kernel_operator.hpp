#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "mixed_distribution.hpp"
#include "quantile.hpp"
#include "transform.hpp"

// Finite-dimensional version of the operator that maps a kernel kappa(x, A)
// to the joint sub-distribution of (Z, Y~):
//
//   (T kappa)(z, A) = sum_i (I1 + I2)(x_i, z) kappa(x_i, A) mu({x_i})
//
// for purely atomic F with atoms x_1 < ... < x_m and a finite state space of
// size k. Rows of every matrix are indexed by a z-grid, columns by atoms
// (operator) or states (kernels and images).

namespace brockwell {

using matrix = Eigen::MatrixXd;

// Rank threshold relative to the largest singular value.
inline constexpr double rank_tolerance = 1e-9;

class kernel_matrix {
public:
    kernel_matrix(matrix entries, std::vector<double> atom_locations)
        : entries_(std::move(entries)), atoms_(std::move(atom_locations)) {
        if (static_cast<std::size_t>(entries_.rows()) != atoms_.size())
            throw error("kernel_matrix: " + std::to_string(entries_.rows()) + " rows for " +
                        std::to_string(atoms_.size()) + " atoms");
    }

    const matrix& entries() const { return entries_; }
    const std::vector<double>& atom_locations() const { return atoms_; }
    std::size_t rows() const { return atoms_.size(); }
    std::size_t states() const { return static_cast<std::size_t>(entries_.cols()); }

    // sup_x of the total variation of kappa(x, .).
    double norm() const {
        if (entries_.size() == 0) return 0.0;
        return entries_.cwiseAbs().rowwise().sum().maxCoeff();
    }

    bool is_stochastic(double tol = 1e-12) const {
        if ((entries_.array() < 0.0).any()) return false;
        for (Eigen::Index r = 0; r < entries_.rows(); ++r)
            if (std::abs(entries_.row(r).sum() - 1.0) > tol) return false;
        return true;
    }

private:
    matrix entries_;
    std::vector<double> atoms_;
};

struct operator_matrix {
    std::vector<double> z_grid;
    std::vector<double> atom_locations;
    matrix entries; // |z_grid| x m, (I1 + I2)(x_i, z_j) mu({x_i})
    matrix beta;    // |z_grid| x k, F_Z(z_j) nu(A)
};

struct uniqueness_report {
    std::size_t rank = 0;
    std::size_t null_space_dim = 0;
    double kappa0_residual = 0.0;
    std::size_t grid_size = 0;
    // Filled in when the default grid is used: the same check on the grid
    // with a midpoint inserted into every cell.
    std::optional<std::size_t> refined_null_space_dim;
    std::size_t refined_grid_size = 0;
    bool verdict = false;
};

struct norm_check {
    double norm_in = 0.0;
    double norm_out = 0.0;
    bool ok = false;
};

// H((z - F(x-)) / mu({x})) for x in D_F, else 0. Evaluated as the CDF of the
// image of H under u -> F(x-) + mu({x}) u, built with the same jump_image as
// transform_law, so that summing over atoms reproduces F_Z at its own jumps.
inline double integrand_i1(const transform_spec& spec, double x, double z) {
    const auto& f = spec.f();
    if (!f.is_atom(x)) return 0.0;
    const double below = f.cdf_left(x);
    const double above = f.cdf(x);
    double total = 0.0;
    for (const auto& a : spec.h().atoms())
        if (jump_image(below, above, a.location) <= z) total += a.mass;
    for (const auto& p : spec.h().pieces()) {
        const double lo = jump_image(below, above, p.lower);
        const double hi = jump_image(below, above, p.upper);
        if (z >= hi) total += p.mass;
        else if (z > lo) total += p.mass * ((z - lo) / (hi - lo));
    }
    return std::min(total, 1.0);
}

// Indicator of x in (-inf, q_right(z)] minus D_F. The half-line is empty for
// z <= 0 and the whole line for z >= 1.
inline double integrand_i2(const mixed_distribution& f, double x, double z) {
    if (z <= 0.0 || f.is_atom(x)) return 0.0;
    if (z >= 1.0) return 1.0;
    return x <= q_right(f, z) ? 1.0 : 0.0;
}

namespace detail {

inline void check_probability_vector(std::span<const double> nu) {
    if (nu.empty()) throw error("state distribution nu is empty");
    double total = 0.0;
    for (double v : nu) {
        if (!(v >= 0.0)) throw error("state distribution nu has a negative entry");
        total += v;
    }
    if (std::abs(total - 1.0) > mass_tolerance) throw error("state distribution nu does not sum to 1");
}

inline void require_atomic(const transform_spec& spec) {
    if (!spec.f().purely_atomic()) throw error("continuous part unsupported in operator build");
}

} // namespace detail

inline operator_matrix build_operator_matrix(const transform_spec& spec, std::span<const double> z_grid,
                                             std::span<const double> nu) {
    detail::require_atomic(spec);
    detail::check_probability_vector(nu);
    for (double z : z_grid)
        if (!(z > 0.0 && z <= 1.0)) throw error("z-grid value outside (0, 1]: " + std::to_string(z));

    const auto& f = spec.f();
    const auto law = transform_law(spec);
    const auto n_grid = static_cast<Eigen::Index>(z_grid.size());
    const auto m = static_cast<Eigen::Index>(f.atoms().size());
    const auto k = static_cast<Eigen::Index>(nu.size());

    operator_matrix op;
    op.z_grid.assign(z_grid.begin(), z_grid.end());
    for (const auto& a : f.atoms()) op.atom_locations.push_back(a.location);
    op.entries = matrix::Zero(n_grid, m);
    op.beta = matrix::Zero(n_grid, k);
    for (Eigen::Index j = 0; j < n_grid; ++j) {
        const double z = z_grid[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < m; ++i) {
            const double x = op.atom_locations[static_cast<std::size_t>(i)];
            op.entries(j, i) = (integrand_i1(spec, x, z) + integrand_i2(f, x, z)) * f.jump(x);
        }
        const double fz = law.cdf(z);
        for (Eigen::Index a = 0; a < k; ++a) op.beta(j, a) = fz * nu[static_cast<std::size_t>(a)];
    }
    return op;
}

// Grid of z values where the operator's columns change: F(x_n-), F(x_n) and
// each atom's image F(x_n-) + mu({x_n}) t of the randomizer quantiles
// t = H^{-1}(0.25), H^{-1}(0.5), H^{-1}(0.75) and the top of H's support,
// restricted to (0, 1].
inline std::vector<double> default_z_grid(const transform_spec& spec) {
    detail::require_atomic(spec);
    const auto& f = spec.f();
    const auto& h = spec.h();
    const double ts[] = {q_left(h, 0.25), q_left(h, 0.5), q_left(h, 0.75), h.support_max()};
    std::vector<double> zs;
    for (const auto& a : f.atoms()) {
        zs.push_back(f.cdf_left(a.location));
        zs.push_back(f.cdf(a.location));
        for (double t : ts) zs.push_back(transform(f, a.location, t));
    }
    std::erase_if(zs, [](double z) { return !(z > 0.0 && z <= 1.0); });
    return dedup(std::move(zs));
}

// Inserts the midpoint of every cell (0, z_1], (z_1, z_2], ...
inline std::vector<double> refine_grid(std::span<const double> z_grid) {
    std::vector<double> out;
    double prev = 0.0;
    for (double z : z_grid) {
        out.push_back(0.5 * (prev + z));
        out.push_back(z);
        prev = z;
    }
    return out;
}

// kappa_0(x, A) = nu(A) for every x.
inline kernel_matrix degenerate_kernel(std::span<const double> nu, std::size_t m,
                                       std::vector<double> atom_locations = {}) {
    detail::check_probability_vector(nu);
    if (m == 0) throw error("degenerate_kernel needs at least one row");
    if (atom_locations.empty()) atom_locations.assign(m, 0.0);
    matrix e(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nu.size()));
    for (Eigen::Index r = 0; r < e.rows(); ++r)
        for (Eigen::Index c = 0; c < e.cols(); ++c) e(r, c) = nu[static_cast<std::size_t>(c)];
    return {std::move(e), std::move(atom_locations)};
}

inline matrix apply_operator(const operator_matrix& op, const kernel_matrix& kappa) {
    if (static_cast<Eigen::Index>(kappa.rows()) != op.entries.cols())
        throw error("apply_operator: kernel has " + std::to_string(kappa.rows()) + " rows, operator has " +
                    std::to_string(op.entries.cols()) + " atoms");
    return op.entries * kappa.entries();
}

inline std::size_t numerical_rank(const matrix& a, double rel_tol = rank_tolerance) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<matrix> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cutoff = rel_tol * s(0);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) ++r;
    return r;
}

namespace detail {

inline void check_uniqueness_hypotheses(const transform_spec& spec) {
    if (!spec.f().purely_atomic())
        throw error("uniqueness_check requires a purely atomic F (continuous part unsupported in operator build)");
    if (!enumerate_atoms(spec.f()).well_ordered) throw error("uniqueness_check requires well-ordered atoms");
}

inline void fill_grid_result(const transform_spec& spec, std::span<const double> grid, std::span<const double> nu,
                             double rel_tol, std::size_t& rank, std::size_t& null_dim, double& residual) {
    const auto op = build_operator_matrix(spec, grid, nu);
    const auto m = static_cast<std::size_t>(op.entries.cols());
    rank = numerical_rank(op.entries, rel_tol);
    null_dim = m - rank;
    const auto k0 = degenerate_kernel(nu, m, op.atom_locations);
    residual = (apply_operator(op, k0) - op.beta).cwiseAbs().maxCoeff();
}

} // namespace detail

// Checks that kappa_0 is the only kernel solving T kappa = beta on the grid:
// the operator's null space must be {0}. Without an explicit grid the default
// grid is used and the result is re-checked on its refinement.
inline uniqueness_report uniqueness_check(const transform_spec& spec, std::span<const double> nu,
                                          std::optional<std::vector<double>> z_grid = std::nullopt,
                                          double rel_tol = rank_tolerance) {
    detail::check_uniqueness_hypotheses(spec);
    detail::check_probability_vector(nu);
    const bool use_default = !z_grid.has_value();
    const auto grid = use_default ? default_z_grid(spec) : std::move(*z_grid);

    uniqueness_report rep;
    rep.grid_size = grid.size();
    detail::fill_grid_result(spec, grid, nu, rel_tol, rep.rank, rep.null_space_dim, rep.kappa0_residual);
    rep.verdict = rep.null_space_dim == 0;
    if (use_default) {
        const auto fine = refine_grid(grid);
        std::size_t rank = 0, null_dim = 0;
        double residual = 0.0;
        detail::fill_grid_result(spec, fine, nu, rel_tol, rank, null_dim, residual);
        rep.refined_null_space_dim = null_dim;
        rep.refined_grid_size = fine.size();
        rep.kappa0_residual = std::max(rep.kappa0_residual, residual);
        rep.verdict = rep.verdict && null_dim == 0;
    }
    return rep;
}

// Uniform state distribution over k states.
inline uniqueness_report uniqueness_check(const transform_spec& spec, std::size_t k,
                                          std::optional<std::vector<double>> z_grid = std::nullopt,
                                          double rel_tol = rank_tolerance) {
    if (k == 0) throw error("uniqueness_check needs at least one state");
    const std::vector<double> nu(k, 1.0 / static_cast<double>(k));
    return uniqueness_check(spec, std::span<const double>(nu), std::move(z_grid), rel_tol);
}

// ||T kappa|| against the bound 2 ||kappa||.
inline norm_check operator_norm_check(const operator_matrix& op, const kernel_matrix& kappa) {
    norm_check out;
    out.norm_in = kappa.norm();
    const matrix image = apply_operator(op, kappa);
    out.norm_out = image.size() == 0 ? 0.0 : image.cwiseAbs().rowwise().sum().maxCoeff();
    out.ok = out.norm_out <= 2.0 * out.norm_in + 1e-12;
    return out;
}

} // namespace brockwell
