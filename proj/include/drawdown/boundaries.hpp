#pragma once

/**
 * @file boundaries.hpp
 * @brief Switching and converting boundaries read off a solved surface
 *
 * Conventions: 𝒳(c_i) is the level-i free point x_i, the smallest x beyond
 * which v_i and v_{i-1} coincide, so (x, c_i) with x >= 𝒳(c_i) can raise
 * its running maximum to c_{i-1} at no cost. The top level has no level
 * above it; its entry is the limit x_1. 𝒴(c_i) is where v_x crosses 1.
 */

#include "drawdown/vi_solver.hpp"

#include <optional>
#include <vector>

namespace drawdown {

struct FreeBoundaries {
    std::vector<double> c;       ///< c_i, i = 0..nc
    std::vector<double> X;       ///< 𝒳(c_i); X[0] = x_1
    std::vector<double> Y;       ///< 𝒴(c_i)
    std::vector<double> x_free;  ///< x_i for i = 1..nc; x_free[0] repeats x_1
    std::vector<double> vx_at_X; ///< interpolated v_x(𝒳(c_i), c_i)
    std::optional<double> y0_ref;
    double eps_fb = 0.0;
    /// Levels where 𝒳 increases as c decreases. Reported, never enforced.
    int x_monotonicity_violations = 0;
};

/// 1e-8 cbar/r.
double default_eps_fb(const Model& m);

/// Free points of every level. Error(NotFound) when only the Dirichlet node
/// at x_max qualifies, which means the truncation is too small.
std::vector<double> extract_switching_boundary(const ValueSurface& s, double eps_fb);

/// 𝒴 per level by linear inverse interpolation of v_x = 1; zero where
/// v_x(0) <= 1 and everywhere on a closed-form surface. Error(NotFound) when
/// v_x > 1 on a whole row.
std::vector<double> extract_converting_boundary(const ValueSurface& s);

FreeBoundaries extract_boundaries(const ValueSurface& s, const Model& m, double eps_fb);

/// ξ(x, c): largest level c' >= c with |v(x, c') - v(x, c)| <= eps_fb.
/// Queries with x below dx are evaluated at dx, where rows still differ.
double equivalent_max_rate(const ValueSurface& s, double x, double c, double eps_fb);

/// 𝔪(x, c): smallest level c' <= c with |v(x, c') - v(x, c)| <= eps_fb.
double equivalent_min_rate(const ValueSurface& s, double x, double c, double eps_fb);

struct GuardedSolution {
    ValueSurface surface;
    FreeBoundaries boundaries;
    int doublings = 0;
};

/// Solves and extracts, doubling x_max (and nx, keeping dx) while the largest
/// 𝒳 lies beyond 0.9 x_max or extraction reports NotFound.
GuardedSolution solve_with_guard(const Model& m, SolverGrid grid, const SolverOptions& options,
                                 std::optional<double> eps_fb = std::nullopt,
                                 int max_doublings = 4);

}  // namespace drawdown
