#pragma once

/**
 * @file vi_solver.hpp
 * @brief Level-by-level solver for the variational inequality
 *
 * The running-maximum axis is discretized into levels c_i = cbar - i dc.
 * Level 0 is the closed-form boundary value; level i solves
 *
 *   min{ -L v_i - c_i T v_i, v_i - v_{i-1} } = 0,   v_i(0) = 0,
 *
 * on [0, x_max] with L v = sigma^2/2 v'' + mu v' - r v and
 * T v = max_{d in {b,1}} d (1 - v').
 *
 * Each level is a single-obstacle ODE with a bang-bang control. Both the
 * control and the obstacle are resolved by policy iteration (Howard), so
 * every sweep is one tridiagonal M-matrix solve.
 */

#include "drawdown/matrix.hpp"
#include "drawdown/model.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace drawdown {

struct SolverGrid {
    double x_max = 0.0;
    int nx = 0;  ///< spatial intervals
    int nc = 0;  ///< c-levels after the boundary level
    double cbar = 0.0;

    double dx() const noexcept { return x_max / nx; }
    double dc() const noexcept { return cbar / nc; }
    double x(int j) const noexcept { return j == nx ? x_max : j * dx(); }
    /// c_i = cbar - i dc, exactly 0 at i = nc.
    double c(int i) const noexcept { return i == nc ? 0.0 : cbar - i * dc(); }
};

/// max(3 y0, 2 x_infty, 20 sigma^2 / mu).
double default_x_max(const Model& m);

/// Validates nx >= 100, nc >= 1, x_max > x_infty and x_max > 3 y0.
/// An empty x_max selects default_x_max.
SolverGrid make_grid(const Model& m, std::optional<double> x_max, int nx = 4000, int nc = 300);

struct SolverOptions {
    /// Obstacle penalty. Infinity selects exact active-set rows (v = obstacle).
    double rho = std::numeric_limits<double>::infinity();
    double tol_fix = 0.0;       ///< sup-norm change accepted as converged
    double tol_obstacle = 0.0;  ///< allowed undershoot of the obstacle
    int max_iter = 200;
    /// Run the level recursion even in the Simple regime.
    bool force_recursion = false;

    /// tol_fix = 1e-10 cbar/r, tol_obstacle = 1e-8 cbar/r.
    static SolverOptions defaults_for(const Model& m);
};

struct LevelStats {
    int iterations = 0;
    double last_delta = 0.0;
    /// max |F| over interior nodes where the obstacle is inactive.
    double residual_inactive = 0.0;
    /// min F over interior nodes where the obstacle binds (complementarity).
    double residual_active = 0.0;
    int active_nodes = 0;
};

struct LevelSolution {
    std::vector<double> v;
    std::vector<double> d;               ///< control in {b, 1} per node
    std::vector<std::uint8_t> obstacle;  ///< 1 where v equals the obstacle
    LevelStats stats;
};

/// Solves one obstacle level. Dirichlet v(0) = 0 and v(x_max) = right_value,
/// which defaults to v_prev(x_max).
///
/// Throws NonConvergence if policy iteration exceeds max_iter, and
/// Error(ObstacleViolation) if the result dips below v_prev by more than
/// tol_obstacle.
LevelSolution solve_obstacle_level(std::span<const double> v_prev, double c_i,
                                   const SolverGrid& grid, const Model& m,
                                   const SolverOptions& options,
                                   std::optional<double> right_value = std::nullopt);

struct ValueSurface {
    SolverGrid grid;
    double b = 0.0;
    Matrix<double> v;                      ///< (nc+1) x (nx+1)
    Matrix<double> vx;
    Matrix<double> d;                      ///< active control per node
    Matrix<std::uint8_t> obstacle_active;
    Matrix<double> u;                      ///< (v_i - v_{i-1}) / dc, row 0 zero
    std::vector<LevelStats> stats;         ///< per level, entry 0 analytic
    bool closed_form = false;              ///< Simple-regime short circuit

    /// max over levels and nodes of |u|.
    double lipschitz_c() const;
};

/// Central differences inside, second-order one-sided at the ends.
std::vector<double> first_difference(std::span<const double> v, double dx);

/// Whole surface. Row 0 is the analytic boundary value; rows 1..nc are
/// solved in order. Failures are rethrown with the level index prefixed.
ValueSurface solve_system(const Model& m, const SolverGrid& grid, const SolverOptions& options);

/// Bilinear interpolation; exact at nodes. Error(Domain) outside the grid.
double surface_interpolate(const ValueSurface& s, double x, double c);

/// Linear interpolation of v_x along x on one level.
double level_vx(const ValueSurface& s, int level, double x);

/// Discrete residual min_d [-L v - c d (1 - v')] at interior node j, using
/// the same stencils as the solver.
double discrete_residual(std::span<const double> v, int j, double c, const SolverGrid& grid,
                         const Model& m);

}  // namespace drawdown
