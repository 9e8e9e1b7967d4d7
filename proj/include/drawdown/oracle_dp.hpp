#pragma once

/**
 * @file oracle_dp.hpp
 * @brief Brute-force Markov decision process for cross-checking the solver
 *
 * Surplus on a uniform lattice with trinomial moves, running maximum on a
 * coarse ascending list of levels, value iteration with Jacobi sweeps. It
 * takes its own raw parameters and shares no discretization with the level
 * solver.
 */

#include "drawdown/matrix.hpp"

#include <string>
#include <vector>

namespace drawdown {

struct ValueSurface;

/// Unvalidated market and constraint parameters; sigma = 0 is allowed.
struct DPModel {
    double mu = 0.0;
    double sigma = 0.0;
    double r = 0.0;
    double cbar = 0.0;
    double b = 0.0;
};

struct DPSpec {
    double dx = 0.05;
    double x_max = 10.0;
    double dt = 1e-3;
    int m_levels = 30;  ///< including 0 and cbar
    int actions = 8;    ///< intervals between b M and M per level
};

struct DPAction {
    double rate = 0.0;
    double up = 0.0;
    double stay = 0.0;
    double down = 0.0;
};

struct DPInstance {
    DPModel model;
    std::vector<double> x;        ///< 0 = x[0] < ... < x_max; x[0] absorbing
    std::vector<double> m;        ///< ascending running-max levels
    double dt = 0.0;
    std::vector<std::vector<DPAction>> actions;  ///< per level, b m .. m
};

/// Error(Config) if a transition probability leaves [0, 1], which happens
/// when dt > dx^2 / (sigma^2 + |mu - a| dx).
DPInstance make_dp_instance(const DPModel& model, const DPSpec& spec);

/// Explicit grids, for hand-checkable chains.
DPInstance make_dp_instance(const DPModel& model, std::vector<double> x, std::vector<double> m,
                            double dt, int actions);

struct DPTable {
    std::vector<double> x;
    std::vector<double> m;
    Matrix<double> value;  ///< rows are m-levels, columns x nodes
    long sweeps = 0;
    double last_update = 0.0;
    double residual = 0.0;  ///< sup |B V - V| of the returned table
};

/// V(x, m) = max over levels j >= m and actions a of
/// [a dt + e^{-r dt} E V(X', j)], raising first and acting second.
/// Throws NonConvergence past max_sweeps.
DPTable value_iteration(const DPInstance& inst, double tol, long max_sweeps = 4'000'000);

/// One Bellman application, exposed for residual checks.
Matrix<double> bellman_apply(const DPInstance& inst, const Matrix<double>& v);

struct GapNode {
    double x = 0.0;
    double m = 0.0;
    double dp = 0.0;
    double pde = 0.0;
};

struct GapReport {
    double max_rel_gap = 0.0;
    double mean_rel_gap = 0.0;
    GapNode worst;
    double residual = 0.0;
    int nodes = 0;
    int nodes_over = 0;  ///< relative gap above the tolerance
    double x_lo = 0.0;
    double x_hi = 0.0;
};

/// Relative gaps at DP nodes with x in [x_lo, x_hi], interpolating the
/// solver surface there.
GapReport compare_surfaces(const DPTable& dp, const ValueSurface& surface, double x_lo,
                           double x_hi, double tolerance = 0.05);

}  // namespace drawdown
