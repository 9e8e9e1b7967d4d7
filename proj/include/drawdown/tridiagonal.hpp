#pragma once

#include <span>

namespace drawdown {

/// Thomas algorithm for lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j].
/// lower[0] and upper[n-1] are ignored. Stable without pivoting for
/// diagonally dominant (M-matrix) systems, which is all the solver produces.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x);

}  // namespace drawdown
