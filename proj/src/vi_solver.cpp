#include "drawdown/vi_solver.hpp"

#include "drawdown/errors.hpp"
#include "drawdown/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace drawdown {

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x) {
    const std::size_t n = diag.size();
    std::vector<double> c_prime(n);
    c_prime[0] = upper[0] / diag[0];
    x[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double factor = 1.0 / (diag[i] - lower[i] * c_prime[i - 1]);
        c_prime[i] = i + 1 < n ? upper[i] * factor : 0.0;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) * factor;
    }
    for (std::size_t i = n - 1; i > 0; --i) {
        x[i - 1] -= c_prime[i - 1] * x[i];
    }
}

double default_x_max(const Model& m) {
    const auto& p = m.params;
    double x_max = std::max(2.0 * m.constants.x_infty, 20.0 * p.sigma() * p.sigma() / p.mu());
    if (m.constants.y0) x_max = std::max(x_max, 3.0 * *m.constants.y0);
    return x_max;
}

SolverGrid make_grid(const Model& m, std::optional<double> x_max, int nx, int nc) {
    SolverGrid grid{x_max.value_or(default_x_max(m)), nx, nc, m.params.cbar()};
    std::ostringstream why;
    if (nx < 100) {
        why << "nx must be at least 100, got " << nx;
    } else if (nc < 1) {
        why << "nc must be positive, got " << nc;
    } else if (!(grid.x_max > m.constants.x_infty)) {
        why << "x_max=" << grid.x_max << " must exceed x_infty=" << m.constants.x_infty;
    } else if (m.constants.y0 && !(grid.x_max > 3.0 * *m.constants.y0)) {
        why << "x_max=" << grid.x_max << " must exceed 3 y0=" << 3.0 * *m.constants.y0;
    } else {
        return grid;
    }
    throw Error(ErrorKind::Config, why.str());
}

SolverOptions SolverOptions::defaults_for(const Model& m) {
    SolverOptions options;
    const double scale = m.params.cbar() / m.params.r();
    options.tol_fix = 1e-10 * scale;
    options.tol_obstacle = 1e-8 * scale;
    return options;
}

namespace {

// Three-point row of -sigma^2/2 v'' - (mu - c d) v' + r v = c d for one
// control value d. Central differencing whenever the cell Peclet number
// keeps both off-diagonals nonnegative, upwind otherwise; either way the
// row belongs to an M-matrix.
struct Stencil {
    double lower = 0.0;  // weight on v[j-1], enters the row as -lower
    double upper = 0.0;  // weight on v[j+1], enters the row as -upper
    double diag = 0.0;
    double source = 0.0;
    double d = 1.0;

    Stencil(double d_, double c, double dx, const ModelParams& p) : d(d_) {
        const double s2 = p.sigma() * p.sigma();
        const double diffusion = 0.5 * s2 / (dx * dx);
        const double drift = p.mu() - c * d;
        if (std::abs(drift) * dx <= s2) {
            lower = diffusion - 0.5 * drift / dx;
            upper = diffusion + 0.5 * drift / dx;
        } else if (drift > 0.0) {
            lower = diffusion;
            upper = diffusion + drift / dx;
        } else {
            lower = diffusion - drift / dx;
            upper = diffusion;
        }
        diag = lower + upper + p.r();
        source = c * d;
    }

    double apply(std::span<const double> v, int j) const {
        return diag * v[j] - lower * v[j - 1] - upper * v[j + 1] - source;
    }
};

struct ControlPair {
    Stencil low;   // d = b
    Stencil high;  // d = 1

    ControlPair(double c, double dx, const ModelParams& p)
        : low(p.b(), c, dx, p), high(1.0, c, dx, p) {}

    // Minimizing row value; ties go to d = 1.
    const Stencil& select(std::span<const double> v, int j) const {
        return high.apply(v, j) <= low.apply(v, j) ? high : low;
    }
};

}  // namespace

double discrete_residual(std::span<const double> v, int j, double c, const SolverGrid& grid,
                         const Model& m) {
    const ControlPair controls(c, grid.dx(), m.params);
    return std::min(controls.high.apply(v, j), controls.low.apply(v, j));
}

LevelSolution solve_obstacle_level(std::span<const double> v_prev, double c_i,
                                   const SolverGrid& grid, const Model& m,
                                   const SolverOptions& options,
                                   std::optional<double> right_value) {
    const int nx = grid.nx;
    const auto n = static_cast<std::size_t>(nx + 1);
    if (v_prev.size() != n) {
        throw Error(ErrorKind::Domain, "obstacle row does not match the grid");
    }
    const bool exact = std::isinf(options.rho);
    const ControlPair controls(c_i, grid.dx(), m.params);
    const double right = right_value.value_or(v_prev[nx]);

    std::vector<double> w(v_prev.begin(), v_prev.end());
    w[0] = 0.0;
    w[nx] = right;

    std::vector<const Stencil*> policy(n, &controls.high);
    std::vector<std::uint8_t> active(n, 0);
    std::vector<const Stencil*> last_policy;
    std::vector<std::uint8_t> last_active;

    std::vector<double> lower(n), diag(n), upper(n), rhs(n), next(n);
    lower[0] = upper[0] = 0.0;
    diag[0] = 1.0;
    rhs[0] = 0.0;
    lower[nx] = upper[nx] = 0.0;
    diag[nx] = 1.0;
    rhs[nx] = right;

    auto assemble = [&](int j, const Stencil& s) {
        lower[j] = -s.lower;
        upper[j] = -s.upper;
        diag[j] = s.diag;
        rhs[j] = s.source;
    };
    auto change = [&] {
        double out = 0.0;
        for (std::size_t j = 0; j < n; ++j) out = std::max(out, std::abs(next[j] - w[j]));
        return out;
    };

    LevelStats stats;
    double delta = 0.0;

    // Warm start: control iteration around a projected Thomas sweep, exact
    // when the contact set is an interval reaching x_max. Policy iteration
    // below confirms it; from w = obstacle alone the active set would only
    // retreat one node per sweep.
    for (int iter = 0; iter < options.max_iter; ++iter) {
        for (int j = 1; j < nx; ++j) {
            policy[j] = &controls.select(w, j);
            assemble(j, *policy[j]);
        }
        if (iter > 0 && policy == last_policy) break;
        std::vector<double> c_prime(n);
        c_prime[0] = 0.0;
        next[0] = 0.0;
        for (std::size_t j = 1; j < n; ++j) {
            const double factor = 1.0 / (diag[j] - lower[j] * c_prime[j - 1]);
            c_prime[j] = upper[j] * factor;
            next[j] = (rhs[j] - lower[j] * next[j - 1]) * factor;
        }
        for (std::size_t j = n - 1; j-- > 1;) {
            next[j] = std::max(v_prev[j], next[j] - c_prime[j] * next[j + 1]);
        }
        delta = change();
        w.swap(next);
        last_policy = policy;
        ++stats.iterations;
        if (delta <= 1e-3 * options.tol_fix) break;
    }
    last_policy.clear();

    bool converged = false;
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        for (int j = 1; j < nx; ++j) {
            const Stencil& s = controls.select(w, j);
            policy[j] = &s;
            if (exact) {
                active[j] = s.diag * (w[j] - v_prev[j]) < s.apply(w, j) ? 1 : 0;
            } else {
                active[j] = w[j] < v_prev[j] ? 1 : 0;
            }
        }
        if (iter > 0 && policy == last_policy && active == last_active) {
            converged = true;
            break;
        }
        if (iter == options.max_iter) break;

        for (int j = 1; j < nx; ++j) {
            if (active[j] && exact) {
                lower[j] = upper[j] = 0.0;
                diag[j] = 1.0;
                rhs[j] = v_prev[j];
                continue;
            }
            assemble(j, *policy[j]);
            if (active[j]) {
                diag[j] += options.rho;
                rhs[j] += options.rho * v_prev[j];
            }
        }
        solve_tridiagonal(lower, diag, upper, rhs, next);
        delta = change();
        w.swap(next);
        last_policy = policy;
        last_active = active;
        ++stats.iterations;
        // Policy flips at exact ties cannot move the iterate.
        if (delta <= 1e-3 * options.tol_fix) {
            converged = true;
            break;
        }
    }
    stats.last_delta = delta;
    if (!converged) {
        std::ostringstream why;
        why << "policy iteration did not converge in " << options.max_iter
            << " iterations (last change " << delta << ")";
        throw NonConvergence(options.max_iter, delta, why.str());
    }

    LevelSolution out;
    out.d.assign(n, 1.0);
    out.obstacle.assign(n, 0);
    double undershoot = 0.0;
    for (std::size_t j = 0; j < n; ++j) undershoot = std::max(undershoot, v_prev[j] - w[j]);
    if (undershoot > options.tol_obstacle) {
        std::ostringstream why;
        why << "solution undershoots the obstacle by " << undershoot;
        throw Error(ErrorKind::ObstacleViolation, why.str());
    }

    for (int j = 1; j < nx; ++j) {
        const double residual = std::min(controls.high.apply(w, j), controls.low.apply(w, j));
        out.d[j] = controls.select(w, j).d;
        if (active[j]) {
            out.obstacle[j] = 1;
            ++stats.active_nodes;
            stats.residual_active = stats.active_nodes == 1
                                        ? residual
                                        : std::min(stats.residual_active, residual);
        } else {
            stats.residual_inactive = std::max(stats.residual_inactive, std::abs(residual));
        }
    }
    const auto slopes = first_difference(w, grid.dx());
    out.d[0] = slopes[0] <= 1.0 ? 1.0 : m.params.b();
    out.d[nx] = slopes[nx] <= 1.0 ? 1.0 : m.params.b();
    out.obstacle[nx] = w[nx] == v_prev[nx] ? 1 : 0;

    out.v = std::move(w);
    out.stats = stats;
    return out;
}

std::vector<double> first_difference(std::span<const double> v, double dx) {
    const std::size_t n = v.size();
    std::vector<double> out(n, 0.0);
    if (n < 3) return out;
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (v[j + 1] - v[j - 1]) / (2.0 * dx);
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
    return out;
}

double ValueSurface::lipschitz_c() const {
    double k = 0.0;
    for (double x : u.data()) k = std::max(k, std::abs(x));
    return k;
}

ValueSurface solve_system(const Model& m, const SolverGrid& grid, const SolverOptions& options) {
    const auto rows = static_cast<std::size_t>(grid.nc + 1);
    const auto cols = static_cast<std::size_t>(grid.nx + 1);
    const double b = m.params.b();

    ValueSurface s;
    s.grid = grid;
    s.b = b;
    s.v = Matrix<double>(rows, cols);
    s.vx = Matrix<double>(rows, cols);
    s.d = Matrix<double>(rows, cols, 1.0);
    s.obstacle_active = Matrix<std::uint8_t>(rows, cols, 0);
    s.u = Matrix<double>(rows, cols, 0.0);
    s.stats.assign(rows, LevelStats{});

    for (int j = 0; j <= grid.nx; ++j) {
        const Jet g = boundary_jet(m, grid.x(j));
        s.v(0, j) = g.value;
        s.vx(0, j) = g.dx;
        s.d(0, j) = g.dx <= 1.0 ? 1.0 : b;
    }

    if (m.constants.regime == Regime::Simple && !options.force_recursion) {
        s.closed_form = true;
        for (std::size_t i = 1; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                s.v(i, j) = s.v(0, j);
                s.vx(i, j) = s.vx(0, j);
                s.d(i, j) = s.d(0, j);
                s.obstacle_active(i, j) = j > 0 ? 1 : 0;
            }
        }
        return s;
    }

    for (int i = 1; i <= grid.nc; ++i) {
        LevelSolution level;
        try {
            level = solve_obstacle_level(s.v.row(i - 1), grid.c(i), grid, m, options);
        } catch (const NonConvergence& e) {
            throw NonConvergence(e.iterations(), e.last_delta(),
                                 "level " + std::to_string(i) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), "level " + std::to_string(i) + ": " + e.what());
        }
        const auto slopes = first_difference(level.v, grid.dx());
        for (std::size_t j = 0; j < cols; ++j) {
            s.v(i, j) = level.v[j];
            s.vx(i, j) = slopes[j];
            s.d(i, j) = level.d[j];
            s.obstacle_active(i, j) = level.obstacle[j];
            s.u(i, j) = (level.v[j] - s.v(i - 1, j)) / grid.dc();
        }
        s.stats[i] = level.stats;
    }
    return s;
}

namespace {

struct Bracket {
    std::size_t lo;
    double t;
};

Bracket locate(double pos, int last) {
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(last));
    auto lo = static_cast<std::size_t>(std::floor(clamped));
    if (lo >= static_cast<std::size_t>(last)) lo = static_cast<std::size_t>(last) - 1;
    return {lo, clamped - static_cast<double>(lo)};
}

}  // namespace

double surface_interpolate(const ValueSurface& s, double x, double c) {
    const auto& grid = s.grid;
    if (!(x >= 0.0) || x > grid.x_max || !(c >= 0.0) || c > grid.cbar) {
        throw Error(ErrorKind::Domain, "surface query outside the grid");
    }
    const Bracket bx = locate(x / grid.dx(), grid.nx);
    const Bracket bc = locate((grid.cbar - c) / grid.dc(), grid.nc);
    auto along_x = [&](std::size_t i) {
        return (1.0 - bx.t) * s.v(i, bx.lo) + bx.t * s.v(i, bx.lo + 1);
    };
    return (1.0 - bc.t) * along_x(bc.lo) + bc.t * along_x(bc.lo + 1);
}

double level_vx(const ValueSurface& s, int level, double x) {
    const Bracket bx = locate(x / s.grid.dx(), s.grid.nx);
    const auto i = static_cast<std::size_t>(level);
    return (1.0 - bx.t) * s.vx(i, bx.lo) + bx.t * s.vx(i, bx.lo + 1);
}

}  // namespace drawdown
