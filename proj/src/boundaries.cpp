#include "drawdown/boundaries.hpp"

#include "drawdown/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace drawdown {

double default_eps_fb(const Model& m) { return 1e-8 * m.params.cbar() / m.params.r(); }

std::vector<double> extract_switching_boundary(const ValueSurface& s, double eps_fb) {
    const int nx = s.grid.nx;
    std::vector<double> free(static_cast<std::size_t>(s.grid.nc + 1), 0.0);
    for (int i = 1; i <= s.grid.nc; ++i) {
        const auto row = s.v.row(static_cast<std::size_t>(i));
        const auto prev = s.v.row(static_cast<std::size_t>(i - 1));
        int j = nx;
        while (j > 0 && row[j - 1] - prev[j - 1] <= eps_fb) --j;
        if (j == nx) {
            throw Error(ErrorKind::NotFound,
                        "level " + std::to_string(i) + ": no free point below x_max");
        }
        free[i] = s.grid.x(j);
    }
    if (s.grid.nc >= 1) free[0] = free[1];
    return free;
}

std::vector<double> extract_converting_boundary(const ValueSurface& s) {
    const auto rows = static_cast<std::size_t>(s.grid.nc + 1);
    std::vector<double> y(rows, 0.0);
    if (s.closed_form) return y;
    for (std::size_t i = 0; i < rows; ++i) {
        const auto vx = s.vx.row(i);
        if (vx[0] <= 1.0) continue;
        std::size_t j = 1;
        while (j < vx.size() && vx[j] > 1.0) ++j;
        if (j == vx.size()) {
            throw Error(ErrorKind::NotFound,
                        "level " + std::to_string(i) + ": v_x exceeds 1 on the whole row");
        }
        const double t = (vx[j - 1] - 1.0) / (vx[j - 1] - vx[j]);
        y[i] = s.grid.x(static_cast<int>(j - 1)) + t * s.grid.dx();
    }
    return y;
}

FreeBoundaries extract_boundaries(const ValueSurface& s, const Model& m, double eps_fb) {
    FreeBoundaries fb;
    fb.eps_fb = eps_fb;
    fb.y0_ref = m.constants.y0;
    for (int i = 0; i <= s.grid.nc; ++i) fb.c.push_back(s.grid.c(i));
    fb.x_free = extract_switching_boundary(s, eps_fb);
    fb.X = fb.x_free;
    fb.Y = extract_converting_boundary(s);
    for (int i = 0; i <= s.grid.nc; ++i) {
        fb.vx_at_X.push_back(level_vx(s, i, fb.X[static_cast<std::size_t>(i)]));
        if (i > 0 && fb.X[static_cast<std::size_t>(i)] > fb.X[static_cast<std::size_t>(i - 1)]) {
            ++fb.x_monotonicity_violations;
        }
    }
    return fb;
}

namespace {

double row_value(const ValueSurface& s, int level, double x) {
    const double pos = std::clamp(x / s.grid.dx(), 0.0, static_cast<double>(s.grid.nx));
    const int lo = std::min(static_cast<int>(pos), s.grid.nx - 1);
    const double t = pos - lo;
    const auto row = s.v.row(static_cast<std::size_t>(level));
    return (1.0 - t) * row[lo] + t * row[lo + 1];
}

// Level index at or just above c in rate (that is, index at or below in i).
int level_at_or_above(const SolverGrid& grid, double c) {
    const double pos = (grid.cbar - c) / grid.dc();
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) <= 1e-9) return static_cast<int>(nearest);
    return static_cast<int>(std::floor(pos));
}

int level_at_or_below(const SolverGrid& grid, double c) {
    const double pos = (grid.cbar - c) / grid.dc();
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) <= 1e-9) return static_cast<int>(nearest);
    return static_cast<int>(std::ceil(pos));
}

}  // namespace

double equivalent_max_rate(const ValueSurface& s, double x, double c, double eps_fb) {
    const double xe = std::max(x, s.grid.dx());
    const double reference = surface_interpolate(s, xe, c);
    double result = c;
    for (int k = level_at_or_above(s.grid, c); k >= 0; --k) {
        if (std::abs(row_value(s, k, xe) - reference) > eps_fb) break;
        result = std::max(result, s.grid.c(k));
    }
    return result;
}

double equivalent_min_rate(const ValueSurface& s, double x, double c, double eps_fb) {
    const double xe = std::max(x, s.grid.dx());
    const double reference = surface_interpolate(s, xe, c);
    double result = c;
    for (int k = level_at_or_below(s.grid, c); k <= s.grid.nc; ++k) {
        if (std::abs(row_value(s, k, xe) - reference) > eps_fb) break;
        result = std::min(result, s.grid.c(k));
    }
    return result;
}

GuardedSolution solve_with_guard(const Model& m, SolverGrid grid, const SolverOptions& options,
                                 std::optional<double> eps_fb, int max_doublings) {
    const double eps = eps_fb.value_or(default_eps_fb(m));
    for (int doublings = 0;; ++doublings) {
        ValueSurface surface = solve_system(m, grid, options);
        bool too_close = false;
        try {
            FreeBoundaries fb = extract_boundaries(surface, m, eps);
            const double widest = *std::max_element(fb.X.begin(), fb.X.end());
            too_close = widest > 0.9 * grid.x_max;
            if (!too_close) return {std::move(surface), std::move(fb), doublings};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotFound || doublings >= max_doublings) throw;
            if (surface.closed_form) throw;
        }
        if (doublings >= max_doublings) {
            throw Error(ErrorKind::NotFound, "switching boundary stays within 10% of x_max after " +
                                                 std::to_string(max_doublings) + " doublings");
        }
        grid.x_max *= 2.0;
        grid.nx *= 2;
    }
}

}  // namespace drawdown
