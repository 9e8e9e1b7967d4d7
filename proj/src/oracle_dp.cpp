#include "drawdown/oracle_dp.hpp"

#include "drawdown/errors.hpp"
#include "drawdown/vi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace drawdown {

DPInstance make_dp_instance(const DPModel& model, std::vector<double> x, std::vector<double> m,
                            double dt, int actions) {
    if (x.size() < 2 || m.empty() || !(dt > 0.0) || actions < 1) {
        throw Error(ErrorKind::Config, "DP instance needs two x nodes, one level, dt > 0");
    }
    const double dx = x[1] - x[0];
    DPInstance inst{model, std::move(x), std::move(m), dt, {}};
    for (double level : inst.m) {
        std::vector<DPAction> set;
        for (int k = 0; k <= actions; ++k) {
            const double a = model.b * level + (1.0 - model.b) * level * k / actions;
            const double drift = (model.mu - a) * dt;
            const double spread = (model.sigma * model.sigma * dt + drift * drift) / (dx * dx);
            const DPAction act{a, 0.5 * (spread + drift / dx), 1.0 - spread,
                               0.5 * (spread - drift / dx)};
            for (double p : {act.up, act.stay, act.down}) {
                if (p < 0.0 || p > 1.0) {
                    std::ostringstream why;
                    why << "trinomial probability " << p << " outside [0, 1] for rate " << a
                        << "; need dt <= dx^2 / (sigma^2 + |mu - a| dx)";
                    throw Error(ErrorKind::Config, why.str());
                }
            }
            set.push_back(act);
        }
        inst.actions.push_back(std::move(set));
    }
    return inst;
}

DPInstance make_dp_instance(const DPModel& model, const DPSpec& spec) {
    if (!(spec.dx > 0.0) || !(spec.x_max > spec.dx) || spec.m_levels < 2) {
        throw Error(ErrorKind::Config, "DP grid needs dx > 0, x_max > dx and two m-levels");
    }
    const auto nx = static_cast<int>(std::lround(spec.x_max / spec.dx));
    std::vector<double> x(static_cast<std::size_t>(nx + 1));
    for (int i = 0; i <= nx; ++i) x[static_cast<std::size_t>(i)] = i * spec.dx;
    std::vector<double> m(static_cast<std::size_t>(spec.m_levels));
    for (int k = 0; k < spec.m_levels; ++k) {
        m[static_cast<std::size_t>(k)] =
            k + 1 == spec.m_levels ? model.cbar : model.cbar * k / (spec.m_levels - 1);
    }
    return make_dp_instance(model, std::move(x), std::move(m), spec.dt, spec.actions);
}

namespace {

// Writes B v into out and returns sup |out - v|.
double sweep(const DPInstance& inst, const Matrix<double>& v, Matrix<double>& out) {
    const std::size_t levels = inst.m.size();
    const std::size_t nx = inst.x.size();
    const double beta = std::exp(-inst.model.r * inst.dt);
    double update = 0.0;
    for (std::size_t j = levels; j-- > 0;) {
        const auto row = v.row(j);
        const auto& set = inst.actions[j];
        out(j, 0) = 0.0;
        for (std::size_t i = 1; i < nx; ++i) {
            const double up = row[i + 1 < nx ? i + 1 : i];
            double best = -1e300;
            for (const auto& act : set) {
                const double q = act.rate * inst.dt +
                                 beta * (act.up * up + act.stay * row[i] + act.down * row[i - 1]);
                best = std::max(best, q);
            }
            if (j + 1 < levels) best = std::max(best, out(j + 1, i));
            out(j, i) = best;
            update = std::max(update, std::abs(best - row[i]));
        }
    }
    return update;
}

}  // namespace

Matrix<double> bellman_apply(const DPInstance& inst, const Matrix<double>& v) {
    Matrix<double> out(v.rows(), v.cols());
    sweep(inst, v, out);
    return out;
}

DPTable value_iteration(const DPInstance& inst, double tol, long max_sweeps) {
    Matrix<double> v(inst.m.size(), inst.x.size(), 0.0);
    Matrix<double> next(inst.m.size(), inst.x.size(), 0.0);
    DPTable table{inst.x, inst.m, {}, 0, 0.0, 0.0};
    for (long s = 1; s <= max_sweeps; ++s) {
        table.last_update = sweep(inst, v, next);
        std::swap(v, next);
        table.sweeps = s;
        if (table.last_update <= tol) {
            table.residual = sweep(inst, v, next);
            table.value = std::move(v);
            return table;
        }
    }
    std::ostringstream why;
    why << "value iteration did not converge in " << max_sweeps << " sweeps (last update "
        << table.last_update << ")";
    throw NonConvergence(static_cast<int>(std::min<long>(max_sweeps, 2147483647L)),
                         table.last_update, why.str());
}

GapReport compare_surfaces(const DPTable& dp, const ValueSurface& surface, double x_lo,
                           double x_hi, double tolerance) {
    GapReport report;
    report.residual = dp.residual;
    report.x_lo = x_lo;
    report.x_hi = x_hi;
    double sum = 0.0;
    for (std::size_t j = 0; j < dp.m.size(); ++j) {
        for (std::size_t i = 0; i < dp.x.size(); ++i) {
            const double x = dp.x[i];
            if (x < x_lo || x > x_hi || x > surface.grid.x_max) continue;
            const double c = std::min(dp.m[j], surface.grid.cbar);
            const double pde = surface_interpolate(surface, x, c);
            const double value = dp.value(j, i);
            const double gap = std::abs(value - pde) / std::max(std::abs(pde), 1e-300);
            ++report.nodes;
            sum += gap;
            if (gap > tolerance) ++report.nodes_over;
            if (gap > report.max_rel_gap || report.nodes == 1) {
                report.max_rel_gap = gap;
                report.worst = {x, dp.m[j], value, pde};
            }
        }
    }
    if (report.nodes > 0) report.mean_rel_gap = sum / report.nodes;
    return report;
}

}  // namespace drawdown
