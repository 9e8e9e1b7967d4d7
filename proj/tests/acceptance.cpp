// Acceptance checks: one PASS/FAIL line per criterion.

#include "drawdown/boundaries.hpp"
#include "drawdown/errors.hpp"
#include "drawdown/oracle_dp.hpp"
#include "drawdown/run.hpp"
#include "drawdown/strategy_sim.hpp"
#include "drawdown/vi_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace drawdown;
namespace fs = std::filesystem;

namespace {

constexpr double kBs[] = {0.4, 0.6, 0.8, 1.0};

Model reference(double b) { return make_model(ModelParams(0.3, 0.3, 0.05, 0.3, b)); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const GuardedSolution& reference_solution(double b, int nc = 300) {
    static std::map<std::pair<double, int>, GuardedSolution> cache;
    const auto key = std::make_pair(b, nc);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const Model m = reference(b);
        it = cache
                 .emplace(key, solve_with_guard(m, make_grid(m, std::nullopt, 4000, nc),
                                                SolverOptions::defaults_for(m)))
                 .first;
    }
    return it->second;
}

Verdict closed_form_residual() {
    double worst_res = 0.0, worst_g0 = 0.0, worst_slope = 0.0, worst_jump = 0.0;
    std::mt19937_64 rng(101);
    for (double b : kBs) {
        const Model m = reference(b);
        const double y0 = *m.constants.y0;
        std::uniform_real_distribution<double> pick(0.0, 10.0 * y0);
        for (int k = 0; k < 10000; ++k) {
            worst_res = std::max(worst_res, std::abs(boundary_residual(m, pick(rng))));
        }
        worst_g0 = std::max(worst_g0, std::abs(boundary_value_g(m, 0.0)));
        worst_slope = std::max(worst_slope, std::abs(boundary_jet(m, y0).dx - 1.0));
        const Jet lo = boundary_jet(m, std::nextafter(y0, 0.0));
        const Jet hi = boundary_jet(m, std::nextafter(y0, 2.0 * y0));
        worst_jump = std::max({worst_jump, std::abs(lo.value - hi.value), std::abs(lo.dx - hi.dx)});
    }
    return {worst_res <= 1e-8 && worst_g0 <= 1e-12 && worst_slope <= 1e-9 && worst_jump <= 1e-9,
            fmt("max residual %.2e, |g(0)| %.1e, |g'(y0)-1| %.1e, jump at y0 %.1e", worst_res,
                worst_g0, worst_slope, worst_jump)};
}

Verdict regime_equivalence() {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int disagreements = 0;
    int simple = 0;
    for (int k = 0; k < 100000; ++k) {
        const double mu = 0.01 + 2.0 * u(rng);
        const ModelParams p(mu, 0.01 + 2.0 * u(rng), 0.001 + 0.3 * u(rng), mu * (0.001 + 0.999 * u(rng)),
                            u(rng));
        const Regime a = classify_regime(p);
        if (a != classify_regime_by_gamma(p)) ++disagreements;
        if (a == Regime::Simple) ++simple;
    }
    return {disagreements == 0,
            fmt("%d disagreements in 100000 draws (%d Simple)", disagreements, simple)};
}

Verdict simple_regime_recursion() {
    const Model m = make_model(ModelParams(0.1, 0.8, 0.08, 0.1, 0.5));
    auto options = SolverOptions::defaults_for(m);
    options.force_recursion = true;
    const SolverGrid grid = make_grid(m, 20.0, 2000, 100);
    const ValueSurface s = solve_system(m, grid, options);
    const double level = m.params.cbar() / m.params.r();
    double worst = 0.0;
    for (int i = 0; i <= grid.nc; ++i) {
        for (int j = 0; j <= grid.nx; ++j) {
            const double exact = level * -std::expm1(-m.constants.gamma * grid.x(j));
            worst = std::max(worst, std::abs(s.v(static_cast<std::size_t>(i),
                                                 static_cast<std::size_t>(j)) - exact));
        }
    }
    return {worst <= 5e-4, fmt("sup error %.2e over %d levels", worst, grid.nc + 1)};
}

Verdict boundary_row_order() {
    std::string detail;
    bool ok = true;
    double min_order = 1e9;
    for (double b : kBs) {
        const Model m = reference(b);
        auto options = SolverOptions::defaults_for(m);
        std::vector<double> dxs, errs;
        for (int nx : {1000, 2000, 4000}) {
            const SolverGrid grid = make_grid(m, std::nullopt, nx, 1);
            const std::vector<double> zero(static_cast<std::size_t>(nx) + 1, 0.0);
            const LevelSolution sol = solve_obstacle_level(zero, grid.c(0), grid, m, options,
                                                           boundary_value_g(m, grid.x_max));
            double err = 0.0;
            for (int j = 0; j <= nx; ++j) {
                err = std::max(err, std::abs(sol.v[static_cast<std::size_t>(j)] -
                                             boundary_value_g(m, grid.x(j))));
            }
            dxs.push_back(std::log(grid.dx()));
            errs.push_back(std::log(err));
        }
        const double mx = (dxs[0] + dxs[1] + dxs[2]) / 3.0;
        const double my = (errs[0] + errs[1] + errs[2]) / 3.0;
        double sxy = 0.0, sxx = 0.0;
        for (int k = 0; k < 3; ++k) {
            sxy += (dxs[k] - mx) * (errs[k] - my);
            sxx += (dxs[k] - mx) * (dxs[k] - mx);
        }
        const double order = sxy / sxx;
        min_order = std::min(min_order, order);
        ok = ok && order >= 1.8;
        detail += fmt("b=%g order %.2f (err %.1e); ", b, order, std::exp(errs[2]));
    }
    return {ok, detail + fmt("min %.2f", min_order)};
}

Verdict surface_invariants() {
    bool ok = true;
    std::string detail;
    for (double b : kBs) {
        const Model m = reference(b);
        const auto options = SolverOptions::defaults_for(m);
        const ValueSurface& s = reference_solution(b).surface;
        const double level = m.params.cbar() / m.params.r();
        double v_lo = 0.0, v_hi = 0.0, mono = 0.0, vx_lo = 0.0, vx_excess = -1e300;
        for (int i = 0; i <= s.grid.nc; ++i) {
            const auto row = static_cast<std::size_t>(i);
            double running_min = std::numeric_limits<double>::infinity();
            for (int j = 0; j <= s.grid.nx; ++j) {
                const auto col = static_cast<std::size_t>(j);
                const double v = s.v(row, col);
                v_lo = std::min(v_lo, v);
                v_hi = std::max(v_hi, v - level);
                if (i > 0) mono = std::max(mono, s.v(row - 1, col) - v);
                const double vx = s.vx(row, col);
                vx_lo = std::min(vx_lo, vx);
                running_min = std::min(running_min, vx);
                vx_excess = std::max(vx_excess, vx - std::max(running_min, 1.0));
            }
        }
        const double u300 = s.lipschitz_c();
        const double u600 = reference_solution(b, 600).surface.lipschitz_c();
        const double drift = std::abs(u600 - u300) / u300;
        const bool pass = v_lo >= 0.0 && v_hi <= 1e-10 && mono <= options.tol_obstacle &&
                          vx_lo >= -1e-8 && vx_excess <= 1e-6 && drift <= 0.2;
        ok = ok && pass;
        detail += fmt("b=%g v-excess %.1e mono %.1e vx-min %.1e vx-order %.1e |u| %.3f->%.3f; ", b,
                      v_hi, mono, vx_lo, vx_excess, u300, u600);
    }
    return {ok, detail};
}

Verdict free_boundary_properties() {
    bool ok = true;
    std::string detail;
    for (double b : kBs) {
        const FreeBoundaries& fb = reference_solution(b).boundaries;
        const SolverGrid& g = reference_solution(b).surface.grid;
        const double jump_cap = 10.0 * (g.dx() + g.dc());
        bool ordered = true;
        double vx_max = 0.0, jx = 0.0, jy = 0.0;
        for (std::size_t i = 0; i < fb.c.size(); ++i) {
            ordered = ordered && fb.Y[i] > 0.0 && fb.Y[i] < fb.X[i];
            vx_max = std::max(vx_max, fb.vx_at_X[i]);
            if (i > 0) {
                jx = std::max(jx, std::abs(fb.X[i] - fb.X[i - 1]));
                jy = std::max(jy, std::abs(fb.Y[i] - fb.Y[i - 1]));
            }
        }
        const double y_err = std::abs(fb.Y[0] - *fb.y0_ref);
        const bool pass = ordered && y_err <= 2.0 * g.dx() && vx_max <= 1.0 + 1e-6 &&
                          jx <= jump_cap && jy <= jump_cap;
        ok = ok && pass;
        detail += fmt("b=%g %s |Y-y0| %.1e vx(X) %.4f jumps %.4f/%.4f; ", b,
                      ordered ? "0<Y<X" : "ORDER", y_err, vx_max, jx, jy);
    }
    return {ok, detail};
}

Verdict x_monotone_in_b() {
    int violations = 0;
    bool y_monotone = true;
    for (std::size_t k = 1; k < std::size(kBs); ++k) {
        const FreeBoundaries& lo = reference_solution(kBs[k - 1]).boundaries;
        const FreeBoundaries& hi = reference_solution(kBs[k]).boundaries;
        const double slack = reference_solution(kBs[k]).surface.grid.dx();
        for (std::size_t i = 0; i < lo.c.size(); ++i) {
            if (hi.X[i] < lo.X[i] - slack) ++violations;
            if (hi.Y[i] < lo.Y[i]) y_monotone = false;
        }
    }
    return {violations == 0,
            fmt("X violations %d; Y %s in b", violations,
                y_monotone ? "monotone" : "not monotone (observed, not asserted)")};
}

SimConfig mc_config(double x0, double c0) {
    SimConfig cfg;
    cfg.x0 = x0;
    cfg.c0 = c0;
    cfg.dt = 1e-3;
    cfg.n_paths = 100000;
    cfg.seed = 2024;
    cfg.bridge = true;
    return cfg;
}

Verdict mc_boundary_case() {
    const Model m = reference(0.6);
    const double slack = 2e-3 * m.params.cbar() / m.params.r();
    bool ok = true;
    std::string detail;
    for (double x0 : {1.0, 3.0, 5.0}) {
        const SimOutcome o =
            simulate_comparison(m, parse_strategy("boundary"), mc_config(x0, m.params.cbar())).outcome;
        const double g = boundary_value_g(m, x0);
        const double bound = 3.0 * o.std_error + slack;
        ok = ok && std::abs(o.estimate - g) <= bound;
        detail += fmt("x0=%g est %.5f g %.5f |diff| %.5f <= %.5f; ", x0, o.estimate, g,
                      std::abs(o.estimate - g), bound);
    }
    return {ok, detail};
}

Verdict mc_interior_case() {
    const Model m = reference(0.6);
    const GuardedSolution& sol = reference_solution(0.6);
    const double x0 = 2.0, c0 = 0.1;
    const double v = surface_interpolate(sol.surface, x0, c0);
    const SimOutcome opt =
        simulate_optimal(m, sol.boundaries, sol.surface, mc_config(x0, c0)).outcome;
    const double bound = 3.0 * opt.std_error + 5e-3 * m.params.cbar() / m.params.r();
    bool ok = std::abs(opt.estimate - v) <= bound;
    std::string detail = fmt("v %.5f optimal %.5f (se %.5f, bound %.5f); ", v, opt.estimate,
                             opt.std_error, bound);
    for (const char* name : {"constant:0.06", "constant:0.3", "ratchet_greedy",
                             "unconstrained_barrier", "boundary"}) {
        const SimOutcome o = simulate_comparison(m, parse_strategy(name), mc_config(x0, c0)).outcome;
        const bool below = o.estimate <= v + 3.0 * o.std_error;
        ok = ok && below;
        detail += fmt("%s %.5f%s; ", name, o.estimate, below ? "" : " ABOVE");
    }
    return {ok, detail};
}

GapReport dp_gap(const Model& m, const ValueSurface& s, double dx, double dt) {
    DPSpec spec;
    spec.dx = dx;
    spec.dt = dt;
    spec.x_max = 10.0;
    spec.m_levels = 30;
    const DPModel dm{m.params.mu(), m.params.sigma(), m.params.r(), m.params.cbar(), m.params.b()};
    const DPTable t = value_iteration(make_dp_instance(dm, spec), 1e-8);
    return compare_surfaces(t, s, 10.0 * 0.05, 0.8 * spec.x_max);
}

Verdict oracle_equivalence() {
    const Model m = reference(0.6);
    const ValueSurface s = solve_system(m, make_grid(m, 12.0, 8000, 300), SolverOptions::defaults_for(m));
    const GapReport coarse = dp_gap(m, s, 0.05, 1e-3);
    const GapReport fine = dp_gap(m, s, 0.025, 5e-4);
    return {coarse.max_rel_gap <= 0.05 && fine.max_rel_gap < coarse.max_rel_gap,
            fmt("max relative gap %.2e coarse, %.2e refined, over x in [%g, %g]", coarse.max_rel_gap,
                fine.max_rel_gap, coarse.x_lo, coarse.x_hi)};
}

Verdict monte_carlo() {
    const Verdict a = mc_boundary_case();
    const Verdict b = mc_interior_case();
    return {a.pass && b.pass, "(a) " + a.detail + "(b) " + b.detail};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream text;
        text << in.rdbuf();
        files[fs::relative(entry.path(), dir).string()] = text.str();
    }
    return files;
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / "drawdown_acceptance_figures";
    const std::string out = dir.string();
    const char* argv[] = {"drawdown", "figures", "--mu", "0.3", "--sigma", "0.3", "--r", "0.05",
                          "--cbar", "0.3", "--paths", "2000", "--seed", "9", "--out", out.c_str()};
    std::ostringstream sink;
    std::map<std::string, std::string> runs[2];
    for (auto& run : runs) {
        fs::remove_all(dir);
        const int code = cli_main(static_cast<int>(std::size(argv)), argv, sink, sink);
        if (code != 0) return {false, fmt("figures exited with %d", code)};
        run = snapshot(dir);
    }
    fs::remove_all(dir);
    int differing = 0;
    for (const auto& [name, text] : runs[0]) {
        auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != text) ++differing;
    }
    const bool same = differing == 0 && runs[0].size() == runs[1].size();
    return {same && runs[0].size() >= 13,
            fmt("%zu files, %d differ", runs[0].size(), differing)};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"closed-form residual", closed_form_residual},
        {"regime equivalence", regime_equivalence},
        {"Simple-regime recursion", simple_regime_recursion},
        {"boundary-row convergence order", boundary_row_order},
        {"surface invariants", surface_invariants},
        {"free-boundary properties", free_boundary_properties},
        {"switching boundary monotone in b", x_monotone_in_b},
        {"Monte Carlo consistency", monte_carlo},
        {"dynamic-programming oracle", oracle_equivalence},
        {"determinism", determinism},
    };
    int failures = 0;
    int number = 0;
    for (const auto& [name, check] : criteria) {
        ++number;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!v.pass) ++failures;
        std::printf("%s %2d %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", number, name,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
