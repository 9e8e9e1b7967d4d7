#include "drawdown/run.hpp"

#include "drawdown/errors.hpp"
#include "drawdown/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#ifndef DRAWDOWN_VERSION
#define DRAWDOWN_VERSION "unknown"
#endif

namespace drawdown {

namespace fs = std::filesystem;

const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::Solve: return "solve";
        case Experiment::Boundaries: return "boundaries";
        case Experiment::Simulate: return "simulate";
        case Experiment::Verify: return "verify";
        case Experiment::Figures: return "figures";
    }
    return "unknown";
}

namespace {

struct KeyInfo {
    const char* key;
    const char* help;
};

constexpr KeyInfo kKeys[] = {
    {"mu", "drift of the surplus"},
    {"sigma", "volatility of the surplus"},
    {"r", "discount rate"},
    {"cbar", "maximum payout rate"},
    {"b", "drawdown proportion in [0, 1]"},
    {"nx", "spatial intervals (default 4000)"},
    {"nc", "payout levels below cbar (default 300)"},
    {"xmax", "truncation point (default max(3 y0, 2 x_infty, 20 sigma^2/mu))"},
    {"tol", "solver fixed-point tolerance (default 1e-10 cbar/r)"},
    {"x0", "initial surplus (default 1)"},
    {"c0", "initial running maximum of the payout (default cbar)"},
    {"dt", "smallest simulation step (default 1e-3)"},
    {"horizon", "simulation horizon (default 100/r)"},
    {"paths", "Monte Carlo paths (default 10000)"},
    {"seed", "master seed (default 1)"},
    {"strategy",
     "optimal | constant:<a> | ratchet_greedy | unconstrained_barrier | boundary"},
    {"out", "output directory (default out)"},
    {"trace", "write t,X,M,C for the first k paths"},
    {"surface_stride", "write every k-th node of the surface"},
    {"antithetic", "antithetic path pairs (true/false)"},
    {"bridge", "Brownian-bridge ruin detection (default true)"},
    {"threads", "simulation threads (default: all cores)"},
    {"dp_dx", "oracle surplus spacing (default 0.05)"},
    {"dp_dt", "oracle time step (default 1e-3)"},
    {"dp_xmax", "oracle surplus cap (default 10)"},
    {"dp_levels", "oracle running-max levels (default 30)"},
    {"dp_actions", "oracle actions per level (default 8)"},
    {"dp_tol", "oracle value-iteration tolerance (default 1e-8)"},
    {"dp_refine", "also run the oracle with dx and dt halved (true/false)"},
};

std::string normalize_key(std::string key) {
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "x_max") return "xmax";
    if (key == "n_paths") return "paths";
    return key;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const char* what) {
    throw Error(ErrorKind::Config, "--" + key + ": '" + text + "' is not " + what);
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        bad_value(key, text, "a finite decimal number");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end) bad_value(key, text, "an integer");
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const long long v = parse_integer(key, text);
    if (v < -2147483647LL || v > 2147483647LL) bad_value(key, text, "a 32-bit integer");
    return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end) {
        bad_value(key, text, "an unsigned 64-bit integer");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    bad_value(key, text, "true or false");
}

void gate(Json& gates, const char* name, bool pass, bool& ok) {
    gates[name] = pass;
    ok = ok && pass;
}

Json config_echo(const RunConfig& cfg) {
    Json j;
    j["experiment"] = to_string(cfg.experiment);
    j["mu"] = cfg.mu;
    j["sigma"] = cfg.sigma;
    j["r"] = cfg.r;
    j["cbar"] = cfg.cbar;
    j["b"] = cfg.b ? Json(*cfg.b) : Json(nullptr);
    j["nx"] = cfg.nx;
    j["nc"] = cfg.nc;
    j["xmax"] = cfg.x_max ? Json(*cfg.x_max) : Json(nullptr);
    j["tol"] = cfg.tol ? Json(*cfg.tol) : Json(nullptr);
    j["x0"] = cfg.sim.x0;
    j["c0"] = cfg.c0_given ? Json(cfg.sim.c0) : Json(nullptr);
    j["dt"] = cfg.sim.dt;
    j["horizon"] = cfg.sim.horizon > 0.0 ? cfg.sim.horizon : 100.0 / cfg.r;
    j["paths"] = cfg.sim.n_paths;
    j["seed"] = cfg.sim.seed;
    j["strategy"] = cfg.strategy;
    j["bridge"] = cfg.sim.bridge;
    j["antithetic"] = cfg.sim.antithetic;
    j["trace"] = cfg.sim.trace_paths;
    j["dp_dx"] = cfg.dp.spec.dx;
    j["dp_dt"] = cfg.dp.spec.dt;
    j["dp_xmax"] = cfg.dp.spec.x_max;
    j["dp_levels"] = cfg.dp.spec.m_levels;
    j["dp_actions"] = cfg.dp.spec.actions;
    j["dp_tol"] = cfg.dp.tol;
    j["dp_refine"] = cfg.dp.refine;
    j["out"] = cfg.out.generic_string();
    j["surface_stride"] = cfg.surface_stride ? Json(*cfg.surface_stride) : Json(nullptr);
    return j;
}

struct Solved {
    Model model;
    SolverOptions options;
    GuardedSolution solution;
    Json diagnostics;
    Json gates;
    bool ok = true;
};

Json surface_checks(const ValueSurface& s, const SolverOptions& options, const Model& m,
                    Json& gates, bool& ok) {
    const double scale = m.params.cbar() / m.params.r();
    double v_min = 0.0, v_max = 0.0, vx_min = 0.0, raise_gain = 0.0;
    for (std::size_t i = 0; i < s.v.rows(); ++i) {
        for (std::size_t j = 0; j < s.v.cols(); ++j) {
            v_min = std::min(v_min, s.v(i, j));
            v_max = std::max(v_max, s.v(i, j));
            vx_min = std::min(vx_min, s.vx(i, j));
            if (i > 0) raise_gain = std::max(raise_gain, s.v(i - 1, j) - s.v(i, j));
        }
    }
    int max_iterations = 0;
    long total_iterations = 0;
    double residual_inactive = 0.0, residual_active = 0.0;
    for (std::size_t i = 1; i < s.stats.size(); ++i) {
        const auto& st = s.stats[i];
        max_iterations = std::max(max_iterations, st.iterations);
        total_iterations += st.iterations;
        residual_inactive = std::max(residual_inactive, st.residual_inactive);
        if (st.active_nodes > 0) residual_active = std::min(residual_active, st.residual_active);
    }
    constexpr double tol_residual = 1e-6;
    gate(gates, "value_bounds", v_min >= -1e-10 && v_max <= scale + 1e-10, ok);
    gate(gates, "monotone_in_c", raise_gain <= options.tol_obstacle, ok);
    gate(gates, "vx_nonnegative", vx_min >= -1e-8, ok);
    gate(gates, "complementarity",
         residual_inactive <= tol_residual && residual_active >= -tol_residual, ok);
    return {{"closed_form", s.closed_form},
            {"x_max", s.grid.x_max},
            {"nx", s.grid.nx},
            {"nc", s.grid.nc},
            {"dx", s.grid.dx()},
            {"dc", s.grid.dc()},
            {"rho", std::isinf(options.rho) ? Json("inf") : Json(options.rho)},
            {"tol_fix", options.tol_fix},
            {"tol_obstacle", options.tol_obstacle},
            {"tol_residual", tol_residual},
            {"max_iterations", max_iterations},
            {"total_iterations", total_iterations},
            {"residual_inactive_max", residual_inactive},
            {"residual_active_min", residual_active},
            {"v_min", v_min},
            {"v_max", v_max},
            {"vx_min", vx_min},
            {"monotonicity_violation", raise_gain},
            {"lipschitz_c", s.lipschitz_c()}};
}

Json boundary_checks(const FreeBoundaries& fb, const ValueSurface& s, const Model& m,
                     Json& gates, bool& ok) {
    double vx_at_x_max = 0.0, min_y = 0.0, min_gap = 0.0, max_x = 0.0;
    for (std::size_t i = 0; i < fb.c.size(); ++i) {
        vx_at_x_max = i == 0 ? fb.vx_at_X[i] : std::max(vx_at_x_max, fb.vx_at_X[i]);
        min_y = i == 0 ? fb.Y[i] : std::min(min_y, fb.Y[i]);
        min_gap = i == 0 ? fb.X[i] - fb.Y[i] : std::min(min_gap, fb.X[i] - fb.Y[i]);
        max_x = std::max(max_x, fb.X[i]);
    }
    Json j{{"eps_fb", fb.eps_fb},
           {"X_max", max_x},
           {"Y_min", min_y},
           {"X_minus_Y_min", min_gap},
           {"vx_at_X_max", vx_at_x_max},
           {"X_monotonicity_violations", fb.x_monotonicity_violations}};
    if (m.constants.regime == Regime::Complicated) {
        const double y_gap = std::abs(fb.Y.front() - *m.constants.y0);
        j["y0"] = *m.constants.y0;
        j["Y_at_cbar_minus_y0"] = y_gap;
        gate(gates, "ordering_0_lt_Y_lt_X", min_y > 0.0 && min_gap > 0.0, ok);
        gate(gates, "Y_at_cbar", y_gap <= 2.0 * s.grid.dx(), ok);
        gate(gates, "vx_at_X_below_1", vx_at_x_max <= 1.0 + 1e-6, ok);
    }
    return j;
}

Solved solve_phase(const RunConfig& cfg, double b, double min_x_max = 0.0) {
    const Model model = make_model(ModelParams(cfg.mu, cfg.sigma, cfg.r, cfg.cbar, b));
    const double base = cfg.x_max.value_or(default_x_max(model));
    const double x_max = std::max(base, min_x_max);
    const int nx = static_cast<int>(std::lround(cfg.nx * x_max / base));
    const SolverGrid grid = make_grid(model, x_max, nx, cfg.nc);
    SolverOptions options = SolverOptions::defaults_for(model);
    if (cfg.tol) options.tol_fix = *cfg.tol;

    Solved out{model, options, solve_with_guard(model, grid, options), {}, {}, true};
    const auto residuals = constant_residuals(model);
    gate(out.gates, "constant_residuals", residuals.max() <= 1e-12, out.ok);
    out.diagnostics["regime"] = to_string(model.constants.regime);
    out.diagnostics["constants"] = to_json(model.constants);
    out.diagnostics["constant_residuals"] = to_json(residuals);
    out.diagnostics["truncation_doublings"] = out.solution.doublings;
    out.diagnostics["solver"] =
        surface_checks(out.solution.surface, options, model, out.gates, out.ok);
    out.diagnostics["boundaries"] =
        boundary_checks(out.solution.boundaries, out.solution.surface, model, out.gates, out.ok);
    return out;
}

Json simulate_phase(const RunConfig& cfg, const Model& model, const Solved* solved,
                    const fs::path& dir) {
    SimConfig sim = cfg.sim;
    if (!cfg.c0_given) sim.c0 = cfg.cbar;
    const StrategySpec spec = parse_strategy(cfg.strategy);
    SimResult result;
    Json j;
    j["strategy"] = to_string(spec);
    if (spec.kind == StrategyKind::Optimal) {
        result = simulate_optimal(model, solved->solution.boundaries, solved->solution.surface, sim);
    } else {
        result = simulate_comparison(model, spec, sim);
    }
    j["x0"] = sim.x0;
    j["c0"] = sim.c0;
    j["dt"] = sim.dt;
    j["horizon"] = sim.horizon > 0.0 ? sim.horizon : 100.0 / cfg.r;
    j["paths"] = result.outcome.n_paths;
    j["seed"] = sim.seed;
    j["bridge"] = sim.bridge;
    j["antithetic"] = sim.antithetic;
    const Json outcome = to_json(result.outcome);
    for (const auto& [k, v] : outcome.items()) j[k] = v;
    if (solved && sim.x0 <= solved->solution.surface.grid.x_max) {
        j["value_at_start"] = surface_interpolate(solved->solution.surface, sim.x0, sim.c0);
    }
    if (sim.trace_paths > 0) write_trace_csv(dir / "trace.csv", result.trace);
    return j;
}

std::string b_label(double b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "b%g", b);
    return buf;
}

void announce(const Solved& s, std::ostream& out) {
    out << "regime: " << to_string(s.model.constants.regime) << '\n';
    if (s.solution.surface.closed_form) out << "Simple regime: closed form\n";
}

int finish(const fs::path& dir, Json meta, bool ok, std::ostream& err) {
    meta["passed"] = ok;
    write_json(dir / "meta.json", meta);
    if (!ok) {
        Json failed = Json::array();
        for (const auto& [name, pass] : meta["gates"].items()) {
            if (!pass.get<bool>()) failed.push_back(name);
        }
        const Json error{{"error", "GateFailure"}, {"failed", failed}};
        write_json(dir / "error.json", error);
        err << error.dump() << '\n';
        return 1;
    }
    return 0;
}

int run_single(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (!cfg.b) throw Error(ErrorKind::Config, "missing required option --b");
    Json meta{{"tool", "drawdown"},
              {"versions", {{"drawdown", DRAWDOWN_VERSION}, {"compiler", __VERSION__}}},
              {"config", config_echo(cfg)}};
    const double min_x_max = cfg.experiment == Experiment::Verify ? 1.2 * cfg.dp.spec.x_max : 0.0;
    const bool needs_solve = cfg.experiment != Experiment::Simulate ||
                             parse_strategy(cfg.strategy).kind == StrategyKind::Optimal;

    std::optional<Solved> solved;
    bool ok = true;
    Json gates;
    if (needs_solve) {
        solved = solve_phase(cfg, *cfg.b, min_x_max);
        announce(*solved, out);
        for (const auto& [k, v] : solved->diagnostics.items()) meta[k] = v;
        gates = solved->gates;
        ok = solved->ok;
    } else {
        const Model model = make_model(ModelParams(cfg.mu, cfg.sigma, cfg.r, cfg.cbar, *cfg.b));
        const auto residuals = constant_residuals(model);
        meta["regime"] = to_string(model.constants.regime);
        meta["constants"] = to_json(model.constants);
        meta["constant_residuals"] = to_json(residuals);
        gate(gates, "constant_residuals", residuals.max() <= 1e-12, ok);
    }

    switch (cfg.experiment) {
        case Experiment::Solve:
            write_surface_csv(cfg.out / "surface.csv", solved->solution.surface,
                              cfg.surface_stride.value_or(1));
            write_boundaries_csv(cfg.out / "boundaries.csv", solved->solution.boundaries);
            break;
        case Experiment::Boundaries:
            write_boundaries_csv(cfg.out / "boundaries.csv", solved->solution.boundaries);
            break;
        case Experiment::Simulate: {
            const Model model = make_model(ModelParams(cfg.mu, cfg.sigma, cfg.r, cfg.cbar, *cfg.b));
            const Json sim = simulate_phase(cfg, model, solved ? &*solved : nullptr, cfg.out);
            write_json(cfg.out / "sim.json", sim);
            out << "estimate: " << format_double(sim["estimate"].get<double>())
                << " stderr: " << format_double(sim["stderr"].get<double>()) << '\n';
            break;
        }
        case Experiment::Verify: {
            const DPModel dp_model{cfg.mu, cfg.sigma, cfg.r, cfg.cbar, *cfg.b};
            const auto& surface = solved->solution.surface;
            const double x_lo = 10.0 * cfg.dp.spec.dx;
            const double x_hi = 0.8 * cfg.dp.spec.x_max;
            const DPTable table =
                value_iteration(make_dp_instance(dp_model, cfg.dp.spec), cfg.dp.tol);
            const GapReport report = compare_surfaces(table, surface, x_lo, x_hi);
            Json verify = to_json(report);
            verify["sweeps"] = table.sweeps;
            verify["tolerance"] = 0.05;
            verify["dp"] = {{"dx", cfg.dp.spec.dx},
                            {"dt", cfg.dp.spec.dt},
                            {"x_max", cfg.dp.spec.x_max},
                            {"m_levels", cfg.dp.spec.m_levels},
                            {"actions", cfg.dp.spec.actions},
                            {"tol", cfg.dp.tol}};
            gate(gates, "oracle_gap", report.max_rel_gap <= 0.05, ok);
            if (cfg.dp.refine) {
                DPSpec fine = cfg.dp.spec;
                fine.dx *= 0.5;
                fine.dt *= 0.5;
                const DPTable refined =
                    value_iteration(make_dp_instance(dp_model, fine), cfg.dp.tol);
                const GapReport finer = compare_surfaces(refined, surface, x_lo, x_hi);
                verify["refined"] = to_json(finer);
                verify["refined"]["sweeps"] = refined.sweeps;
                const bool decreasing = finer.max_rel_gap < report.max_rel_gap;
                verify["decreasing"] = decreasing;
                gate(gates, "oracle_gap_decreasing", decreasing, ok);
            }
            write_json(cfg.out / "verify.json", verify);
            out << "max relative gap: " << format_double(report.max_rel_gap) << '\n';
            break;
        }
        case Experiment::Figures:
            break;
    }
    meta["gates"] = gates;
    return finish(cfg.out, std::move(meta), ok, err);
}

int run_figures(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Json meta{{"tool", "drawdown"},
              {"versions", {{"drawdown", DRAWDOWN_VERSION}, {"compiler", __VERSION__}}},
              {"config", config_echo(cfg)}};
    meta["config"]["figure_b"] = cfg.figure_b;
    bool ok = true;
    Json gates;
    Json runs = Json::array();
    std::vector<Solved> solved;
    for (double b : cfg.figure_b) {
        const fs::path dir = cfg.out / b_label(b);
        fs::create_directories(dir);
        Solved s = solve_phase(cfg, b);
        write_surface_csv(dir / "surface.csv", s.solution.surface, cfg.surface_stride.value_or(20));
        write_boundaries_csv(dir / "boundaries.csv", s.solution.boundaries);
        const Json sim = simulate_phase(cfg, s.model, &s, dir);
        write_json(dir / "sim.json", sim);
        Json entry{{"b", b}, {"dir", b_label(b)}};
        for (const auto& [k, v] : s.diagnostics.items()) entry[k] = v;
        entry["gates"] = s.gates;
        entry["sim"] = sim;
        runs.push_back(entry);
        for (const auto& [name, pass] : s.gates.items()) {
            gate(gates, (b_label(b) + "_" + name).c_str(), pass.get<bool>(), ok);
        }
        out << b_label(b) << ": regime " << to_string(s.model.constants.regime) << '\n';
        solved.push_back(std::move(s));
    }
    meta["runs"] = runs;

    // Overlay of all boundary curves; levels coincide because nc is shared.
    std::ofstream csv(cfg.out / "comparison.csv", std::ios::binary);
    if (!csv) throw Error(ErrorKind::Config, "cannot write comparison.csv");
    csv << 'c';
    for (double b : cfg.figure_b) csv << ",X_" << b_label(b) << ",Y_" << b_label(b);
    csv << '\n';
    int x_violations = 0;
    bool y_monotone = true;
    double slack = 0.0;
    for (const auto& s : solved) slack = std::max(slack, s.solution.surface.grid.dx());
    for (std::size_t i = 0; i <= static_cast<std::size_t>(cfg.nc); ++i) {
        csv << format_double(solved.front().solution.boundaries.c[i]);
        for (std::size_t k = 0; k < solved.size(); ++k) {
            const auto& fb = solved[k].solution.boundaries;
            csv << ',' << format_double(fb.X[i]) << ',' << format_double(fb.Y[i]);
            if (k > 0) {
                const auto& prev = solved[k - 1].solution.boundaries;
                if (fb.X[i] < prev.X[i] - slack) ++x_violations;
                if (fb.Y[i] < prev.Y[i]) y_monotone = false;
            }
        }
        csv << '\n';
    }
    meta["figure_checks"] = {{"X_nondecreasing_in_b_violations", x_violations},
                             {"slack", slack},
                             {"Y_monotone_in_b", y_monotone}};
    meta["gates"] = gates;
    return finish(cfg.out, std::move(meta), ok, err);
}

void emit_error(const RunConfig& cfg, const Error& e, std::ostream& err) {
    const Json error{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
    err << error.dump() << '\n';
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (!ec) {
        try {
            write_json(cfg.out / "error.json", error);
        } catch (const Error&) {
        }
    }
}

}  // namespace

RunConfig make_run_config(Experiment experiment, const std::map<std::string, std::string>& values) {
    RunConfig cfg;
    cfg.experiment = experiment;
    std::set<std::string> known;
    for (const auto& k : kKeys) known.insert(k.key);

    std::map<std::string, std::string> v;
    for (const auto& [raw, text] : values) {
        const std::string key = normalize_key(raw);
        if (key == "experiment") continue;  // the subcommand decides
        if (!known.count(key)) throw Error(ErrorKind::Config, "unknown option '" + raw + "'");
        v[key] = text;
    }
    auto has = [&](const char* k) { return v.count(k) > 0; };
    auto num = [&](const char* k) { return parse_double(k, v.at(k)); };

    for (const char* k : {"mu", "sigma", "r", "cbar"}) {
        if (!has(k)) throw Error(ErrorKind::Config, std::string("missing required option --") + k);
    }
    cfg.mu = num("mu");
    cfg.sigma = num("sigma");
    cfg.r = num("r");
    cfg.cbar = num("cbar");
    if (has("b")) cfg.b = num("b");
    if (experiment != Experiment::Figures && !cfg.b) {
        throw Error(ErrorKind::Config, "missing required option --b");
    }
    if (has("nx")) cfg.nx = parse_int("nx", v["nx"]);
    if (has("nc")) cfg.nc = parse_int("nc", v["nc"]);
    if (has("xmax")) cfg.x_max = num("xmax");
    if (has("tol")) {
        cfg.tol = num("tol");
        if (!(*cfg.tol > 0.0)) bad_value("tol", v["tol"], "positive");
    }
    if (has("x0")) cfg.sim.x0 = num("x0");
    if (has("c0")) {
        cfg.sim.c0 = num("c0");
        cfg.c0_given = true;
    }
    if (has("dt")) cfg.sim.dt = num("dt");
    if (has("horizon")) cfg.sim.horizon = num("horizon");
    if (has("paths")) cfg.sim.n_paths = static_cast<long>(parse_integer("paths", v["paths"]));
    if (has("seed")) cfg.sim.seed = parse_seed("seed", v["seed"]);
    if (has("strategy")) {
        cfg.strategy = v["strategy"];
        parse_strategy(cfg.strategy);
    }
    if (has("out")) cfg.out = v["out"];
    if (has("trace")) cfg.sim.trace_paths = parse_int("trace", v["trace"]);
    if (has("surface_stride")) {
        cfg.surface_stride = parse_int("surface_stride", v["surface_stride"]);
        if (*cfg.surface_stride < 1) bad_value("surface_stride", v["surface_stride"], "positive");
    }
    if (has("antithetic")) cfg.sim.antithetic = parse_bool("antithetic", v["antithetic"]);
    if (has("bridge")) cfg.sim.bridge = parse_bool("bridge", v["bridge"]);
    if (has("threads")) {
        const int t = parse_int("threads", v["threads"]);
        if (t < 0) bad_value("threads", v["threads"], "nonnegative");
        cfg.sim.threads = static_cast<unsigned>(t);
    }
    if (has("dp_dx")) cfg.dp.spec.dx = num("dp_dx");
    if (has("dp_dt")) cfg.dp.spec.dt = num("dp_dt");
    if (has("dp_xmax")) cfg.dp.spec.x_max = num("dp_xmax");
    if (has("dp_levels")) cfg.dp.spec.m_levels = parse_int("dp_levels", v["dp_levels"]);
    if (has("dp_actions")) cfg.dp.spec.actions = parse_int("dp_actions", v["dp_actions"]);
    if (has("dp_tol")) cfg.dp.tol = num("dp_tol");
    if (has("dp_refine")) cfg.dp.refine = parse_bool("dp_refine", v["dp_refine"]);
    return cfg;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        std::error_code ec;
        fs::create_directories(cfg.out, ec);
        if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + cfg.out.string());
        if (cfg.experiment == Experiment::Figures) return run_figures(cfg, out, err);
        return run_single(cfg, out, err);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) {
            err << "error: " << e.what() << '\n';
            return 2;
        }
        emit_error(cfg, e, err);
        return 1;
    }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal dividend payout under a drawdown constraint", "drawdown"};
    app.set_version_flag("--version", DRAWDOWN_VERSION);
    app.require_subcommand(1);

    std::map<std::string, std::string> flags;
    std::vector<std::pair<std::string, CLI::Option*>> options;
    std::string config_path;
    auto* config_opt = app.add_option("--config", config_path,
                                      "key=value or JSON file; flags override it");
    (void)config_opt;
    for (const auto& k : kKeys) {
        std::string name = "--" + std::string(k.key);
        std::replace(name.begin(), name.end(), '_', '-');
        options.emplace_back(k.key, app.add_option(name, flags[k.key], k.help));
    }
    const std::pair<Experiment, const char*> commands[] = {
        {Experiment::Solve, "value surface and boundaries"},
        {Experiment::Boundaries, "boundary curves only"},
        {Experiment::Simulate, "Monte Carlo estimate of a strategy"},
        {Experiment::Verify, "compare against the dynamic-programming oracle"},
        {Experiment::Figures, "boundary curves for b in {0.4, 0.6, 0.8, 1.0}"},
    };
    std::vector<std::pair<Experiment, CLI::App*>> subs;
    for (const auto& [e, help] : commands) {
        auto* sub = app.add_subcommand(to_string(e), help);
        sub->fallthrough();
        subs.emplace_back(e, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << DRAWDOWN_VERSION << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    Experiment experiment = Experiment::Solve;
    for (const auto& [e, sub] : subs) {
        if (sub->parsed()) experiment = e;
    }

    RunConfig cfg;
    try {
        std::map<std::string, std::string> values;
        if (!config_path.empty()) values = read_config_file(config_path);
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) values[key] = flags[key];
        }
        cfg = make_run_config(experiment, values);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    const int code = run(cfg, out, err);
    if (code == 2) err << '\n' << app.help();
    return code;
}

}  // namespace drawdown
