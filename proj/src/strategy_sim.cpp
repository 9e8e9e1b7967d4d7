#include "drawdown/strategy_sim.hpp"

#include "drawdown/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace drawdown {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A step of length h reaches a switch at distance d with probability of
// order exp(-kappa^2 / 2) when h <= (d / (kappa sigma))^2.
constexpr double kKappa = 6.0;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Linear interpolation of a per-level curve on the uniform grid c_i = c[0] - i dc.
double at_level(const std::vector<double>& c, const std::vector<double>& f, double m) {
    if (f.size() == 1) return f[0];
    const double dc = c[0] - c[1];
    const double pos = std::clamp((c[0] - m) / dc, 0.0, static_cast<double>(f.size() - 1));
    const auto lo = std::min(static_cast<std::size_t>(pos), f.size() - 2);
    const double t = pos - static_cast<double>(lo);
    return (1.0 - t) * f[lo] + t * f[lo + 1];
}

class OptimalRule final : public PayoutRule {
public:
    OptimalRule(const Model& m, const FreeBoundaries& fb) : fb_(fb), b_(m.params.b()) {
        cbar_ = fb.c.front();
        dc_ = fb.c.size() > 1 ? fb.c[0] - fb.c[1] : cbar_;
    }

    PayoutState start(double x0, double c0) const override {
        PayoutState state{c0};
        observe_max(x0, state);
        return state;
    }

    void observe_max(double high, PayoutState& state) const override {
        while (state.m < cbar_ && high >= at_level(fb_.c, fb_.X, state.m)) {
            state.m = level_above(state.m);
        }
    }

    double rate(double x, const PayoutState& state) const override {
        return step_optimal(x, state.m, fb_, b_);
    }

    double switch_distance(double x, const PayoutState& state) const override {
        double d = kInf;
        if (b_ < 1.0) d = std::abs(x - at_level(fb_.c, fb_.Y, state.m));
        if (state.m < cbar_) d = std::min(d, at_level(fb_.c, fb_.X, state.m) - x);
        return d;
    }

private:
    double level_above(double m) const {
        const double pos = (cbar_ - m) / dc_;
        const double nearest = std::round(pos);
        const double k = std::abs(pos - nearest) <= 1e-9 ? nearest - 1.0 : std::floor(pos);
        return k <= 0.0 ? cbar_ : fb_.c[static_cast<std::size_t>(k)];
    }

    const FreeBoundaries& fb_;
    double b_;
    double cbar_;
    double dc_;
};

class ConstantRule final : public PayoutRule {
public:
    explicit ConstantRule(double a) : a_(a) {}
    PayoutState start(double, double c0) const override { return {std::max(c0, a_)}; }
    void observe_max(double, PayoutState&) const override {}
    double rate(double, const PayoutState&) const override { return a_; }
    double switch_distance(double, const PayoutState&) const override { return kInf; }

private:
    double a_;
};

class RatchetGreedyRule final : public PayoutRule {
public:
    RatchetGreedyRule(double cbar, double y) : cbar_(cbar), y_(y) {}
    PayoutState start(double x0, double c0) const override {
        PayoutState state{c0};
        observe_max(x0, state);
        return state;
    }
    void observe_max(double high, PayoutState& state) const override {
        if (high >= y_) state.m = cbar_;
    }
    double rate(double, const PayoutState& state) const override { return state.m; }
    double switch_distance(double x, const PayoutState& state) const override {
        return state.m < cbar_ ? y_ - x : kInf;
    }

private:
    double cbar_;
    double y_;
};

class UnconstrainedBarrierRule final : public PayoutRule {
public:
    UnconstrainedBarrierRule(double cbar, double b, double y) : cbar_(cbar), b_(b), y_(y) {}
    PayoutState start(double x0, double c0) const override {
        PayoutState state{c0};
        observe_max(x0, state);
        return state;
    }
    void observe_max(double high, PayoutState& state) const override {
        if (high >= y_) state.m = cbar_;
    }
    double rate(double x, const PayoutState& state) const override {
        return x >= y_ ? cbar_ : b_ * state.m;
    }
    double switch_distance(double x, const PayoutState&) const override {
        return std::abs(x - y_);
    }

private:
    double cbar_;
    double b_;
    double y_;
};

class BoundaryRule final : public PayoutRule {
public:
    BoundaryRule(double cbar, double b, double y) : cbar_(cbar), b_(b), y_(y) {}
    PayoutState start(double, double) const override { return {cbar_}; }
    void observe_max(double, PayoutState&) const override {}
    double rate(double x, const PayoutState&) const override {
        return x >= y_ ? cbar_ : b_ * cbar_;
    }
    double switch_distance(double x, const PayoutState&) const override {
        return y_ > 0.0 ? std::abs(x - y_) : kInf;
    }

private:
    double cbar_;
    double b_;
    double y_;
};

struct PathResult {
    double payout = 0.0;
    double ruin_time = 0.0;
    long steps = 0;
    bool ruined = false;
};

PathResult run_path(const Model& m, const PayoutRule& rule, const SimConfig& cfg, double horizon,
                    std::uint64_t seed, bool negate, long path, std::vector<TraceRow>* trace) {
    const double mu = m.params.mu();
    const double sigma = m.params.sigma();
    const double r = m.params.r();
    const double h_max = 1.0 / r;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;

    PathResult out;
    double x = cfg.x0;
    double t = 0.0;
    PayoutState state = rule.start(x, cfg.c0);
    if (!(x > 0.0)) {
        out.ruined = true;
        if (trace) trace->push_back({path, 0.0, x, state.m, 0.0});
        return out;
    }
    double high = x;
    double discount = 1.0;
    while (t < horizon) {
        const double c = rule.rate(x, state);
        if (trace) trace->push_back({path, t, x, state.m, c});

        double h = cfg.dt;
        if (cfg.adaptive) {
            const double dist = std::min(x, rule.switch_distance(x, state));
            const double free_step = dist / (kKappa * sigma);
            h = std::min(std::max(cfg.dt / discount, free_step * free_step), h_max);
        }
        h = std::min(h, horizon - t);

        double z = normal(rng);
        if (negate) z = -z;
        const double next = x + (mu - c) * h + sigma * std::sqrt(h) * z;
        bool ruined = next <= 0.0;
        if (!ruined && cfg.bridge) {
            ruined = uniform(rng) < std::exp(-2.0 * x * next / (sigma * sigma * h));
        }
        ++out.steps;
        if (ruined) {
            // Crossing time is unresolved within the step; charge half of it.
            out.payout += c * discount * -std::expm1(-0.5 * r * h) / r;
            out.ruined = true;
            out.ruin_time = t + 0.5 * h;
            if (trace) trace->push_back({path, out.ruin_time, 0.0, state.m, c});
            return out;
        }
        out.payout += c * discount * -std::expm1(-r * h) / r;
        t += h;
        discount = std::exp(-r * t);
        x = next;
        if (x > high) {
            high = x;
            rule.observe_max(high, state);
        }
    }
    if (trace) trace->push_back({path, t, x, state.m, rule.rate(x, state)});
    return out;
}

// Neumaier compensated sum in index order.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            carry_ += (sum_ - t) + v;
        } else {
            carry_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace

double step_optimal(double x, double m, const FreeBoundaries& fb, double b) {
    if (b >= 1.0) return m;
    return x >= at_level(fb.c, fb.Y, m) ? m : b * m;
}

std::unique_ptr<PayoutRule> make_optimal_rule(const Model& m, const FreeBoundaries& fb) {
    return std::make_unique<OptimalRule>(m, fb);
}

StrategySpec parse_strategy(std::string_view text) {
    if (text == "optimal") return {StrategyKind::Optimal, 0.0};
    if (text == "ratchet_greedy") return {StrategyKind::RatchetGreedy, 0.0};
    if (text == "unconstrained_barrier") return {StrategyKind::UnconstrainedBarrier, 0.0};
    if (text == "boundary") return {StrategyKind::Boundary, 0.0};
    constexpr std::string_view prefix = "constant:";
    if (text.substr(0, prefix.size()) == prefix) {
        const std::string number(text.substr(prefix.size()));
        std::size_t used = 0;
        double a = 0.0;
        try {
            a = std::stod(number, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == number.size() && used > 0 && std::isfinite(a)) {
            return {StrategyKind::Constant, a};
        }
    }
    throw Error(ErrorKind::Config, "unknown strategy '" + std::string(text) + "'");
}

std::string to_string(const StrategySpec& spec) {
    switch (spec.kind) {
        case StrategyKind::Optimal: return "optimal";
        case StrategyKind::RatchetGreedy: return "ratchet_greedy";
        case StrategyKind::UnconstrainedBarrier: return "unconstrained_barrier";
        case StrategyKind::Boundary: return "boundary";
        case StrategyKind::Constant: {
            std::array<char, 32> buf{};
            auto res = std::to_chars(buf.data(), buf.data() + buf.size(), spec.rate);
            return "constant:" + std::string(buf.data(), res.ptr);
        }
    }
    return "unknown";
}

std::unique_ptr<PayoutRule> make_comparison_rule(const Model& m, const StrategySpec& spec,
                                                 double c0) {
    const double cbar = m.params.cbar();
    const double b = m.params.b();
    const double y0 = m.constants.y0.value_or(0.0);
    switch (spec.kind) {
        case StrategyKind::Constant:
            if (spec.rate < b * c0 || spec.rate > cbar || spec.rate < 0.0) {
                std::ostringstream why;
                why << "constant rate " << spec.rate << " violates " << b * c0
                    << " <= C <= " << cbar;
                throw Error(ErrorKind::Admissibility, why.str());
            }
            return std::make_unique<ConstantRule>(spec.rate);
        case StrategyKind::RatchetGreedy:
            return std::make_unique<RatchetGreedyRule>(cbar, y0);
        case StrategyKind::UnconstrainedBarrier:
            return std::make_unique<UnconstrainedBarrierRule>(cbar, b, y0);
        case StrategyKind::Boundary:
            return std::make_unique<BoundaryRule>(cbar, b, y0);
        case StrategyKind::Optimal:
            break;
    }
    throw Error(ErrorKind::Config, "the optimal strategy needs a solved surface");
}

void validate(const SimConfig& cfg, const Model& m) {
    std::ostringstream why;
    const double min_horizon = 100.0 / m.params.r();
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
        why << "dt must be positive, got " << cfg.dt;
    } else if (cfg.horizon != 0.0 && !(cfg.horizon >= min_horizon * (1.0 - 1e-12))) {
        why << "horizon must be at least 100/r = " << min_horizon << ", got " << cfg.horizon;
    } else if (cfg.n_paths < 1) {
        why << "paths must be positive, got " << cfg.n_paths;
    } else if (!(cfg.x0 >= 0.0) || !std::isfinite(cfg.x0)) {
        why << "x0 must be nonnegative, got " << cfg.x0;
    } else if (!(cfg.c0 >= 0.0) || cfg.c0 > m.params.cbar()) {
        why << "c0 must lie in [0, cbar], got " << cfg.c0;
    } else if (cfg.trace_paths < 0) {
        why << "trace path count must be nonnegative";
    } else {
        return;
    }
    throw Error(ErrorKind::Config, why.str());
}

SimResult simulate(const Model& m, const PayoutRule& rule, const SimConfig& cfg) {
    validate(cfg, m);
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 100.0 / m.params.r();
    const long samples = cfg.antithetic ? (cfg.n_paths + 1) / 2 : cfg.n_paths;
    const int per_sample = cfg.antithetic ? 2 : 1;
    const long total = samples * per_sample;

    std::vector<PathResult> results(static_cast<std::size_t>(total));
    std::vector<std::vector<TraceRow>> traces(
        static_cast<std::size_t>(std::min<long>(cfg.trace_paths, total)));

    auto work = [&](long begin, long end) {
        for (long k = begin; k < end; ++k) {
            const long sample = k / per_sample;
            const bool negate = cfg.antithetic && (k % 2 == 1);
            const std::uint64_t seed =
                splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(sample)));
            auto* trace = k < static_cast<long>(traces.size())
                              ? &traces[static_cast<std::size_t>(k)]
                              : nullptr;
            results[static_cast<std::size_t>(k)] =
                run_path(m, rule, cfg, horizon, seed, negate, k, trace);
        }
    };
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<long>(threads, total));
    if (threads <= 1) {
        work(0, total);
    } else {
        std::vector<std::jthread> pool;
        const long chunk = (total + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const long begin = w * chunk;
            const long end = std::min(total, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }

    CompensatedSum sum, sum_sq, ruin_time, steps;
    long ruined = 0;
    for (long s = 0; s < samples; ++s) {
        double value = 0.0;
        for (int k = 0; k < per_sample; ++k) {
            const PathResult& p = results[static_cast<std::size_t>(s * per_sample + k)];
            value += p.payout;
            steps.add(static_cast<double>(p.steps));
            if (p.ruined) {
                ++ruined;
                ruin_time.add(p.ruin_time);
            }
        }
        value /= per_sample;
        sum.add(value);
        sum_sq.add(value * value);
    }

    SimResult out;
    auto& o = out.outcome;
    const auto n = static_cast<double>(samples);
    o.n_paths = total;
    o.estimate = sum.value() / n;
    const double var = samples > 1 ? std::max(0.0, (sum_sq.value() - n * o.estimate * o.estimate) /
                                                       (n - 1.0))
                                   : 0.0;
    o.std_error = std::sqrt(var / n);
    o.ruin_fraction = static_cast<double>(ruined) / static_cast<double>(total);
    o.mean_ruin_time = ruined > 0 ? ruin_time.value() / static_cast<double>(ruined) : 0.0;
    o.mean_steps = steps.value() / static_cast<double>(total);
    for (auto& t : traces) out.trace.insert(out.trace.end(), t.begin(), t.end());
    return out;
}

SimResult simulate_optimal(const Model& m, const FreeBoundaries& fb, const ValueSurface& surface,
                           const SimConfig& cfg) {
    validate(cfg, m);
    if (cfg.x0 > 0.5 * surface.grid.x_max) {
        std::ostringstream why;
        why << "x0=" << cfg.x0 << " exceeds half of x_max=" << surface.grid.x_max;
        throw Error(ErrorKind::Config, why.str());
    }
    const auto rule = make_optimal_rule(m, fb);
    return simulate(m, *rule, cfg);
}

SimResult simulate_comparison(const Model& m, const StrategySpec& spec, const SimConfig& cfg) {
    validate(cfg, m);
    const auto rule = make_comparison_rule(m, spec, cfg.c0);
    return simulate(m, *rule, cfg);
}

}  // namespace drawdown
