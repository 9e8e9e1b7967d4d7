#pragma once

/**
 * @file strategy_sim.hpp
 * @brief Monte Carlo evaluation of payout strategies
 *
 * Paths follow dX = (mu - C) dt + sigma dW until ruin or the horizon. Every
 * strategy here pays a rate that is piecewise constant in x between a few
 * switching levels, so X is an arithmetic Brownian motion between switches
 * and an Euler step is exact there. Steps shrink near a switch or near 0 and
 * grow with the discount factor; ruin inside a step uses the Brownian-bridge
 * crossing probability.
 */

#include "drawdown/boundaries.hpp"
#include "drawdown/model.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace drawdown {

struct SimConfig {
    double x0 = 1.0;
    double c0 = 0.0;
    double dt = 1e-3;       ///< smallest step, used next to switching levels
    double horizon = 0.0;   ///< 0 selects 100 / r
    long n_paths = 10000;
    std::uint64_t seed = 1;
    bool bridge = true;     ///< Brownian-bridge ruin detection inside steps
    bool adaptive = true;   ///< false forces fixed steps of dt
    bool antithetic = false;
    int trace_paths = 0;    ///< record t,X,M,C for the first k paths
    unsigned threads = 0;   ///< 0 selects the hardware concurrency
};

struct SimOutcome {
    double estimate = 0.0;
    double std_error = 0.0;
    double ruin_fraction = 0.0;
    double mean_ruin_time = 0.0;  ///< over ruined paths; 0 when none
    long n_paths = 0;
    double mean_steps = 0.0;
};

struct TraceRow {
    long path = 0;
    double t = 0.0;
    double x = 0.0;
    double m = 0.0;
    double c = 0.0;
};

struct SimResult {
    SimOutcome outcome;
    std::vector<TraceRow> trace;
};

/// Per-path strategy state: the running maximum of the payout rate.
struct PayoutState {
    double m = 0.0;
};

class PayoutRule {
public:
    virtual ~PayoutRule() = default;

    /// State at t = 0 for a path starting at x0 with running maximum c0.
    virtual PayoutState start(double x0, double c0) const = 0;
    /// Raises the running maximum after the surplus maximum reached `high`.
    virtual void observe_max(double high, PayoutState& state) const = 0;
    virtual double rate(double x, const PayoutState& state) const = 0;
    /// Distance in x from `x` to the nearest level where the rate or the
    /// running maximum could change, ignoring ruin at 0.
    virtual double switch_distance(double x, const PayoutState& state) const = 0;
};

/// (b + (1 - b) 1{x >= 𝒴(m)}) m, with 𝒴 interpolated linearly between levels.
double step_optimal(double x, double m, const FreeBoundaries& fb, double b);

/// Feedback triple of the solved problem: the running maximum jumps to
/// ξ(max X, c0) through the switching boundary, and the rate follows 𝒴.
std::unique_ptr<PayoutRule> make_optimal_rule(const Model& m, const FreeBoundaries& fb);

enum class StrategyKind { Optimal, Constant, RatchetGreedy, UnconstrainedBarrier, Boundary };

struct StrategySpec {
    StrategyKind kind = StrategyKind::Optimal;
    double rate = 0.0;  ///< for Constant
};

/// "optimal", "constant:<a>", "ratchet_greedy", "unconstrained_barrier" or
/// "boundary". Error(Config) otherwise.
StrategySpec parse_strategy(std::string_view text);
std::string to_string(const StrategySpec& spec);

/// Heuristics that need no solved surface:
///   constant:a             C = a
///   ratchet_greedy         C = M, M jumps to cbar once X >= y0
///   unconstrained_barrier  C = cbar above y0, b M below
///   boundary               cbar above y0, b cbar below (boundary-case optimum)
/// Error(Admissibility) if the rule cannot respect b M <= C <= cbar from c0.
std::unique_ptr<PayoutRule> make_comparison_rule(const Model& m, const StrategySpec& spec,
                                                 double c0);

/// Error(Config) on invalid dt, horizon, path count, x0 or c0.
void validate(const SimConfig& cfg, const Model& m);

SimResult simulate(const Model& m, const PayoutRule& rule, const SimConfig& cfg);

/// Error(Config) if x0 exceeds half the surface's x_max.
SimResult simulate_optimal(const Model& m, const FreeBoundaries& fb, const ValueSurface& surface,
                           const SimConfig& cfg);

SimResult simulate_comparison(const Model& m, const StrategySpec& spec, const SimConfig& cfg);

}  // namespace drawdown
