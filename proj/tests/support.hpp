#pragma once

#include "drawdown/model.hpp"

#include <random>

namespace drawdown::testing {

/// Random valid parameters for property tests.
class ParamGen {
public:
    explicit ParamGen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }

    ModelParams next() {
        const double mu = uniform(0.05, 1.0);
        return {mu, uniform(0.05, 1.5), uniform(0.01, 0.2), mu * uniform(0.05, 1.0),
                uniform(0.0, 1.0)};
    }

    ModelParams next_complicated() {
        for (;;) {
            const ModelParams p = next();
            if (classify_regime(p) == Regime::Complicated) return p;
        }
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace drawdown::testing
