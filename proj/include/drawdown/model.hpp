#pragma once

/**
 * @file model.hpp
 * @brief Model parameters, regime classification and closed-form solutions
 *
 * Surplus dynamics: dX = (mu - C) dt + sigma dW, with payout rate C
 * constrained by b * M <= C <= cbar where M is the running maximum of C.
 * The value is the expected discounted payout until ruin.
 *
 * Everything here is a pure function of immutable inputs.
 */

#include <optional>

namespace drawdown {

/// The five primitive parameters. Validated on construction.
class ModelParams {
public:
    /// Throws Error(InvalidParams) unless sigma > 0, r > 0, 0 < cbar <= mu
    /// and 0 <= b <= 1.
    ModelParams(double mu, double sigma, double r, double cbar, double b);

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double r() const noexcept { return r_; }
    double cbar() const noexcept { return cbar_; }
    double b() const noexcept { return b_; }

    /// Same market, different drawdown proportion.
    ModelParams with_b(double b) const { return {mu_, sigma_, r_, cbar_, b}; }

private:
    double mu_;
    double sigma_;
    double r_;
    double cbar_;
    double b_;
};

enum class Regime { Simple, Complicated };

const char* to_string(Regime regime);

/// Simple iff 2 mu cbar <= sigma^2 r.
Regime classify_regime(const ModelParams& p);

/// The equivalent test cbar * gamma <= r, kept separate so the two can be
/// checked against each other.
Regime classify_regime_by_gamma(const ModelParams& p);

struct DerivedConstants {
    Regime regime = Regime::Simple;

    double gamma = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    /// Free point of the boundary case; only set in the Complicated regime.
    std::optional<double> y0;

    // Super-solution barrier with unit marginal payout beyond x_infty.
    double theta1 = 0.0;
    double theta2 = 0.0;
    double x_infty = 0.0;
    double K1_bar = 0.0;
    double K2_bar = 0.0;
};

DerivedConstants derive_constants(const ModelParams& p);

/// y0, or Error(NoRoot) in the Simple regime.
double require_y0(const DerivedConstants& d);

/// Absolute residuals of the defining equations of the derived constants.
struct ConstantResiduals {
    double gamma = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    double k_identity = 0.0;  ///< |lambda1 k1 + lambda2 k2 - 1|
    double y0 = 0.0;          ///< |f(y0)|, zero in the Simple regime

    double max() const;
};

/// Params and their derived constants travel together downstream.
struct Model {
    ModelParams params;
    DerivedConstants constants;
};

Model make_model(const ModelParams& p);

ConstantResiduals constant_residuals(const Model& m);

/// Value and first two derivatives of a closed form at one point.
struct Jet {
    double value = 0.0;
    double dx = 0.0;
    double dxx = 0.0;
};

/// Optimal value V(x, cbar) of the boundary case.
Jet boundary_jet(const Model& m, double x);
double boundary_value_g(const Model& m, double x);

/// -L g - cbar T g evaluated with analytic derivatives.
double boundary_residual(const Model& m, double x);

/// V(x, c) in the Simple regime: (cbar/r)(1 - exp(-gamma x)), independent
/// of c. Error(Regime) in the Complicated regime.
double simple_case_value(const Model& m, double x, double c);

/// Barrier super-solution: K1 (e^{theta2 x} - e^{-theta1 x}) below x_infty,
/// K2 + x above.
Jet barrier_jet(const Model& m, double x);
double barrier_value(const Model& m, double x);

/// Optimal payout rate of the boundary case.
double boundary_strategy(const Model& m, double x);

/// Nonlinear gradient operator T applied to a slope:
/// max over d in [b, 1] of d (1 - slope).
double gradient_operator(double b, double slope);

}  // namespace drawdown
