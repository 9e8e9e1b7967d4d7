#include "drawdown/model.hpp"

#include "drawdown/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace drawdown {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParams: return "InvalidParams";
        case ErrorKind::Domain: return "DomainError";
        case ErrorKind::Regime: return "RegimeError";
        case ErrorKind::NoRoot: return "NoRoot";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::ObstacleViolation: return "ObstacleViolation";
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::Admissibility: return "AdmissibilityError";
    }
    return "Unknown";
}

ModelParams::ModelParams(double mu, double sigma, double r, double cbar, double b)
    : mu_(mu), sigma_(sigma), r_(r), cbar_(cbar), b_(b) {
    std::ostringstream why;
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(r) ||
        !std::isfinite(cbar) || !std::isfinite(b)) {
        why << "parameters must be finite";
    } else if (!(sigma > 0.0)) {
        why << "sigma must be positive, got " << sigma;
    } else if (!(r > 0.0)) {
        why << "r must be positive, got " << r;
    } else if (!(cbar > 0.0) || cbar > mu) {
        why << "cbar must lie in (0, mu], got cbar=" << cbar << " mu=" << mu;
    } else if (b < 0.0 || b > 1.0) {
        why << "b must lie in [0, 1], got " << b;
    } else {
        return;
    }
    throw Error(ErrorKind::InvalidParams, why.str());
}

const char* to_string(Regime regime) {
    return regime == Regime::Simple ? "Simple" : "Complicated";
}

Regime classify_regime(const ModelParams& p) {
    const double lhs = 2.0 * p.mu() * p.cbar();
    const double rhs = p.sigma() * p.sigma() * p.r();
    return lhs <= rhs ? Regime::Simple : Regime::Complicated;
}

namespace {

// Positive root of -s2/2 y^2 + a y + r = 0, i.e. (sqrt(a^2 + 2 s2 r) + a)/s2.
// For a < 0 the rationalized form avoids cancellation.
double positive_root(double s2, double a, double r) {
    const double disc = std::sqrt(a * a + 2.0 * s2 * r);
    return a >= 0.0 ? (disc + a) / s2 : 2.0 * r / (disc - a);
}

double quadratic(double s2, double a, double r, double y) {
    return -0.5 * s2 * y * y + a * y + r;
}

struct YFunction {
    double k1, k2, lambda1, lambda2, level;

    double value(double y) const {
        return k1 * std::exp(-lambda1 * y) - k2 * std::exp(lambda2 * y) + level;
    }
    double slope(double y) const {
        return -lambda1 * k1 * std::exp(-lambda1 * y) - lambda2 * k2 * std::exp(lambda2 * y);
    }
};

// f is strictly decreasing with f(0) > 0, so bracketing then bisection is
// unconditionally safe; Newton only polishes the last bits.
double solve_y0(const YFunction& f) {
    double lo = 0.0;
    double hi = 1.0;
    while (f.value(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) {
            throw Error(ErrorKind::NoRoot, "y0 bracket search failed");
        }
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (f.value(mid) > 0.0 ? lo : hi) = mid;
    }
    double y = 0.5 * (lo + hi);
    for (int k = 0; k < 2; ++k) {
        const double step = f.value(y) / f.slope(y);
        const double next = y - step;
        if (next > lo - 1e-12 && next < hi + 1e-12) y = next;
    }
    return y;
}

}  // namespace

Regime classify_regime_by_gamma(const ModelParams& p) {
    const double s2 = p.sigma() * p.sigma();
    const double gamma = positive_root(s2, p.mu() - p.cbar(), p.r());
    return p.cbar() * gamma <= p.r() ? Regime::Simple : Regime::Complicated;
}

DerivedConstants derive_constants(const ModelParams& p) {
    DerivedConstants d;
    const double s2 = p.sigma() * p.sigma();
    const double mu = p.mu();
    const double r = p.r();
    const double cbar = p.cbar();
    const double b = p.b();

    d.regime = classify_regime(p);
    d.gamma = positive_root(s2, mu - cbar, r);
    d.lambda1 = positive_root(s2, -(mu - b * cbar), r);
    d.lambda2 = positive_root(s2, mu - b * cbar, r);

    const double shift = (1.0 - b) * cbar / r - 1.0 / d.gamma;
    const double lsum = d.lambda1 + d.lambda2;
    d.k1 = (1.0 + d.lambda2 * shift) / lsum;
    d.k2 = (1.0 - d.lambda1 * shift) / lsum;

    if (d.regime == Regime::Complicated) {
        d.y0 = solve_y0({d.k1, d.k2, d.lambda1, d.lambda2, b * cbar / r});
    }

    d.theta1 = positive_root(s2, mu, r);
    d.theta2 = positive_root(s2, -mu, r);
    d.x_infty = 2.0 / (d.theta1 + d.theta2) * std::log(d.theta1 / d.theta2);
    const double up = std::exp(d.theta2 * d.x_infty);
    const double down = std::exp(-d.theta1 * d.x_infty);
    d.K1_bar = 1.0 / (d.theta2 * up + d.theta1 * down);
    // Continuity of value at x_infty.
    d.K2_bar = d.K1_bar * (up - down) - d.x_infty;
    return d;
}

double require_y0(const DerivedConstants& d) {
    if (!d.y0) {
        throw Error(ErrorKind::NoRoot, "y0 does not exist in the Simple regime");
    }
    return *d.y0;
}

double ConstantResiduals::max() const {
    return std::max({gamma, lambda1, lambda2, theta1, theta2, k_identity, y0});
}

Model make_model(const ModelParams& p) { return Model{p, derive_constants(p)}; }

ConstantResiduals constant_residuals(const Model& m) {
    const auto& p = m.params;
    const auto& d = m.constants;
    const double s2 = p.sigma() * p.sigma();
    const double bc = p.b() * p.cbar();
    ConstantResiduals res;
    res.gamma = std::abs(quadratic(s2, p.mu() - p.cbar(), p.r(), d.gamma));
    res.lambda1 = std::abs(quadratic(s2, -(p.mu() - bc), p.r(), d.lambda1));
    res.lambda2 = std::abs(quadratic(s2, p.mu() - bc, p.r(), d.lambda2));
    res.theta1 = std::abs(quadratic(s2, p.mu(), p.r(), d.theta1));
    res.theta2 = std::abs(quadratic(s2, -p.mu(), p.r(), d.theta2));
    res.k_identity = std::abs(d.lambda1 * d.k1 + d.lambda2 * d.k2 - 1.0);
    if (d.y0) {
        const YFunction f{d.k1, d.k2, d.lambda1, d.lambda2, bc / p.r()};
        res.y0 = std::abs(f.value(*d.y0));
    }
    return res;
}

Jet boundary_jet(const Model& m, double x) {
    if (!(x >= 0.0)) {
        throw Error(ErrorKind::Domain, "boundary value requires x >= 0");
    }
    const auto& p = m.params;
    const auto& d = m.constants;
    const double level = p.cbar() / p.r();
    if (!d.y0) {
        const double e = std::exp(-d.gamma * x);
        return {level * (1.0 - e), level * d.gamma * e, -level * d.gamma * d.gamma * e};
    }
    const double s = x - *d.y0;
    if (s <= 0.0) {
        const double a = d.k1 * std::exp(d.lambda1 * s);
        const double c = d.k2 * std::exp(-d.lambda2 * s);
        // The constants make g(0) vanish only up to rounding.
        return {x == 0.0 ? 0.0 : a - c + p.b() * level,
                d.lambda1 * a + d.lambda2 * c,
                d.lambda1 * d.lambda1 * a - d.lambda2 * d.lambda2 * c};
    }
    const double e = std::exp(-d.gamma * s);
    return {level - e / d.gamma, e, -d.gamma * e};
}

double boundary_value_g(const Model& m, double x) { return boundary_jet(m, x).value; }

double gradient_operator(double b, double slope) {
    const double gap = 1.0 - slope;
    return b * gap + (1.0 - b) * std::max(gap, 0.0);
}

double boundary_residual(const Model& m, double x) {
    const auto& p = m.params;
    const Jet g = boundary_jet(m, x);
    const double generator =
        0.5 * p.sigma() * p.sigma() * g.dxx + p.mu() * g.dx - p.r() * g.value;
    return -generator - p.cbar() * gradient_operator(p.b(), g.dx);
}

double simple_case_value(const Model& m, double x, double c) {
    if (m.constants.regime != Regime::Simple) {
        throw Error(ErrorKind::Regime, "closed form value only exists in the Simple regime");
    }
    if (!(x >= 0.0) || !(c >= 0.0) || c > m.params.cbar()) {
        throw Error(ErrorKind::Domain, "simple case value requires x >= 0 and 0 <= c <= cbar");
    }
    return m.params.cbar() / m.params.r() * (1.0 - std::exp(-m.constants.gamma * x));
}

Jet barrier_jet(const Model& m, double x) {
    if (!(x >= 0.0)) {
        throw Error(ErrorKind::Domain, "barrier value requires x >= 0");
    }
    const auto& d = m.constants;
    if (x < d.x_infty) {
        const double up = std::exp(d.theta2 * x);
        const double down = std::exp(-d.theta1 * x);
        return {d.K1_bar * (up - down),
                d.K1_bar * (d.theta2 * up + d.theta1 * down),
                d.K1_bar * (d.theta2 * d.theta2 * up - d.theta1 * d.theta1 * down)};
    }
    return {d.K2_bar + x, 1.0, 0.0};
}

double barrier_value(const Model& m, double x) { return barrier_jet(m, x).value; }

double boundary_strategy(const Model& m, double x) {
    const auto& p = m.params;
    if (!m.constants.y0 || x >= *m.constants.y0) return p.cbar();
    return p.b() * p.cbar();
}

}  // namespace drawdown
