#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drawdown {

enum class ErrorKind {
    InvalidParams,
    Domain,
    Regime,
    NoRoot,
    NonConvergence,
    ObstacleViolation,
    NotFound,
    Config,
    Admissibility,
};

std::string_view to_string(ErrorKind kind);

/// Base error for every module; `kind()` drives the CLI's error JSON.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class NonConvergence : public Error {
public:
    NonConvergence(int iterations, double last_delta, const std::string& what)
        : Error(ErrorKind::NonConvergence, what),
          iterations_(iterations),
          last_delta_(last_delta) {}

    int iterations() const noexcept { return iterations_; }
    double last_delta() const noexcept { return last_delta_; }

private:
    int iterations_;
    double last_delta_;
};

}  // namespace drawdown
