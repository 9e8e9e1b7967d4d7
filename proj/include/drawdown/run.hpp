#pragma once

/**
 * @file run.hpp
 * @brief Experiment orchestration behind the command-line tool
 */

#include "drawdown/oracle_dp.hpp"
#include "drawdown/strategy_sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drawdown {

enum class Experiment { Solve, Boundaries, Simulate, Verify, Figures };

const char* to_string(Experiment e);

struct DPRunSettings {
    DPSpec spec;
    double tol = 1e-8;
    bool refine = false;  ///< also run with dx and dt halved
};

struct RunConfig {
    Experiment experiment = Experiment::Solve;

    double mu = 0.0;
    double sigma = 0.0;
    double r = 0.0;
    double cbar = 0.0;
    std::optional<double> b;  ///< not used by figures

    std::optional<double> x_max;
    int nx = 4000;
    int nc = 300;
    std::optional<double> tol;  ///< solver fixed-point tolerance

    SimConfig sim;
    bool c0_given = false;  ///< c0 defaults to cbar
    std::string strategy = "optimal";

    DPRunSettings dp;

    std::filesystem::path out = "out";
    std::optional<int> surface_stride;  ///< 1 for solve, 20 for figures
    std::vector<double> figure_b{0.4, 0.6, 0.8, 1.0};
};

/// Builds a config from flat key/value text (flag names without the leading
/// dashes, with '-' or '_'). Error(Config) on unknown keys, malformed
/// numbers or missing required keys.
RunConfig make_run_config(Experiment experiment, const std::map<std::string, std::string>& values);

/// Runs one experiment and writes its files. Returns the process exit code:
/// 0 when every invoked gate passes, 1 on module errors or failed gates,
/// 2 on configuration errors.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command line: subcommand, flags, optional --config file.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drawdown
