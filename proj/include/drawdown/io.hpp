#pragma once

/**
 * @file io.hpp
 * @brief CSV and JSON emission, config-file reading
 *
 * CSV floats are written with 17 significant digits; JSON floats use the
 * shortest representation that round-trips. Neither carries timestamps, so
 * identical inputs give byte-identical files.
 */

#include "drawdown/boundaries.hpp"
#include "drawdown/oracle_dp.hpp"
#include "drawdown/strategy_sim.hpp"
#include "drawdown/vi_solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace drawdown {

using Json = nlohmann::ordered_json;

/// "%.17g".
std::string format_double(double v);

/// Header `x,c,v,vx,obstacle_active,d`; every stride-th node in x and c.
/// Last node and last level are always included.
void write_surface_csv(const std::filesystem::path& path, const ValueSurface& s, int stride = 1);

/// Header `c,X,Y`, one row per level.
void write_boundaries_csv(const std::filesystem::path& path, const FreeBoundaries& fb);

/// Header `path,t,X,M,C`.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

/// Pretty-printed with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& doc);

Json to_json(const ModelParams& p);
Json to_json(const DerivedConstants& d);
Json to_json(const ConstantResiduals& r);
Json to_json(const SimOutcome& o);
Json to_json(const GapReport& g);

/// Flat key -> value text. Either `key = value` lines (blank lines and `#`
/// comments ignored) or a JSON object, detected by a leading `{`. Nested JSON
/// objects are flattened one level, so {"params": {"mu": 0.3}} gives mu.
/// Error(Config) on unreadable files or malformed lines.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

}  // namespace drawdown
