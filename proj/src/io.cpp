#include "drawdown/io.hpp"

#include "drawdown/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace drawdown {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
    return out;
}

std::vector<int> strided(int last, int stride) {
    std::vector<int> idx;
    for (int k = 0; k <= last; k += stride) idx.push_back(k);
    if (idx.back() != last) idx.push_back(last);
    return idx;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string scalar_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw Error(ErrorKind::Config, "config values must be scalars, got " + v.dump());
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_surface_csv(const std::filesystem::path& path, const ValueSurface& s, int stride) {
    if (stride < 1) throw Error(ErrorKind::Config, "surface stride must be positive");
    auto out = open_for_write(path);
    out << "x,c,v,vx,obstacle_active,d\n";
    const auto cols = strided(s.grid.nx, stride);
    std::string line;
    for (int i : strided(s.grid.nc, stride)) {
        const auto row = static_cast<std::size_t>(i);
        const std::string c = format_double(s.grid.c(i));
        for (int j : cols) {
            const auto col = static_cast<std::size_t>(j);
            line = format_double(s.grid.x(j));
            line += ',';
            line += c;
            line += ',';
            line += format_double(s.v(row, col));
            line += ',';
            line += format_double(s.vx(row, col));
            line += s.obstacle_active(row, col) ? ",1," : ",0,";
            line += format_double(s.d(row, col));
            line += '\n';
            out << line;
        }
    }
}

void write_boundaries_csv(const std::filesystem::path& path, const FreeBoundaries& fb) {
    auto out = open_for_write(path);
    out << "c,X,Y\n";
    for (std::size_t i = 0; i < fb.c.size(); ++i) {
        out << format_double(fb.c[i]) << ',' << format_double(fb.X[i]) << ','
            << format_double(fb.Y[i]) << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    auto out = open_for_write(path);
    out << "path,t,X,M,C\n";
    for (const auto& row : trace) {
        out << row.path << ',' << format_double(row.t) << ',' << format_double(row.x) << ','
            << format_double(row.m) << ',' << format_double(row.c) << '\n';
    }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
    auto out = open_for_write(path);
    out << doc.dump(2) << '\n';
}

Json to_json(const ModelParams& p) {
    return {{"mu", p.mu()}, {"sigma", p.sigma()}, {"r", p.r()}, {"cbar", p.cbar()}, {"b", p.b()}};
}

Json to_json(const DerivedConstants& d) {
    Json j{{"regime", to_string(d.regime)},
           {"gamma", d.gamma},
           {"lambda1", d.lambda1},
           {"lambda2", d.lambda2},
           {"k1", d.k1},
           {"k2", d.k2}};
    j["y0"] = d.y0 ? Json(*d.y0) : Json(nullptr);
    j["theta1"] = d.theta1;
    j["theta2"] = d.theta2;
    j["x_infty"] = d.x_infty;
    j["K1_bar"] = d.K1_bar;
    j["K2_bar"] = d.K2_bar;
    return j;
}

Json to_json(const ConstantResiduals& r) {
    return {{"gamma", r.gamma},     {"lambda1", r.lambda1},       {"lambda2", r.lambda2},
            {"theta1", r.theta1},   {"theta2", r.theta2},         {"k_identity", r.k_identity},
            {"y0", r.y0},           {"max", r.max()}};
}

Json to_json(const SimOutcome& o) {
    return {{"estimate", o.estimate},           {"stderr", o.std_error},
            {"ruin_fraction", o.ruin_fraction}, {"mean_ruin_time", o.mean_ruin_time},
            {"paths", o.n_paths},               {"mean_steps", o.mean_steps}};
}

Json to_json(const GapReport& g) {
    return {{"max_rel_gap", g.max_rel_gap},
            {"mean_rel_gap", g.mean_rel_gap},
            {"worst_node", {{"x", g.worst.x}, {"m", g.worst.m}, {"dp", g.worst.dp},
                            {"pde", g.worst.pde}}},
            {"residual", g.residual},
            {"nodes", g.nodes},
            {"nodes_over", g.nodes_over},
            {"x_lo", g.x_lo},
            {"x_hi", g.x_hi}};
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    std::map<std::string, std::string> out;
    if (trim(text).starts_with("{")) {
        Json doc;
        try {
            doc = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw Error(ErrorKind::Config, "malformed JSON config: " + std::string(e.what()));
        }
        for (const auto& [key, value] : doc.items()) {
            if (value.is_object()) {
                for (const auto& [inner, v] : value.items()) out[inner] = scalar_text(v);
            } else {
                out[key] = scalar_text(value);
            }
        }
        return out;
    }

    std::istringstream lines(text);
    std::string line;
    int number = 0;
    while (std::getline(lines, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config,
                        path.string() + ":" + std::to_string(number) + ": expected key=value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace drawdown
