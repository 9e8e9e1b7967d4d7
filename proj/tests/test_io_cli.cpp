#include "drawdown/errors.hpp"
#include "drawdown/io.hpp"
#include "drawdown/run.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace drawdown;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("drawdown_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "drawdown");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::InvalidParams;
}

const std::vector<std::string> kReference{"--mu", "0.3", "--sigma", "0.3", "--r", "0.05",
                                      "--cbar", "0.3"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST_CASE("float formatting round-trips") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(-2.5) == "-2.5");
    for (double v : {1.0 / 3.0, 6.02214076e23, 5e-324, -1.7976931348623157e308}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("config files") {
    TempDir dir("config");
    SUBCASE("key=value") {
        write_text(dir.path / "a.conf", "# reference run\nmu = 0.3  # drift\n\nsigma=0.3\nout = some dir\n");
        const auto v = read_config_file(dir.path / "a.conf");
        CHECK(v.size() == 3);
        CHECK(v.at("mu") == "0.3");
        CHECK(v.at("sigma") == "0.3");
        CHECK(v.at("out") == "some dir");
    }
    SUBCASE("JSON with one nested level") {
        write_text(dir.path / "a.json",
                   R"({"params": {"mu": 0.3, "b": 1}, "antithetic": true, "strategy": "boundary"})");
        const auto v = read_config_file(dir.path / "a.json");
        CHECK(v.at("mu") == "0.3");
        CHECK(v.at("b") == "1");
        CHECK(v.at("antithetic") == "true");
        CHECK(v.at("strategy") == "boundary");
    }
    SUBCASE("malformed input") {
        write_text(dir.path / "bad.conf", "mu 0.3\n");
        CHECK(kind_of([&] { read_config_file(dir.path / "bad.conf"); }) == ErrorKind::Config);
        write_text(dir.path / "bad.json", "{\"mu\": [1, 2]}");
        CHECK(kind_of([&] { read_config_file(dir.path / "bad.json"); }) == ErrorKind::Config);
        write_text(dir.path / "broken.json", "{\"mu\": ");
        CHECK(kind_of([&] { read_config_file(dir.path / "broken.json"); }) == ErrorKind::Config);
        CHECK(kind_of([&] { read_config_file(dir.path / "missing.conf"); }) == ErrorKind::Config);
    }
}

TEST_CASE("run configuration from text") {
    std::map<std::string, std::string> v{{"mu", "0.3"}, {"sigma", "0.3"}, {"r", "0.05"},
                                         {"cbar", "0.3"}, {"b", "0.6"}};
    const RunConfig base = make_run_config(Experiment::Solve, v);
    CHECK(base.mu == 0.3);
    CHECK(*base.b == 0.6);
    CHECK(base.nx == 4000);

    auto alias = v;
    alias["x_max"] = "8";
    alias["n-paths"] = "50";
    alias["experiment"] = "whatever";
    const RunConfig a = make_run_config(Experiment::Simulate, alias);
    CHECK(*a.x_max == 8.0);
    CHECK(a.sim.n_paths == 50);
    CHECK(a.experiment == Experiment::Simulate);

    for (const auto& [key, text] : std::vector<std::pair<std::string, std::string>>{
             {"mu", "0.3x"}, {"nx", "12.5"}, {"paths", "-"}, {"antithetic", "maybe"},
             {"colour", "red"}, {"sigma", ""}}) {
        CAPTURE(key);
        auto bad = v;
        bad[key] = text;
        CHECK(kind_of([&] { make_run_config(Experiment::Solve, bad); }) == ErrorKind::Config);
    }
    auto missing = v;
    missing.erase("r");
    CHECK(kind_of([&] { make_run_config(Experiment::Solve, missing); }) == ErrorKind::Config);
}

TEST_CASE("command line errors exit with 2 and print usage") {
    const CliRun none = cli({});
    CHECK(none.code == 2);
    CHECK(none.err.find("Usage") != std::string::npos);

    const CliRun unknown = cli(with({"solve", "--b", "0.6", "--frobnicate", "1"}, kReference));
    CHECK(unknown.code == 2);

    const CliRun missing = cli({"solve", "--mu", "0.3", "--sigma", "0.3", "--cbar", "0.3", "--b", "0.6"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("r") != std::string::npos);
    CHECK(missing.err.find("Usage") != std::string::npos);

    const CliRun version = cli({"--version"});
    CHECK(version.code == 0);
    CHECK_FALSE(version.out.empty());
}

TEST_CASE("invalid parameters exit with 1 and leave error.json") {
    TempDir dir("invalid");
    const CliRun r = cli({"solve", "--mu", "0.1", "--sigma", "0.3", "--r", "0.05", "--cbar", "0.3",
                          "--b", "0.6", "--out", dir.path.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("InvalidParams") != std::string::npos);
    REQUIRE(fs::exists(dir.path / "error.json"));
    const Json e = Json::parse(slurp(dir.path / "error.json"));
    CHECK(e["error"] == "InvalidParams");
}

TEST_CASE("Simple regime is reported and solved in closed form") {
    TempDir dir("simple");
    const CliRun r = cli({"solve", "--mu", "0.1", "--sigma", "0.8", "--r", "0.08", "--cbar", "0.1",
                          "--b", "0.5", "--nx", "400", "--nc", "10", "--out", dir.path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("Simple regime: closed form") != std::string::npos);
    CHECK(fs::exists(dir.path / "surface.csv"));
    CHECK(fs::exists(dir.path / "boundaries.csv"));
    const Json meta = Json::parse(slurp(dir.path / "meta.json"));
    CHECK(meta["regime"] == "Simple");
    CHECK(meta["passed"] == true);
}

TEST_CASE("solve output is complete and byte-identical across runs") {
    TempDir dir("repeat");
    const auto args = [&](const std::string& sub) {
        return with({"solve", "--b", "0.6", "--nx", "600", "--nc", "20", "--out",
                     (dir.path / sub).string()},
                    kReference);
    };
    const CliRun first = cli(args("one"));
    const CliRun second = cli(args("two"));
    REQUIRE(first.code == 0);
    REQUIRE(second.code == 0);
    for (const std::string name : {"surface.csv", "boundaries.csv"}) {
        CAPTURE(name);
        const std::string a = slurp(dir.path / "one" / name);
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(dir.path / "two" / name));
    }
    // meta.json echoes the output directory and nothing else differs.
    std::string meta_two = slurp(dir.path / "two" / "meta.json");
    const std::string two = (dir.path / "two").string();
    meta_two.replace(meta_two.find(two), two.size(), (dir.path / "one").string());
    CHECK(slurp(dir.path / "one" / "meta.json") == meta_two);
    const std::string surface = slurp(dir.path / "one" / "surface.csv");
    CHECK(surface.starts_with("x,c,v,vx,obstacle_active,d\n"));
    CHECK(std::count(surface.begin(), surface.end(), '\n') == 1 + 601 * 21);
    CHECK(slurp(dir.path / "one" / "boundaries.csv").starts_with("c,X,Y\n"));
    const Json meta = Json::parse(slurp(dir.path / "one" / "meta.json"));
    CHECK(meta["passed"] == true);
    CHECK(meta["regime"] == "Complicated");
    for (const auto& [name, pass] : meta["gates"].items()) {
        CAPTURE(std::string(name));
        CHECK(pass == true);
    }
}

TEST_CASE("config file values yield to flags") {
    TempDir dir("override");
    write_text(dir.path / "run.conf",
               "mu=0.3\nsigma=0.3\nr=0.05\ncbar=0.3\nb=0.6\nnx=400\nnc=10\nstrategy=boundary\n"
               "paths=200\nx0=3\n");
    const CliRun r = cli({"simulate", "--config", (dir.path / "run.conf").string(), "--paths", "100",
                          "--out", dir.path.string()});
    REQUIRE(r.code == 0);
    const Json sim = Json::parse(slurp(dir.path / "sim.json"));
    CHECK(sim["paths"] == 100);
    CHECK(sim["x0"] == 3.0);
    CHECK(sim.contains("estimate"));
    CHECK(sim.contains("stderr"));
}
