#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qcmv/experiment.hpp"

namespace fs = std::filesystem;
using namespace qcmv;
using nlohmann::json;

namespace {

json base() {
    return json::parse(R"({
      "schema_version": 1,
      "experiment": "lyapunov",
      "field": {"h": 0.05, "coeffs": [{"k": [1], "re": 0.5, "im": 0.0}]},
      "omega": {"values": [0.6180339887498949], "p": 0.1, "q": 2},
      "z_grid": {"theta": [0.0, 1.0]},
      "scales": [10, 20],
      "seed": 3,
      "params": {"samples": 50}
    })");
}

ConfigLoad parse(const json& j) { return parse_config(j.dump()); }

bool mentions(const std::vector<Diagnostic>& ds, const std::string& where, bool error) {
    return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) {
        return d.error == error && d.where.find(where) != std::string::npos;
    });
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("qcmv_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(QCMV_BIN) + " " + args + " >/dev/null 2>&1";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("a minimal config parses") {
    auto c = parse(base());
    REQUIRE(c.ok());
    CHECK(c.config->experiment == "lyapunov");
    CHECK(c.config->output_path == "lyapunov");
    CHECK(c.config->z_grid.size() == 2);
    CHECK(c.config->x0.dim() == 1);
    CHECK(c.config->seed == 3);
    CHECK(std::get<LyapunovParams>(c.config->params).samples == 50);
    CHECK(validate_config(*c.config).empty());
}

TEST_CASE("syntax errors carry a position") {
    auto c = parse_config("{\n  \"experiment\": \"lyapunov\",\n  oops\n}");
    CHECK_FALSE(c.ok());
    REQUIRE(c.diagnostics.size() == 1);
    CHECK(c.diagnostics[0].where.find("line 3") != std::string::npos);
}

TEST_CASE("field level diagnostics") {
    auto j = base();
    j["field"]["coeffs"][0]["re"] = 0.99;
    j["field"]["h"] = 0.5;
    auto c = parse(j);
    CHECK_FALSE(c.ok());
    CHECK(mentions(c.diagnostics, "/field", true));
    CHECK(c.diagnostics[0].message.find("not below 1") != std::string::npos);

    j = base();
    j["field"]["coeffs"].push_back({{"k", {1, 0}}, {"re", 0.1}});
    CHECK(mentions(parse(j).diagnostics, "/field/coeffs/1/k", true));

    j = base();
    j["omega"]["values"] = {0.3, 0.4};
    CHECK(mentions(parse(j).diagnostics, "/omega/values", true));
}

TEST_CASE("unknown keys warn, missing keys fail") {
    auto j = base();
    j["colour"] = "blue";
    auto c = parse(j);
    CHECK(c.ok());
    CHECK(mentions(c.diagnostics, "/colour", false));

    j = base();
    j.erase("experiment");
    CHECK(mentions(parse(j).diagnostics, "/experiment", true));

    j = base();
    j["experiment"] = "teleport";
    CHECK_FALSE(parse(j).ok());

    j = base();
    j["schema_version"] = 7;
    CHECK(mentions(parse(j).diagnostics, "/schema_version", true));
}

TEST_CASE("spectral points must be unimodular") {
    auto j = base();
    j["z_grid"] = {{"points", {{1.0, 0.0}, {0.5, 0.0}}}};
    auto c = parse(j);
    CHECK_FALSE(c.ok());
    CHECK(mentions(c.diagnostics, "/z_grid/points/1", true));
    CHECK(c.diagnostics.back().message.find("invalid-spectral-parameter") != std::string::npos);
}

TEST_CASE("rational frequency warns") {
    auto j = base();
    j["omega"]["values"] = {0.5};
    auto c = parse(j);
    REQUIRE(c.ok());
    auto d = validate_config(*c.config);
    REQUIRE(d.size() == 1);
    CHECK_FALSE(d[0].error);
    CHECK(d[0].message.find("zero Diophantine margin") != std::string::npos);
}

TEST_CASE("wrong phase dimension") {
    auto j = base();
    j["x0"] = {0.1, 0.2};
    CHECK(mentions(parse(j).diagnostics, "/x0", true));
}

TEST_CASE("runs are reproducible") {
    auto c = parse(base());
    REQUIRE(c.ok());
    auto a = run_experiment(*c.config), b = run_experiment(*c.config);
    CHECK(report_text(a.report) == report_text(b.report));
    CHECK(a.csv == b.csv);
    CHECK(a.assertion_failures.empty());
    CHECK(a.report["schema_version"] == kSchemaVersion);
    CHECK(a.report["assertions"]["passed"] == true);
}

TEST_CASE("binary exit codes and artifacts") {
    auto dir = scratch("run");
    std::string cfg = std::string(QCMV_CONFIGS) + "/lyapunov_constant.json";
    CHECK(run_cli("validate " + cfg) == 0);
    CHECK(run_cli("run " + cfg + " --output-dir " + dir.string()) == 0);
    CHECK(fs::exists(dir / "lyapunov_constant.json"));
    auto first = slurp(dir / "lyapunov_constant.json");
    CHECK(run_cli("run " + cfg + " --threads 1 --output-dir " + dir.string()) == 0);
    CHECK(slurp(dir / "lyapunov_constant.json") == first);

    auto bad = base();
    bad["field"]["coeffs"][0]["re"] = 1.5;
    auto badp = dir / "bad.json";
    std::ofstream(badp) << bad.dump();
    CHECK(run_cli("validate " + badp.string()) == 1);
    CHECK(run_cli("run " + badp.string() + " --output-dir " + dir.string()) == 1);
    CHECK(run_cli("run " + (dir / "missing.json").string()) == 1);
    CHECK(run_cli("frobnicate") != 0);
    fs::remove_all(dir);
}
