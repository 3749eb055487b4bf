#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qcmv/lab.hpp"

namespace qcmv {

inline constexpr int kSchemaVersion = 1;

struct LyapunovParams {
    int samples = 1000;
};

struct LdtParams {
    int samples = 10000;
    int lyapunov_samples = 2000;
    std::vector<LdtKind> kinds{LdtKind::Monodromy};
    std::optional<double> threshold;
};

struct LocalizeParams {
    int n = 400;
    int l = 20;
    std::optional<Interval> I;
    std::optional<double> gamma;
    std::optional<double> fit_min_distance;
    double C_sep = 1.0;
    int lyapunov_samples = 200;
    bool snap_to_spectrum = false;  // replace z0 by the nearest eigenvalue of the block
};

struct GreensParams {
    int a = 0, b = 0;
    int row = 0;
};

struct NdrParams {
    Interval interval;
    int K = 0;
    int l = 2;
    double C = 1.0;
    std::optional<double> min_component_length;
    int lyapunov_samples = 200;
};

struct ContinueParams {
    int base_n = 16;
    int k_max = 3;
    Schedule schedule = Schedule::Geometric;
    std::optional<std::size_t> j0;
    std::optional<double> gamma;
    int lyapunov_samples = 200;
};

struct CoveringParams {
    Interval interval;
    int radius = 10;
    std::map<int, Interval> sub_intervals;  // empty means radius-based
    int lyapunov_samples = 200;
};

using ExperimentParams =
    std::variant<LyapunovParams, LdtParams, LocalizeParams, GreensParams, NdrParams, ContinueParams, CoveringParams>;

struct ExperimentConfig {
    std::string experiment;
    System system;
    int k_max = 8;  // Diophantine check depth
    std::vector<cplx> z_grid;
    std::vector<int> scales;
    Phase x0;
    LdtExponents exponents;
    std::uint64_t seed = 0;
    std::string output_path;
    ExperimentParams params;
};

struct Diagnostic {
    bool error = true;
    std::string where;  // "line L, column C" or a JSON pointer
    std::string message;
};

struct ConfigLoad {
    std::optional<ExperimentConfig> config;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return config.has_value(); }
};

ConfigLoad parse_config(const std::string& text);
ConfigLoad load_config(const std::string& path);

// Checks that need no experiment computation: certificate, Diophantine margin, exponents.
std::vector<Diagnostic> validate_config(const ExperimentConfig& c);

struct Artifacts {
    nlohmann::json report;
    std::map<std::string, std::string> csv;  // file suffix -> contents
    std::vector<std::string> assertion_failures;
};

Artifacts run_experiment(const ExperimentConfig& c);

std::string report_text(const nlohmann::json& report);

}  // namespace qcmv
