#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <omp.h>

#include "CLI11.hpp"
#include "qcmv/experiment.hpp"
#include "qcmv/io.hpp"

namespace fs = std::filesystem;
using namespace qcmv;

namespace {

constexpr int kOk = 0, kValidation = 1, kAssertion = 2;

void print(const std::vector<Diagnostic>& ds, const std::string& path) {
    for (const auto& d : ds)
        std::cerr << path << ": " << (d.error ? "error" : "warning") << ": " << d.where << ": " << d.message << "\n";
}

bool has_error(const std::vector<Diagnostic>& ds) {
    return std::any_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.error; });
}

// codes that mean the inputs were unusable rather than that a check failed
bool is_input_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::OutOfStrip:
        case ErrorCode::InvalidVerblunsky:
        case ErrorCode::InvalidBoundary:
        case ErrorCode::InvalidSpectralParameter:
        case ErrorCode::InvalidSite:
            return true;
        default:
            return false;
    }
}

void write_file(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-periodic CMV localization lab"};
    app.require_subcommand(1);
    std::string config_path, output_dir;
    int threads = 0;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();
    for (auto* sc : {run, validate}) {
        sc->add_option("--output-dir", output_dir, "artifact directory (default $QCMV_OUTPUT_DIR or .)");
        sc->add_option("--threads", threads, "OpenMP threads, 0 = auto")->check(CLI::NonNegativeNumber);
        sc->add_option("--seed", seed, "override the config seed");
    }
    CLI11_PARSE(app, argc, argv);

    if (threads > 0) omp_set_num_threads(threads);
    if (output_dir.empty()) {
        const char* env = std::getenv("QCMV_OUTPUT_DIR");
        output_dir = env && *env ? env : ".";
    }

    auto load = load_config(config_path);
    print(load.diagnostics, config_path);
    if (!load.ok()) return kValidation;
    ExperimentConfig cfg = std::move(*load.config);
    if (seed) cfg.seed = *seed;
    auto diags = validate_config(cfg);
    print(diags, config_path);
    if (has_error(diags)) return kValidation;

    if (*validate) {
        std::cout << "certificate " << fmt_double(cfg.system.field.certificate()) << "\n";
        std::cout << "diophantine_margin " << fmt_double(diophantine_margin(cfg.system.omega, cfg.k_max)) << " (k_max "
                  << cfg.k_max << ")\n";
        std::cout << "ok\n";
        return kOk;
    }

    Artifacts art;
    try {
        art = run_experiment(cfg);
    } catch (const Error& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return is_input_error(e.code()) ? kValidation : kAssertion;
    }
    try {
        fs::create_directories(output_dir);
        fs::path base = fs::path(output_dir) / cfg.output_path;
        write_file(base.string() + ".json", report_text(art.report));
        for (const auto& [suffix, text] : art.csv) write_file(base.string() + suffix + ".csv", text);
        std::cout << "wrote " << base.string() << ".json\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kValidation;
    }
    for (const auto& f : art.assertion_failures) std::cerr << config_path << ": assertion failed: " << f << "\n";
    return art.assertion_failures.empty() ? kOk : kAssertion;
}
