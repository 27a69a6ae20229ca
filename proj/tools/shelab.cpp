// shelab: experiment runner for the stochastic heat equation laboratory.
//
//   shelab <experiment> [--config file] [--out dir] [--assert] ...
//
// Configuration is a flat key-value file with [section] headers; every
// key can be overridden on the command line with --set section.key=value.
// Artifacts (manifest.json, raw.csv, rates.csv, plot.svg) land in a
// per-run directory under the output root.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "shelab/cli.hpp"

namespace {

std::string default_output_root(const shelab::KeyValueConfig& cfg) {
    if (const char* env = std::getenv("SHELAB_OUTPUT_ROOT"))
        return env;
    return cfg.get_string("output.directory", "runs");
}

std::string timestamp_tag() {
    const std::time_t tt = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic heat equation laboratory"};

    std::string experiment, config_path, manifest_path, out_dir;
    bool assert_mode = false;
    long long workers = -1, seed = -1, replicates = -1;
    std::vector<std::string> overrides;

    app.add_option("experiment", experiment,
                   "experiment name (or set experiment.name in the config)");
    app.add_option("--config", config_path, "config file path");
    app.add_option("--from-manifest", manifest_path,
                   "re-run the exact configuration stored in a manifest.json");
    app.add_option("--out", out_dir, "output directory (exact, no timestamp)");
    app.add_flag("--assert", assert_mode,
                 "exit 3 when acceptance thresholds fail");
    app.add_option("--workers", workers, "worker threads (0 = auto)");
    app.add_option("--seed", seed, "ensemble base seed");
    app.add_option("--replicates", replicates, "ensemble replicate count");
    app.add_option("--set", overrides, "override config key: section.key=value");

    CLI11_PARSE(app, argc, argv);

    shelab::KeyValueConfig cfg;
    try {
        if (!manifest_path.empty()) {
            std::ifstream in(manifest_path);
            if (!in) {
                std::cerr << "i/o error: cannot open manifest: "
                          << manifest_path << "\n";
                return shelab::kExitIo;
            }
            nlohmann::json manifest = nlohmann::json::parse(in);
            cfg = shelab::KeyValueConfig::parse_string(
                manifest.at("config_canonical").get<std::string>());
        } else if (!config_path.empty()) {
            cfg = shelab::KeyValueConfig::parse_file(config_path);
        }
        if (!experiment.empty()) cfg.set("experiment.name", experiment);
        if (workers >= 0) cfg.set("parallel.workers", std::to_string(workers));
        if (seed >= 0) cfg.set("ensemble.seed", std::to_string(seed));
        if (replicates >= 0)
            cfg.set("ensemble.replicates", std::to_string(replicates));
        for (const std::string& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos) {
                std::cerr << "config error: --set expects key=value, got '"
                          << ov << "'\n";
                return shelab::kExitValidation;
            }
            cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
        }
        if (!cfg.has("experiment.name")) {
            std::cerr << "config error: no experiment given (positional "
                         "argument or experiment.name)\n";
            return shelab::kExitValidation;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return shelab::kExitValidation;
    }

    if (out_dir.empty()) {
        char hash_hex[17];
        std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                      static_cast<unsigned long long>(cfg.hash()));
        out_dir = default_output_root(cfg) + "/" +
                  cfg.get_string("experiment.name", "run") + "-" + hash_hex +
                  "-" + timestamp_tag();
    }

    const int code = shelab::run_experiment(cfg, out_dir, assert_mode,
                                            std::cout);
    if (code == shelab::kExitOk)
        std::cout << "artifacts written to " << out_dir << "\n";
    return code;
}
