#ifndef SHELAB_CLI_HPP
#define SHELAB_CLI_HPP

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace shelab {

/// Exit codes of the experiment runner.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2, // malformed config / unknown experiment / bad value
    kExitAssert = 3,     // --assert was passed and a threshold failed
    kExitIo = 4,         // unwritable output directory or similar
};

/// Flat key-value configuration with [section] grouping: keys are stored
/// as "section.key". Hashing and serialisation use canonical (sorted)
/// key order and the verbatim value strings, so the hash is stable
/// across platforms and round-trips losslessly.
class KeyValueConfig {
public:
    static KeyValueConfig parse_string(const std::string& text);
    static KeyValueConfig parse_file(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    /// Sorted "key = value" lines; parse_string(canonical()) == *this.
    std::string canonical() const;
    /// FNV-1a 64 over the canonical serialisation.
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

/// Runs the experiment named in config key "experiment.name", writing
/// manifest.json, raw.csv, rates.csv and (optionally) plot.svg into
/// out_dir. Returns an ExitCode. Threshold checks only fail the run
/// when assert_mode is set.
int run_experiment(const KeyValueConfig& config, const std::string& out_dir,
                   bool assert_mode, std::ostream& log);

/// Canonical double formatting used in every artifact (shortest
/// round-trip representation, locale-independent).
std::string format_double(double v);

} // namespace shelab

#endif
