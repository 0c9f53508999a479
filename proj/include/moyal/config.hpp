#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moyal/dynamics.hpp"
#include "moyal/weights.hpp"

namespace moyal {

struct DiagramSettings {
    double alpha = 0.0; // 0 -> 1/2 - eps
    double beta = 0.0;  // 0 -> -(eps + eps')
    double delta = 0.0; // 0 -> min(eps'/2, 0.01)
    std::vector<int> n_sum = {8, 16, 32};

    void resolve_defaults(const ModelParams& params);
};

struct OutputSettings {
    std::string directory = "out";
    std::string formats = "csv"; // csv | csv,json
    bool snapshot_on = false;
};

struct RunConfig {
    ModelParams model;
    RunSettings run;
    DiagramSettings diagrams;
    OutputSettings output;

    bool operator==(const RunConfig&) const;

    // Effective configuration with every default resolved to a number;
    // re-parsing the echo reproduces this config exactly.
    std::string echo() const;

    std::uint64_t hash() const;
};

// Error with the offending key name, thrown by parse functions.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses the plain-text `[section]` / `key = value` format. Empty text
// yields the full defaults. Unknown keys and invariant violations (e.g.
// A_00 < 1, lambda < 0) raise ConfigError naming the key.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Writes manifest.json next to the outputs: config echo + hash, seed,
// version, wall time, produced files.
void write_manifest(const std::string& directory, const std::string& subcommand,
                    const RunConfig& config, double wall_seconds,
                    const std::vector<std::string>& outputs);

extern const char* kVersion;

} // namespace moyal
