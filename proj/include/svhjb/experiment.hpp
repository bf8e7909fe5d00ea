#pragma once

#include <string>

#include <json.hpp>

namespace svhjb {

// Declarative experiment description. Keys mirror the JSON config file;
// command-line flags override file values which override defaults.
//
// kinds: geodesic | ito-flow | hjb-check | set-heat | hat-equation |
//        scalar-hjb | mean-variance | hausdorff | verification
struct ExperimentConfig {
    nlohmann::json doc;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_json(nlohmann::json doc);

    // dotted-path override, e.g. set("grid.dt", 1e-3)
    void set(const std::string& dotted_key, const nlohmann::json& value);

    std::string kind() const;
};

struct RunResult {
    int exit_code = 0;
    nlohmann::json summary;
};

// Executes the experiment: writes the CSV data, the JSON summary (with
// per-tolerance pass flags) and optional SVG plots; exit code 0 iff every
// configured assertion holds.
RunResult run_experiment(const ExperimentConfig& config);

// Deterministic serialization used for the summary file.
std::string summary_to_string(const nlohmann::json& summary);

} // namespace svhjb
