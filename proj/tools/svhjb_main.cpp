// Experiment runner: one subcommand per experiment, config file plus flag
// overrides, exit code 0 iff every configured assertion passes.

#include <CLI11.hpp>
#include <iostream>

#include "svhjb/errors.hpp"
#include "svhjb/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides; // key=value with dotted keys
    std::string out_dir;
    long long paths = -1;
    long long seed = -1;
    double dt = 0.0;
    long long steps = -1;
    std::string family;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--set", flags.overrides, "override, dotted key=value (JSON literal)");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--paths", flags.paths, "Monte Carlo path count");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--dt", flags.dt, "time step");
    cmd->add_option("--steps", flags.steps, "number of time steps");
    cmd->add_option("--family", flags.family, "oracle family kind");
}

svhjb::ExperimentConfig build_config(const std::string& kind, const CommonFlags& flags) {
    nlohmann::json doc;
    if (!flags.config_path.empty())
        doc = svhjb::ExperimentConfig::from_file(flags.config_path).doc;
    doc["experiment"] = kind;

    svhjb::ExperimentConfig cfg;
    cfg.doc = std::move(doc);
    if (!flags.out_dir.empty()) cfg.set("output.dir", flags.out_dir);
    if (flags.paths >= 0) cfg.set("paths", flags.paths);
    if (flags.seed >= 0) cfg.set("seed", flags.seed);
    if (flags.dt > 0.0) cfg.set("dt", flags.dt);
    if (flags.steps >= 0) cfg.set("grid.steps", flags.steps);
    if (!flags.family.empty()) cfg.set("family.kind", flags.family);
    for (const std::string& kv : flags.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw svhjb::ConfigError("override '" + kv + "' is not key=value");
        const std::string key = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::exception&) {
            value = raw; // plain string
        }
        cfg.set(key, value);
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-valued HJB experiment runner"};
    app.require_subcommand(1);

    const std::vector<std::string> kinds = {
        "geodesic",   "ito-flow",      "hjb-check", "set-heat",  "hat-equation",
        "scalar-hjb", "mean-variance", "hausdorff", "verification"};

    std::map<std::string, CommonFlags> flags;
    for (const std::string& kind : kinds) {
        CLI::App* cmd = app.add_subcommand(kind, "run the " + kind + " experiment");
        add_common(cmd, flags[kind]);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string kind = app.get_subcommands().front()->get_name();
    try {
        const svhjb::ExperimentConfig cfg = build_config(kind, flags[kind]);
        const svhjb::RunResult result = svhjb::run_experiment(cfg);
        std::cout << svhjb::summary_to_string(result.summary);
        return result.exit_code;
    } catch (const svhjb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const svhjb::Error& e) {
        std::cerr << "error (" << kind << "): " << e.what() << "\n";
        return 3;
    }
}
