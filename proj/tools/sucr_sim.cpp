// sucr-sim: command-line front end to the experiment engine.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sucr/config.hpp"
#include "sucr/experiment.hpp"
#include "sucr/output.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunArgs {
    std::string preset;
    std::string config;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    int threads = 0;
};

int run(const RunArgs& a) {
    const auto preset = sucr::parse_preset(a.preset);
    if (!preset) throw sucr::ConfigError("unknown preset " + a.preset);
    const auto format = sucr::parse_output_format(a.format);
    if (!format) throw sucr::ConfigError("unknown format " + a.format);

    auto cfg = sucr::preset_config(*preset);
    if (!a.config.empty()) cfg = sucr::load_config(a.config, cfg);
    if (a.seed) cfg.seed = *a.seed;
    if (a.trials) cfg.trials = *a.trials;
    cfg.validate();

    const int threads = a.threads > 0 ? a.threads : sucr::default_thread_count();
    const auto result = sucr::run_experiment(cfg, threads);
    sucr::emit_results(result, a.out, *format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strongest-user collision resolution simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its results");
    run_cmd->add_option("--preset", run_args.preset, "two-user | antennas | bias | custom")->required();
    run_cmd->add_option("--config", run_args.config, "JSON config overriding the preset");
    run_cmd->add_option("--out", run_args.out, "Output file")->required();
    run_cmd->add_option("--format", run_args.format, "csv | json");
    run_cmd->add_option("--seed", run_args.seed, "Master seed");
    run_cmd->add_option("--trials", run_args.trials, "Trials per sweep point");
    run_cmd->add_option("--threads", run_args.threads, "Worker threads (default: hardware concurrency)");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a config file without running it");
    validate_cmd->add_option("--config", validate_path, "JSON config")->required();

    auto* presets_cmd = app.add_subcommand("presets", "Print the preset configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run_cmd) return run(run_args);
        if (*validate_cmd) {
            sucr::load_config(validate_path);
            std::cout << "ok\n";
            return 0;
        }
        if (*presets_cmd) {
            sucr::Json all = sucr::Json::array();
            for (auto p : {sucr::Preset::two_user_sweep, sucr::Preset::antennas_sweep, sucr::Preset::bias_sweep})
                all.push_back(sucr::to_json(sucr::preset_config(p)));
            std::cout << all.dump(2) << "\n";
            return 0;
        }
    } catch (const sucr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
