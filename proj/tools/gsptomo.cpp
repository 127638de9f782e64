// gsptomo.cpp: command-line entry point.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gsptomo/cli/commands.hpp"
#include "gsptomo/cli/config.hpp"

int main(int argc, char** argv) {
    using namespace gsptomo;

    CLI::App app{"Simulate Gaussian open-system dynamics, synthesize tomograms and reconstruct bath parameters"};
    app.require_subcommand(1);

    std::string config_path;
    cli::Overrides overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<double> noise_sigma;
    std::optional<std::string> out_dir;

    app.add_option("--config", config_path, "experiment configuration (JSON)");
    app.add_option("--seed", seed, "single noise seed, replaces noise.seeds");
    app.add_option("--method", method, "integral, differential or both")
        ->check(CLI::IsMember({"integral", "differential", "both"}));
    app.add_option("--noise-sigma", noise_sigma, "standard deviation of tomogram noise");
    app.add_option("--out", out_dir, "output root directory");
    app.add_flag("--rotating-frame", overrides.rotating_frame, "measure along the rotating quadrature");

    for (const char* name : {"simulate", "tomogram", "reconstruct", "figures", "validate"}) {
        app.add_subcommand(name)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitConfig;
    }

    overrides.seed = seed;
    overrides.method = method;
    overrides.noise_sigma = noise_sigma;
    overrides.out_dir = out_dir;

    cli::ExperimentConfig config;
    try {
        if (!config_path.empty()) config = cli::load_config(config_path);
        cli::apply_overrides(config, overrides);
    } catch (const Error& e) {
        std::cerr << R"({"error":{"code":"ConfigError","message":)" << nlohmann::json(e.what()).dump() << "}}\n";
        return cli::kExitConfig;
    }

    return cli::run_command(app.get_subcommands().front()->get_name(), config, std::cout, std::cerr);
}
