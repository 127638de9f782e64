// config.hpp: experiment configuration (one JSON document) and the
// command-line overrides applied on top of it.
//
// Precedence, lowest to highest: built-in defaults, the --config file,
// command-line flags.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gsptomo/benchmark.hpp"
#include "gsptomo/core.hpp"
#include "gsptomo/reconstruct.hpp"

namespace gsptomo::cli {

enum class ModelKind { Benchmark, Custom };
enum class MethodChoice { Integral, Differential, Both };

struct FigureMeasurement {
    double omega_t{0.0};
    double value{0.0};
};

struct ExperimentConfig {
    HamiltonianParams hamiltonian;
    ModelKind model{ModelKind::Benchmark};
    std::vector<benchmark::BenchmarkTips> benchmark_tips{benchmark::BenchmarkTips{}};
    // Constant-coefficient model: names lambda, d_qq, d_pp, d_qp.
    std::vector<std::map<std::string, double>> custom_tips;
    std::map<std::string, double> custom_guess;
    CumulantState probe{0.0, Vec2(2.0, 0.0), Vec3(0.5, 0.5, 0.0)};
    MethodChoice method{MethodChoice::Integral};
    bool rotating_frame{false};
    bool signs_known{false};
    reconstruct::Schedule schedule;
    double simulation_omega_t_end{20.0};
    std::size_t simulation_samples{2001};
    double noise_sigma{0.0};
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out_dir{"out"};
    std::optional<std::string> run_id;
    // Direct curve inputs for the figures command, keyed by method name.
    std::map<std::string, std::vector<FigureMeasurement>> figure_measurements;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::optional<double> noise_sigma;
    std::optional<std::string> out_dir;
    bool rotating_frame{false};
};

// Throws Error(Config) on malformed or out-of-range input.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_overrides(ExperimentConfig& c, const Overrides& o);
void validate(const ExperimentConfig& c);

std::string to_string(MethodChoice m);
MethodChoice method_choice_from_string(const std::string& s);

// 64-bit FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);
std::uint64_t fnv1a64(const std::string& bytes);

// Run directory out_dir/<run-id>; run-id defaults to the first 8 hash digits.
std::filesystem::path run_directory(const ExperimentConfig& c);

} // namespace gsptomo::cli
