// commands.hpp: the subcommands of the gsptomo tool. Each writes under
// out/<run-id>/{trajectories,tomograms,reports,figures}/ and returns the
// process exit code.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsptomo/cli/config.hpp"
#include "gsptomo/reconstruct.hpp"

namespace gsptomo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitInvariant = 4;

int exit_code_for(ErrorCode code) noexcept;

// Writes to a sibling temporary file, then renames over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

int cmd_simulate(const ExperimentConfig& c, std::ostream& out);
int cmd_tomogram(const ExperimentConfig& c, std::ostream& out);
int cmd_reconstruct(const ExperimentConfig& c, std::ostream& out);
int cmd_figures(const ExperimentConfig& c, std::ostream& out);
int cmd_validate(const ExperimentConfig& c, std::ostream& out);

// Dispatches by name and turns errors into exit codes plus a JSON error
// record on `err` (and error.json in the run directory when possible).
int run_command(const std::string& name, const ExperimentConfig& c, std::ostream& out, std::ostream& err);

// Every (tip-vector, seed, method) reconstruction of the config, in a fixed
// order, computed on worker threads.
std::vector<reconstruct::ReconstructionReport> reconstruct_all(const ExperimentConfig& c);

// Points used, largest |residual|, largest relative tip error and wall time
// per report.
std::string comparison_table(const std::vector<reconstruct::ReconstructionReport>& reports,
                             bool include_wall_time = true);

} // namespace gsptomo::cli
