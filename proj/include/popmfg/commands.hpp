#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "popmfg/config.hpp"

namespace popmfg {

// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitDomain = 4,
};

int exit_code_for(const std::exception& e);

// Shortest round-trip decimal form (up to 17 significant digits).
std::string format_number(double value);

// Each command computes everything first and only then writes into out_dir,
// so a failed run leaves no partial outputs. `log` receives human-readable
// progress and summary lines.
void run_solve(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);
void run_compare(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                 std::ostream& log);
// Returns the sup-norm distance between the empirical and ODE trajectories.
double run_agents(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                  std::ostream& log);
void run_analyze(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                 std::ostream& log, unsigned threads = 1);

// Reads POPMFG_THREADS; unset or invalid means 1.
unsigned threads_from_env();

// Parses a CSV written by the commands above: header fields and numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace popmfg
