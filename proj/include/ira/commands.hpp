#pragma once

// Subcommands of the `ira` tool. Each returns a process exit code and never throws.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ira::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitRank = 3,
  kExitPredictor = 4,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> method;  // reach: dd | ira | ta-ira | mb
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;  // overrides data_seed
  std::optional<std::string> out;
  std::optional<std::string> calibration;
  std::vector<int> k_range;
  std::vector<int> ns_range;
};

int cmd_reach(const CommandOptions& opt, std::ostream& log);
int cmd_sweep(const CommandOptions& opt, std::ostream& log);
int cmd_calibrate(const CommandOptions& opt, std::ostream& log);
int cmd_ablation(const CommandOptions& opt, std::ostream& log);
int cmd_sensitivity(const CommandOptions& opt, std::ostream& log);
int cmd_export_training(const CommandOptions& opt, std::ostream& log);

/// Dispatches by subcommand name; unknown names give kExitConfig.
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log);

}  // namespace ira::cli
