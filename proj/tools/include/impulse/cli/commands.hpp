#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "impulse/io.hpp"

namespace impulse::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kCheckFailure = 3,
  kGuardExceeded = 4,
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

/// Flags shared by every subcommand; flags override the config file.
struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool no_verify = false;
};

/// Parsed config with flag overrides applied. A manifest written by an
/// earlier run is accepted as a config and yields the same effective config.
struct RunConfig {
  io::Json doc;  // effective config, echoed into every manifest
  std::filesystem::path out;
  std::uint64_t seed = kDefaultSeed;
  bool no_verify = false;
};

RunConfig load_run_config(const RunOptions& options);

int run_solve(const RunConfig& config, std::ostream& log);
int run_simulate(const RunConfig& config, std::ostream& log);
int run_verify(const RunConfig& config, std::ostream& log);
int run_oracle(const RunConfig& config, std::ostream& log);

/// Loads the config, dispatches, and maps library errors onto exit codes.
int run_command(const std::string& command, const RunOptions& options, std::ostream& log,
                std::ostream& err);

}  // namespace impulse::cli
