#include <iostream>

#include <CLI11.hpp>

#include "impulse/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace impulse::cli;

  CLI::App app{"Finite-horizon impulse-control game solver"};
  app.set_version_flag("--version", impulse::version());
  app.require_subcommand(1);

  RunOptions options;
  std::string out;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"solve", "solve the game backward in time and write the value field"},
      {"simulate", "integrate a trajectory under a jump schedule or a solved policy"},
      {"verify", "compute the residual and structural checks of a stored field"},
      {"oracle", "compare brute-force enumeration with backward induction on finite games"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config, "JSON config or a manifest from an earlier run")->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed for validation sampling and corpus generation");
    sub->add_flag("--no-verify", options.no_verify, "skip structural checks after solve");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out")) options.out = out;
  if (sub->count("--seed")) options.seed = seed;
  return run_command(command, options, std::cout, std::cerr);
}
