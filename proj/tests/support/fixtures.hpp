#pragma once

#include <filesystem>
#include <string>

#include "impulse/problem.hpp"
#include "impulse/solver.hpp"

namespace impulse::testing {

inline ProblemSpec null_flow(double alpha = 0.5, double xi_step = 0.04, double xi_max = 4.0) {
  ProblemParams p;
  p.values = {{"alpha", alpha}, {"xi_step", xi_step}, {"xi_max", xi_max}};
  return builtin_problem(kNullFlow, p);
}

inline ProblemSpec adversarial_drift(double alpha = 0.3, double beta = 0.1) {
  ProblemParams p;
  p.values = {{"alpha", alpha}, {"beta", beta}};
  return builtin_problem(kAdversarialDrift, p);
}

inline ProblemSpec cash_management(double kappa = 0.2, double k = 0.1, double mu = 0.5, double h = 1.0) {
  ProblemParams p;
  p.values = {{"kappa", kappa}, {"k", k}, {"mu", mu}, {"h", h}};
  return builtin_problem(kCashManagement, p);
}

inline GridSpec line_grid(double lower, double upper, std::size_t nodes, std::size_t steps) {
  return GridSpec{{lower}, {upper}, {nodes}, steps};
}

/// Built-in problems with the grids used across the suite.
struct Case {
  std::string label;
  ProblemSpec spec;
  GridSpec grid;
};

inline std::vector<Case> builtin_cases(std::size_t steps = 50) {
  return {
      {"P1", null_flow(), line_grid(-2.0, 2.0, 101, steps)},
      {"P2", adversarial_drift(), line_grid(-3.0, 3.0, 61, steps)},
      {"P3", cash_management(), line_grid(-3.0, 3.0, 61, steps)},
  };
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("impulse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace impulse::testing
