#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "impulse/common.hpp"

namespace impulse {

using DynamicsFn = std::function<Vector(double t, std::span<const double> x,
                                        std::span<const double> control)>;
using JumpFn = std::function<Vector(double t, std::span<const double> x,
                                    std::span<const double> impulse)>;
using RunningCostFn = std::function<double(double t, std::span<const double> x,
                                           std::span<const double> control)>;
using ImpulseCostFn = std::function<double(double t, std::span<const double> x,
                                           std::span<const double> impulse)>;
using TerminalCostFn = std::function<double(std::span<const double> x)>;

/// Compact control set of the maximizing player: an explicit finite list or an
/// axis-aligned box sampled uniformly per axis.
struct ControlBox {
  Vector lower;
  Vector upper;
  std::vector<std::size_t> samples;  // per axis, >= 1
};

struct ControlSet {
  std::variant<std::vector<Vector>, ControlBox> set;

  static ControlSet finite(std::vector<Vector> values);
  static ControlSet box(Vector lower, Vector upper, std::vector<std::size_t> samples);

  bool is_box() const { return std::holds_alternative<ControlBox>(set); }
  std::size_t dimension() const;

  /// Uniform tensor sampling of a box (endpoints included; a single sample
  /// sits at the midpoint). `samples_per_axis` > 0 overrides the box's own
  /// counts. Finite lists are returned unchanged.
  std::vector<Vector> discretize(std::size_t samples_per_axis = 0) const;

  /// Membership with 1e-12 slack (box bounds, or equality to a list entry).
  bool contains(std::span<const double> control) const;
};

/// Full datum of the finite-horizon impulse-control game. Immutable once built
/// and safe to share between threads.
struct ProblemSpec {
  std::string name;
  double t0 = 0.0;
  double T = 1.0;
  std::size_t state_dim = 1;

  DynamicsFn dynamics;
  JumpFn jump_map;
  RunningCostFn running_cost;
  ImpulseCostFn impulse_cost;
  TerminalCostFn terminal_cost;

  ControlSet control_set;
  /// Finite, nonzero impulse values; order defines tie-breaking.
  std::vector<Vector> impulse_candidates;

  double alpha = 0.0;            // lower bound on impulse cost
  double growth_const = 0.0;     // linear-growth constant of f, g, psi, C, G
  double lipschitz_const = 0.0;  // spatial Lipschitz constant of f and g

  /// Builder parameters, kept for fingerprints and echoes.
  std::map<std::string, double> params;

  /// Stable identifier of (name, params, candidates, constants).
  std::string fingerprint() const;
};

// ---------------------------------------------------------------------------
// Validation of the standing assumptions on a deterministic sample.

struct ValidationOptions {
  std::uint64_t seed = 20240601;
  /// States are sampled in the cube [-radius, radius]^m.
  double radius = 10.0;
  /// Relative slack on every bound.
  double slack = 1e-9;
};

struct ValidationWitness {
  double t = 0.0;
  Vector x;
  Vector other;  // control, impulse, or second state depending on the check
  double ratio = 0.0;
};

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  /// Largest sampled (value / allowed bound); <= 1 (+slack) means pass.
  double worst_ratio = 0.0;
  std::vector<ValidationWitness> violations;  // capped at a few witnesses
};

struct ValidationReport {
  std::uint64_t seed = 0;
  std::size_t sample_budget = 0;
  double radius = 0.0;
  /// impulse_cost_lower_bound, growth_dynamics, growth_costs, lipschitz
  std::vector<AssumptionCheck> checks;

  bool passed() const;
  const AssumptionCheck& check(const std::string& name) const;
};

ValidationReport validate_spec(const ProblemSpec& spec, std::size_t sample_budget,
                               const ValidationOptions& options = {});

// ---------------------------------------------------------------------------
// Built-in benchmark problems (all one-dimensional).

struct ProblemParams {
  std::map<std::string, double> values;
  /// Explicit candidate list; when empty the list is generated from
  /// `xi_step` / `xi_max` as {-xi_max, ..., -xi_step, xi_step, ..., xi_max}.
  std::vector<Vector> impulse_candidates;
};

inline constexpr const char* kNullFlow = "P1_null_flow";
inline constexpr const char* kAdversarialDrift = "P2_adversarial_drift";
inline constexpr const char* kCashManagement = "P3_cash_management";

std::vector<std::string> builtin_problem_names();

ProblemSpec builtin_problem(const std::string& name, const ProblemParams& params);

/// Symmetric one-dimensional candidate list without zero.
std::vector<Vector> symmetric_impulses(double step, double max_abs);

// ---------------------------------------------------------------------------
// Custom problems declared through coefficient tables:
//   f   = A x + B u + c
//   g   = xi + J x
//   psi = p0 + p1 |x| + p2 |u|
//   C   = k0 + k1 |xi| + k2 |x|
//   G   = g0 + g1 |x - center|

struct CoefficientTables {
  std::size_t state_dim = 1;
  double t0 = 0.0;
  double T = 1.0;
  std::vector<Vector> A, B, J;  // m x m; empty means zero
  Vector c;                     // empty means zero
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;
  double k0 = 0.0, k1 = 0.0, k2 = 0.0;
  double g0 = 0.0, g1 = 0.0;
  Vector center;
  ControlSet control_set;
  std::vector<Vector> impulse_candidates;
  double alpha = 0.0;
  std::optional<double> growth_const;     // derived when absent
  std::optional<double> lipschitz_const;  // derived when absent
};

ProblemSpec custom_problem(const CoefficientTables& tables);

}  // namespace impulse
