#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impulse/impulse_ops.hpp"
#include "impulse/trajectory.hpp"

namespace impulse {

struct SolveOptions {
  /// Per-axis sample count for box control sets; 0 keeps the set's own.
  std::size_t control_samples = 0;
  /// Solve for exp(t) v instead of v, then map back.
  bool use_transformed = false;
  double fp_tol = kDefaultFixedPointTol;
  /// Targets are always projected onto the box; this selects how the
  /// projected point is read.
  InterpolationMode interpolation = InterpolationMode::Multilinear;
  /// Skip the assumption validation that normally precedes a solve.
  bool force = false;
  std::size_t validation_budget = 256;
  std::uint64_t validation_seed = 20240601;

  void validate() const;
};

/// Value and policy at every time level t0 + k dt, k = 0..K.
struct ValueField {
  GridSpec grid;
  SolveOptions options;
  std::string spec_fingerprint;
  std::vector<ValueSlice> slices;
  std::vector<PolicySlice> policies;
  std::size_t clamp_events = 0;
  std::size_t fixed_point_iterations = 0;
  double seconds = 0.0;
};

/// Semi-Lagrangian step for the maximizing player:
/// max over controls of psi(t,x,u) dt + next(x + f(t,x,u) dt).
ValueSlice continuation_update(const ValueSlice& next_slice, double t, const ProblemSpec& spec,
                               const GridSpec& grid, const SolveOptions& options = {},
                               std::size_t* clamp_events = nullptr);

/// Backward recursion: level K is the terminal fixed point, then for each
/// level the continuation update followed by the impulse fixed point at the
/// same time.
ValueField solve(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options = {});

/// Same recursion on Gamma = exp(t) v (reaction term as the exact factor
/// exp(-dt), impulse costs scaled by exp(t)), returned mapped back to v.
ValueField solve_transformed(const ProblemSpec& spec, const GridSpec& grid,
                             const SolveOptions& options = {});

/// Runs levels `from_level - 1` down to `to_level` starting from `start`
/// (the slice at `from_level`). Time levels use the global index, so chaining
/// two ranges reproduces a single solve bit for bit.
struct LevelRange {
  std::vector<ValueSlice> slices;    // index 0 is to_level
  std::vector<PolicySlice> policies;
  std::size_t clamp_events = 0;
};
LevelRange solve_levels(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options,
                        const ValueSlice& start, std::size_t from_level, std::size_t to_level);

struct RestartReport {
  std::size_t split_level = 0;
  double discrepancy = 0.0;
};

RestartReport restart_identity_check(const ProblemSpec& spec, const GridSpec& grid,
                                     const SolveOptions& options, std::size_t split_level);

/// Feedback playback of a solved policy against a given control path. At each
/// level the policy of the node nearest to the current state is applied.
struct PlaybackResult {
  TrajectoryRecord record;
  ImpulseSchedule schedule;
  double realized_payoff = 0.0;
  double value_at_start = 0.0;  // field value interpolated at (t0, x0)
};

PlaybackResult play_policy(const ProblemSpec& spec, const ValueField& field,
                           std::span<const double> x0, const ControlPath& control,
                           double dt);

}  // namespace impulse
