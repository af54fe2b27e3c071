#include "impulse/solver.hpp"

#include <algorithm>
#include <chrono>

namespace impulse {

void SolveOptions::validate() const {
  if (!(fp_tol >= 0.0)) throw ConfigError("solve: fp_tol must be >= 0");
  if (validation_budget < 1) throw ConfigError("solve: validation_budget must be >= 1");
}

namespace {

/// Multipliers that turn the v-recursion into the Gamma = exp(t) v recursion.
struct LevelScales {
  double running = 1.0;  // exp(t_k) on psi
  double carry = 1.0;    // exp(t_k - t_{k+1}) on the transported value
  double impulse = 1.0;  // exp(t_k) on impulse costs
};

ValueSlice continuation_impl(const ValueSlice& next, double t, double dt, const ProblemSpec& spec,
                             const GridSpec& grid, const std::vector<Vector>& controls,
                             InterpolationMode mode, const LevelScales& scales,
                             std::size_t* clamp_events) {
  if (next.values.size() != grid.node_count())
    throw ConfigError("continuation_update: slice does not match the grid");
  Interpolator interp(grid, mode);
  ValueSlice out;
  out.time = t;
  out.values.resize(grid.node_count());
  Vector target(grid.dimension());
  for (std::size_t n = 0; n < out.values.size(); ++n) {
    const Vector x = grid.node(n);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& u : controls) {
      const Vector f = spec.dynamics(t, x, u);
      const double psi = spec.running_cost(t, x, u);
      if (!all_finite(f) || !std::isfinite(psi)) {
        Vector w{t};
        w.insert(w.end(), x.begin(), x.end());
        throw ModelEvaluationError("dynamics or running cost at (t, x) = " + format_point(w), w);
      }
      for (std::size_t d = 0; d < target.size(); ++d) target[d] = x[d] + f[d] * dt;
      const double carried = interp.evaluate(next.values, target);
      const double v = scales.running * psi * dt + scales.carry * carried;
      best = std::max(best, v);
    }
    out.values[n] = best;
  }
  if (clamp_events) *clamp_events += interp.clamp_events();
  return out;
}

LevelScales scales_for(const ProblemSpec& spec, const GridSpec& grid, std::size_t level,
                       bool transformed) {
  if (!transformed) return {};
  const double t = grid.time(spec, level);
  const double t_next = grid.time(spec, level + 1);
  return {std::exp(t), std::exp(t - t_next), std::exp(t)};
}

/// Backward sweep in v-space or Gamma-space; slices[0] is `to_level`.
LevelRange sweep(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options,
                 const ValueSlice& start, std::size_t from_level, std::size_t to_level, bool transformed,
                 std::size_t* fp_iterations = nullptr) {
  if (from_level > grid.time_steps || to_level > from_level)
    throw ConfigError("solve_levels: need to_level <= from_level <= time_steps");
  const auto controls = spec.control_set.discretize(options.control_samples);
  const double dt = grid.dt(spec);

  LevelRange range;
  range.slices.resize(from_level - to_level + 1);
  range.policies.resize(from_level - to_level + 1);
  range.slices.back() = start;
  range.policies.back().time = start.time;
  range.policies.back().actions.resize(grid.node_count());

  for (std::size_t k = from_level; k-- > to_level;) {
    const double t = grid.time(spec, k);
    const LevelScales scales = scales_for(spec, grid, k, transformed);
    const ValueSlice cont = continuation_impl(range.slices[k + 1 - to_level], t, dt, spec, grid, controls,
                                              options.interpolation, scales, &range.clamp_events);
    InterventionOptions io{options.interpolation, scales.impulse, options.fp_tol};
    FixedPointResult fp = impulse_fixed_point(cont, t, spec, grid, io);
    range.clamp_events += fp.clamp_events;
    if (fp_iterations) *fp_iterations += fp.iterations;
    range.slices[k - to_level] = std::move(fp.values);
    range.policies[k - to_level] = std::move(fp.policy);
  }
  return range;
}

void prepare(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options) {
  grid.validate();
  options.validate();
  if (grid.dimension() != spec.state_dim) throw ConfigError("grid: dimension does not match the problem");
  if (!options.force) {
    const ValidationReport report = validate_spec(spec, options.validation_budget, {options.validation_seed});
    for (const auto& c : report.checks)
      if (!c.passed) throw CheckFailure("assumption check '" + c.name + "' failed; use force to override");
  }
}

/// Full field in the chosen space (no map-back).
ValueField solve_raw(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options,
                     bool transformed) {
  prepare(spec, grid, options);
  const auto started = std::chrono::steady_clock::now();

  ValueField field;
  field.grid = grid;
  field.options = options;
  field.options.use_transformed = transformed;
  field.spec_fingerprint = spec.fingerprint();

  FixedPointResult terminal;
  if (!transformed) {
    terminal = terminal_value_G1(spec, grid, {options.interpolation, 1.0, options.fp_tol});
  } else {
    const double scale = std::exp(spec.T);
    const ValueSlice g = sample_on_grid(grid, spec.T, [&](std::span<const double> x) {
      return scale * spec.terminal_cost(x);
    });
    terminal = impulse_fixed_point(g, spec.T, spec, grid, {options.interpolation, scale, options.fp_tol});
  }
  field.clamp_events += terminal.clamp_events;
  field.fixed_point_iterations += terminal.iterations;

  LevelRange range = sweep(spec, grid, options, terminal.values, grid.time_steps, 0, transformed,
                           &field.fixed_point_iterations);
  range.policies.back() = std::move(terminal.policy);
  field.slices = std::move(range.slices);
  field.policies = std::move(range.policies);
  field.clamp_events += range.clamp_events;
  field.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return field;
}

}  // namespace

ValueSlice continuation_update(const ValueSlice& next_slice, double t, const ProblemSpec& spec,
                               const GridSpec& grid, const SolveOptions& options,
                               std::size_t* clamp_events) {
  return continuation_impl(next_slice, t, grid.dt(spec), spec, grid,
                           spec.control_set.discretize(options.control_samples), options.interpolation,
                           {}, clamp_events);
}

ValueField solve(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options) {
  if (options.use_transformed) return solve_transformed(spec, grid, options);
  return solve_raw(spec, grid, options, false);
}

ValueField solve_transformed(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options) {
  ValueField field = solve_raw(spec, grid, options, true);
  for (std::size_t k = 0; k < field.slices.size(); ++k) {
    const double back = std::exp(-grid.time(spec, k));
    for (double& v : field.slices[k].values) v *= back;
  }
  return field;
}

LevelRange solve_levels(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options,
                        const ValueSlice& start, std::size_t from_level, std::size_t to_level) {
  grid.validate();
  options.validate();
  return sweep(spec, grid, options, start, from_level, to_level, false);
}

RestartReport restart_identity_check(const ProblemSpec& spec, const GridSpec& grid,
                                     const SolveOptions& options, std::size_t split_level) {
  if (split_level == 0 || split_level >= grid.time_steps)
    throw ConfigError("restart_identity_check: need 0 < split < time_steps");
  const bool transformed = options.use_transformed;
  const ValueField full = solve_raw(spec, grid, options, transformed);

  const LevelRange tail =
      sweep(spec, grid, options, full.slices.back(), grid.time_steps, split_level, transformed);
  const LevelRange head = sweep(spec, grid, options, tail.slices.front(), split_level, 0, transformed);

  RestartReport report;
  report.split_level = split_level;
  for (std::size_t k = 0; k <= split_level; ++k)
    for (std::size_t n = 0; n < grid.node_count(); ++n)
      report.discrepancy =
          std::max(report.discrepancy, std::abs(head.slices[k].values[n] - full.slices[k].values[n]));
  return report;
}

PlaybackResult play_policy(const ProblemSpec& spec, const ValueField& field, std::span<const double> x0,
                           const ControlPath& control, double dt) {
  const GridSpec& grid = field.grid;
  if (field.slices.size() != grid.time_steps + 1 || field.policies.size() != grid.time_steps + 1)
    throw ConfigError("play_policy: field is incomplete");
  control.validate(spec);

  PlaybackResult result;
  Interpolator snap(grid, InterpolationMode::NearestNode);
  Interpolator interp(grid, InterpolationMode::Multilinear);
  result.value_at_start = interp.evaluate(field.slices.front().values, x0);

  TrajectoryBuilder builder(spec, x0, dt);
  for (std::size_t k = 0; k <= grid.time_steps; ++k) {
    builder.flow(control, grid.time(spec, k));
    const std::size_t node = snap.nearest(builder.state());
    for (std::size_t idx : field.policies[k].actions[node].jumps) {
      const Vector& xi = spec.impulse_candidates[idx];
      result.schedule.entries.push_back({builder.time(), xi});
      builder.jump(xi);
    }
  }
  result.record = builder.finish();
  result.realized_payoff = payoff(spec, result.record);
  return result;
}

}  // namespace impulse
