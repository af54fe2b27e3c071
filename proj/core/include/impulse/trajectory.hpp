#pragma once

#include <iosfwd>
#include <vector>

#include "impulse/problem.hpp"

namespace impulse {

/// Piecewise-constant control: values[i] holds on [breakpoints[i-1], breakpoints[i]).
struct ControlPath {
  std::vector<double> breakpoints;  // strictly increasing, inside (t0, T)
  std::vector<Vector> values;       // breakpoints.size() + 1 entries

  static ControlPath constant(Vector value);

  const Vector& at(double t) const;
  void validate(const ProblemSpec& spec) const;
};

struct ImpulseEntry {
  double time = 0.0;
  Vector impulse;
};

/// Jumps in application order; equal times are applied in list order.
struct ImpulseSchedule {
  std::vector<ImpulseEntry> entries;

  void validate(const ProblemSpec& spec) const;
};

struct JumpEvent {
  double time = 0.0;
  Vector impulse;
  Vector pre_state;
  Vector post_state;
  double cost = 0.0;
};

struct TrajectoryRecord {
  /// One entry per sample. A jump produces two samples at the same time
  /// (pre and post state); zero-length intervals carry no running cost.
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> controls;          // control held on [times[i], times[i+1])
  std::vector<double> cumulative_integral;
  std::vector<JumpEvent> jumps;

  double integral_cost = 0.0;
  double impulse_cost = 0.0;
  double terminal_cost = 0.0;
  double total = 0.0;

  const Vector& final_state() const { return states.back(); }
};

/// Explicit Euler between jump instants with steps <= dt, aligned to control
/// breakpoints and jump times. Throws BlowUpError on a non-finite state.
TrajectoryRecord integrate(const ProblemSpec& spec, std::span<const double> x0,
                           const ControlPath& control, const ImpulseSchedule& impulses,
                           double dt);

/// Left-endpoint running cost + impulse costs (t_k <= T) + terminal cost,
/// recomputed from the record's samples.
double payoff(const ProblemSpec& spec, const TrajectoryRecord& record);

/// Running plus impulse cost accumulated on [t_begin, t_end); no terminal term.
double partial_cost(const ProblemSpec& spec, const TrajectoryRecord& record,
                    double t_begin, double t_end);

struct DivergenceReport {
  double max_ratio = 0.0;
  double worst_time = 0.0;
  double tolerance = 0.0;  // 10 * L * dt plus a rounding floor
  bool passed = false;
};

/// Compares two records that differ only in x0 against the exponential
/// divergence bound exp(L (s - t0)) (1 + L)^n |xa - xb|.
DivergenceReport divergence_check(const ProblemSpec& spec, const TrajectoryRecord& a,
                                  const TrajectoryRecord& b, double dt);

/// Incremental integrator used by `integrate` and by policy playback.
class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const ProblemSpec& spec, std::span<const double> x0, double dt);

  /// Euler flow from the current time to `t_end` under `control`.
  void flow(const ControlPath& control, double t_end);
  void jump(std::span<const double> impulse);
  /// Adds the terminal cost; the builder must be at T.
  TrajectoryRecord finish();

  double time() const { return record_.times.back(); }
  const Vector& state() const { return record_.states.back(); }

 private:
  const ProblemSpec& spec_;
  double dt_;
  TrajectoryRecord record_;
};

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);
void write_jump_events_csv(std::ostream& out, const TrajectoryRecord& record);

}  // namespace impulse
