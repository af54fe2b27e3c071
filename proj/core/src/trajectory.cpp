#include "impulse/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>

namespace impulse {

ControlPath ControlPath::constant(Vector value) { return ControlPath{{}, {std::move(value)}}; }

const Vector& ControlPath::at(double t) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

void ControlPath::validate(const ProblemSpec& spec) const {
  if (values.size() != breakpoints.size() + 1)
    throw ConfigError("control path: needs exactly one more value than breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > spec.t0 && breakpoints[i] < spec.T))
      throw ConfigError("control path: breakpoints must lie inside (t0, T)");
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
      throw ConfigError("control path: breakpoints must be strictly increasing");
  }
  for (const auto& u : values)
    if (!spec.control_set.contains(u))
      throw ConfigError("control path: value " + format_point(u) + " is outside the control set");
}

void ImpulseSchedule::validate(const ProblemSpec& spec) const {
  double previous = spec.t0;
  for (const auto& e : entries) {
    if (!(e.time >= spec.t0 && e.time <= spec.T))
      throw ConfigError("impulse schedule: jump times must lie in [t0, T]");
    if (e.time < previous) throw ConfigError("impulse schedule: jump times must be nondecreasing");
    previous = e.time;
    if (e.impulse.size() != spec.state_dim || !all_finite(e.impulse))
      throw ConfigError("impulse schedule: impulse has the wrong dimension");
    if (norm(e.impulse) == 0.0) throw ConfigError("impulse schedule: impulses must be nonzero (xi_k != 0)");
    const bool listed = std::any_of(spec.impulse_candidates.begin(), spec.impulse_candidates.end(),
                                    [&](const Vector& c) { return distance(c, e.impulse) <= 1e-12; });
    if (!listed)
      throw ConfigError("impulse schedule: " + format_point(e.impulse) + " is not an impulse candidate");
  }
}

// ---------------------------------------------------------------------------

TrajectoryBuilder::TrajectoryBuilder(const ProblemSpec& spec, std::span<const double> x0, double dt)
    : spec_(spec), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrate: dt must be positive");
  if (x0.size() != spec.state_dim) throw ConfigError("integrate: x0 has the wrong dimension");
  if (!all_finite(x0)) throw ConfigError("integrate: x0 must be finite");
  record_.times.push_back(spec.t0);
  record_.states.emplace_back(x0.begin(), x0.end());
  record_.controls.emplace_back();
  record_.cumulative_integral.push_back(0.0);
}

void TrajectoryBuilder::flow(const ControlPath& control, double t_end) {
  double t = time();
  if (t_end <= t) return;

  std::vector<double> cuts;
  for (double b : control.breakpoints)
    if (b > t && b < t_end) cuts.push_back(b);
  cuts.push_back(t_end);

  for (double b : cuts) {
    const double a = time();
    const Vector& u = control.at(a);
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / dt_ - 1e-9)));
    const double h = (b - a) / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double ti = time();
      const double tn = (i + 1 == steps) ? b : a + static_cast<double>(i + 1) * h;
      const double step = tn - ti;
      const Vector& y = record_.states.back();
      const Vector f = spec_.dynamics(ti, y, u);
      const double psi = spec_.running_cost(ti, y, u);
      if (!std::isfinite(psi)) throw BlowUpError(ti, "running cost is not finite");
      Vector next(y.size());
      for (std::size_t d = 0; d < y.size(); ++d) next[d] = y[d] + step * f[d];
      if (!all_finite(next)) throw BlowUpError(tn, "state is not finite");

      record_.integral_cost += psi * step;
      record_.controls.back() = u;
      record_.times.push_back(tn);
      record_.states.push_back(std::move(next));
      record_.controls.push_back(u);
      record_.cumulative_integral.push_back(record_.integral_cost);
    }
  }
}

void TrajectoryBuilder::jump(std::span<const double> impulse) {
  const double t = time();
  JumpEvent ev;
  ev.time = t;
  ev.impulse.assign(impulse.begin(), impulse.end());
  ev.pre_state = state();
  const Vector g = spec_.jump_map(t, ev.pre_state, impulse);
  ev.cost = spec_.impulse_cost(t, ev.pre_state, impulse);
  ev.post_state = ev.pre_state;
  for (std::size_t d = 0; d < g.size(); ++d) ev.post_state[d] += g[d];
  if (!all_finite(ev.post_state) || !std::isfinite(ev.cost))
    throw BlowUpError(t, "jump produced a non-finite state or cost");

  if (t <= spec_.T) record_.impulse_cost += ev.cost;
  record_.times.push_back(t);
  record_.states.push_back(ev.post_state);
  record_.controls.push_back(record_.controls.back());
  record_.cumulative_integral.push_back(record_.integral_cost);
  record_.jumps.push_back(std::move(ev));
}

TrajectoryRecord TrajectoryBuilder::finish() {
  if (std::abs(time() - spec_.T) > 1e-12 * std::max(1.0, std::abs(spec_.T)))
    throw Error("trajectory: finish() called before reaching T");
  record_.terminal_cost = spec_.terminal_cost(state());
  if (!std::isfinite(record_.terminal_cost)) throw BlowUpError(spec_.T, "terminal cost is not finite");
  record_.total = record_.integral_cost + record_.impulse_cost + record_.terminal_cost;
  return std::move(record_);
}

TrajectoryRecord integrate(const ProblemSpec& spec, std::span<const double> x0,
                           const ControlPath& control, const ImpulseSchedule& impulses, double dt) {
  control.validate(spec);
  impulses.validate(spec);
  TrajectoryBuilder builder(spec, x0, dt);
  for (const auto& e : impulses.entries) {
    builder.flow(control, e.time);
    builder.jump(e.impulse);
  }
  builder.flow(control, spec.T);
  return builder.finish();
}

double payoff(const ProblemSpec& spec, const TrajectoryRecord& record) {
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < record.times.size(); ++i) {
    const double step = record.times[i + 1] - record.times[i];
    if (step > 0.0) integral += spec.running_cost(record.times[i], record.states[i], record.controls[i]) * step;
  }
  double impulses = 0.0;
  for (const auto& j : record.jumps)
    if (j.time <= spec.T) impulses += spec.impulse_cost(j.time, j.pre_state, j.impulse);
  return integral + impulses + spec.terminal_cost(record.final_state());
}

double partial_cost(const ProblemSpec& spec, const TrajectoryRecord& record, double t_begin,
                    double t_end) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < record.times.size(); ++i) {
    const double a = std::max(record.times[i], t_begin);
    const double b = std::min(record.times[i + 1], t_end);
    if (b > a) total += spec.running_cost(record.times[i], record.states[i], record.controls[i]) * (b - a);
  }
  for (const auto& j : record.jumps)
    if (j.time >= t_begin && j.time < t_end) total += j.cost;
  return total;
}

DivergenceReport divergence_check(const ProblemSpec& spec, const TrajectoryRecord& a,
                                  const TrajectoryRecord& b, double dt) {
  if (a.times.size() != b.times.size() || a.jumps.size() != b.jumps.size())
    throw ConfigError("divergence_check: mismatched schedules");
  for (std::size_t i = 0; i < a.times.size(); ++i)
    if (a.times[i] != b.times[i]) throw ConfigError("divergence_check: mismatched step grids");
  for (std::size_t k = 0; k < a.jumps.size(); ++k)
    if (a.jumps[k].time != b.jumps[k].time || a.jumps[k].impulse != b.jumps[k].impulse)
      throw ConfigError("divergence_check: mismatched schedules");

  const double L = spec.lipschitz_const;
  const double growth_per_jump = std::pow(1.0 + L, static_cast<double>(a.jumps.size()));
  const double d0 = distance(a.states.front(), b.states.front());

  DivergenceReport report;
  report.tolerance = 10.0 * L * dt + 1e-12;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const double d = distance(a.states[i], b.states[i]);
    double ratio = 0.0;
    if (d0 > 0.0) ratio = d / (std::exp(L * (a.times[i] - spec.t0)) * growth_per_jump * d0);
    else if (d > 0.0) ratio = std::numeric_limits<double>::infinity();
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.worst_time = a.times[i];
    }
  }
  report.passed = report.max_ratio <= 1.0 + report.tolerance;
  return report;
}

namespace {
void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}
}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  const std::size_t m = record.states.front().size();
  out << "t";
  for (std::size_t d = 0; d < m; ++d) out << ",y" << d;
  out << ",cumulative_integral\n";
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    put(out, record.times[i]);
    for (double v : record.states[i]) {
      out << ',';
      put(out, v);
    }
    out << ',';
    put(out, record.cumulative_integral[i]);
    out << '\n';
  }
}

void write_jump_events_csv(std::ostream& out, const TrajectoryRecord& record) {
  const std::size_t m = record.states.front().size();
  out << "t";
  for (std::size_t d = 0; d < m; ++d) out << ",xi" << d;
  for (std::size_t d = 0; d < m; ++d) out << ",pre" << d;
  for (std::size_t d = 0; d < m; ++d) out << ",post" << d;
  out << ",cost\n";
  for (const auto& j : record.jumps) {
    put(out, j.time);
    for (const Vector* v : {&j.impulse, &j.pre_state, &j.post_state})
      for (double e : *v) {
        out << ',';
        put(out, e);
      }
    out << ',';
    put(out, j.cost);
    out << '\n';
  }
}

}  // namespace impulse
