// One PASS/FAIL line per acceptance criterion; exit status is nonzero when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "impulse/oracle.hpp"
#include "impulse/solver.hpp"
#include "impulse/verifier.hpp"

using namespace impulse;
using testing::adversarial_drift;
using testing::builtin_cases;
using testing::cash_management;
using testing::line_grid;
using testing::null_flow;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SolveOptions forced() {
  SolveOptions o;
  o.force = true;
  return o;
}

double max_diff(const ValueField& a, const ValueField& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.slices.size(); ++k)
    for (std::size_t n = 0; n < a.slices[k].values.size(); ++n)
      d = std::max(d, std::abs(a.slices[k].values[n] - b.slices[k].values[n]));
  return d;
}

ProblemSpec with_terminal_shift(ProblemSpec spec, double shift) {
  auto g = spec.terminal_cost;
  spec.terminal_cost = [g, shift](std::span<const double> x) { return g(x) + shift; };
  return spec;
}

Outcome closed_form() {
  const ProblemSpec spec = null_flow();
  const GridSpec grid = line_grid(-2.0, 2.0, 101, 50);
  const auto start = std::chrono::steady_clock::now();
  const ValueField field = solve(spec, grid, forced());
  const double secs = seconds_since(start);
  double err = 0.0;
  for (const auto& s : field.slices)
    for (std::size_t n = 0; n < grid.node_count(); ++n)
      err = std::max(err, std::abs(s.values[n] - std::min(std::abs(grid.node(n)[0]), 0.5)));
  return {err <= 1e-9 && secs < 1.0, fmt("max error %.3g (<= 1e-9), %.3f s (< 1 s)", err, secs)};
}

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::size_t equal = 0, total = 0;
  for (const FiniteGame& game : generate_corpus(20240601)) {
    const ValueTable v = backward_value(game);
    for (std::size_t s = 0; s < game.n_states; ++s) {
      ++total;
      if (enumerate_value(game, s) == v[0][s]) ++equal;
    }
  }
  const FiniteGame ref = reference_single_step_game();
  const double ref_enum = enumerate_value(ref, 1);
  const double ref_back = backward_value(ref)[0][1];
  const bool ref_ok = ref_enum == ref_back && ref_back == 0.4;
  const double secs = seconds_since(start);
  return {equal == total && ref_ok && secs < 30.0,
          fmt("corpus %zu/%zu start states equal, reference game %.17g/%.17g, %.2f s (< 30 s)", equal, total,
              ref_enum, ref_back, secs)};
}

Outcome solver_vs_oracle() {
  ProblemParams p;
  p.values = {{"alpha", 0.3}, {"beta", 0.1}, {"T", 2.0}, {"xi_step", 1.0}, {"xi_max", 1.0}};
  const ProblemSpec spec = builtin_problem(kAdversarialDrift, p);
  const GridSpec grid = line_grid(-3.0, 3.0, 7, 4);
  SolveOptions o = forced();
  o.control_samples = 3;
  o.interpolation = InterpolationMode::NearestNode;
  const ValueField field = solve(spec, grid, o);
  const FiniteGame game = build_finite_game(spec, {grid, 3, {}, 1e4});
  const ValueTable table = backward_value(game);
  double d = 0.0;
  for (std::size_t k = 0; k <= grid.time_steps; ++k)
    for (std::size_t n = 0; n < grid.node_count(); ++n) d = std::max(d, std::abs(field.slices[k].values[n] - table[k][n]));
  const bool shape = game.n_controls == 3 && game.n_impulses == 2;
  return {shape && d <= 1e-12, fmt("%zu controls, %zu impulses, max difference %.3g (<= 1e-12)", game.n_controls,
                                   game.n_impulses, d)};
}

Outcome restart_identity() {
  double worst = 0.0;
  for (const auto& c : builtin_cases(48))
    for (std::size_t split : {12u, 24u, 36u})
      worst = std::max(worst, restart_identity_check(c.spec, c.grid, forced(), split).discrepancy);
  return {worst <= 1e-12, fmt("worst discrepancy %.3g over 3 problems x 3 splits (<= 1e-12)", worst)};
}

Outcome obstacle_and_growth(bool obstacle) {
  std::size_t violations = 0;
  std::string per;
  for (const auto& c : builtin_cases(50)) {
    const ValueField field = solve(c.spec, c.grid, forced());
    const ResidualReport r = check_structural(field, c.spec);
    const std::size_t v = obstacle ? r.obstacle_violations.size() : r.growth_violations.size();
    violations += v;
    per += fmt(" %s=%zu", c.label.c_str(), v);
  }
  return {violations == 0, fmt("violations:%s", per.c_str())};
}

Outcome terminal_limit() {
  bool ok = true;
  std::string detail;
  for (const auto& c : builtin_cases(50)) {
    if (c.label == "P1") continue;
    double gaps[2];
    bool within = true;
    for (int i = 0; i < 2; ++i) {
      GridSpec g = c.grid;
      g.time_steps = 50u << i;
      const ResidualReport r = check_structural(solve(c.spec, g, forced()), c.spec);
      gaps[i] = r.terminal_gap;
      within = within && r.terminal_ok;
      if (i == 0) detail += fmt(" %s gap %.4g <= L dt %.4g;", c.label.c_str(), r.terminal_gap, r.terminal_bound);
    }
    const double ratio = gaps[0] / gaps[1];
    ok = ok && within && ratio >= 2.0 * 0.7;
    detail += fmt(" halving ratio %.3f;", ratio);
  }
  return {ok, detail.substr(1)};
}

Outcome transform_equivalence() {
  double worst = 0.0;
  std::string per;
  for (const auto& c : builtin_cases(50)) {
    const double d = max_diff(solve(c.spec, c.grid, forced()), solve_transformed(c.spec, c.grid, forced()));
    worst = std::max(worst, d);
    per += fmt(" %s %.3g", c.label.c_str(), d);
  }
  return {worst <= 1e-8, fmt("max-norm differences at dt = 0.02:%s (<= 1e-8)", per.c_str())};
}

Outcome residual_convergence() {
  const auto start = std::chrono::steady_clock::now();
  const ProblemSpec spec = adversarial_drift();
  double norms[3];
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const GridSpec g = line_grid(-3.0, 3.0, (60u << i) + 1, 50u << i);
    const ResidualReport r = qvi_residual(solve(spec, g, forced()), spec);
    norms[i] = r.max_norm;
    detail += fmt(" level %d max %.4g (q90 %.3g);", i, r.max_norm, r.quantile_90);
  }
  const double f1 = norms[0] / norms[1], f2 = norms[1] / norms[2];
  const double secs = seconds_since(start);
  const bool ok = f1 >= 1.4 && f1 <= 2.8 && f2 >= 1.4 && f2 <= 2.8 && secs < 120.0;
  return {ok, fmt("factors %.3f, %.3f (in [1.4, 2.8]);%s %.1f s", f1, f2, detail.c_str(), secs)};
}

Outcome divergence_pairs() {
  CoefficientTables t;
  t.A = {{0.5}};
  t.p1 = 1.0;
  t.k0 = 0.2;
  t.g1 = 1.0;
  t.control_set = ControlSet::box({-1.0}, {1.0}, {3});
  t.B = {{1.0}};
  t.impulse_candidates = {{-1.0}, {1.0}};
  t.alpha = 0.2;
  const std::vector<ProblemSpec> specs{null_flow(), adversarial_drift(), cash_management(), custom_problem(t)};

  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0), state(-3.0, 3.0);
  std::size_t passed = 0;
  double worst = 0.0;
  const double dt = 0.01;
  for (int pair = 0; pair < 100; ++pair) {
    const ProblemSpec& spec = specs[static_cast<std::size_t>(pair) % specs.size()];
    ControlPath control;
    const auto samples = spec.control_set.discretize();
    for (double b : {0.3, 0.6}) control.breakpoints.push_back(b + 0.1 * unit(rng));
    for (int i = 0; i < 3; ++i) control.values.push_back(samples[rng() % samples.size()]);
    ImpulseSchedule schedule;
    const int jumps = static_cast<int>(rng() % 3);
    for (int j = 0; j < jumps; ++j)
      schedule.entries.push_back({unit(rng), spec.impulse_candidates[rng() % spec.impulse_candidates.size()]});
    std::sort(schedule.entries.begin(), schedule.entries.end(),
              [](const ImpulseEntry& a, const ImpulseEntry& b) { return a.time < b.time; });
    const Vector xa{state(rng)}, xb{state(rng)};
    const auto a = integrate(spec, xa, control, schedule, dt);
    const auto b = integrate(spec, xb, control, schedule, dt);
    const DivergenceReport r = divergence_check(spec, a, b, dt);
    if (r.passed) ++passed;
    worst = std::max(worst, r.max_ratio);
  }
  return {passed == 100, fmt("%zu/100 pairs within the bound, worst ratio %.6f", passed, worst)};
}

Outcome comparison_proxy() {
  std::size_t violations = 0, compared = 0;
  for (const auto& c : builtin_cases(50)) {
    const ValueField base = solve(c.spec, c.grid, forced());
    const ValueField up = solve(with_terminal_shift(c.spec, 0.1), c.grid, forced());
    const ValueField down = solve(with_terminal_shift(c.spec, -0.1), c.grid, forced());
    for (std::size_t k = 0; k < base.slices.size(); ++k)
      for (std::size_t n = 0; n < c.grid.node_count(); ++n) {
        compared += 2;
        if (up.slices[k].values[n] < base.slices[k].values[n]) ++violations;
        if (down.slices[k].values[n] > base.slices[k].values[n]) ++violations;
      }
  }
  return {violations == 0, fmt("%zu violations in %zu comparisons", violations, compared)};
}

Outcome jump_cap() {
  std::size_t over = 0, lists = 0, plays = 0, play_over = 0, most = 0;
  for (const auto& c : builtin_cases(50)) {
    const ValueField field = solve(c.spec, c.grid, forced());
    for (const auto& policy : field.policies)
      for (std::size_t n = 0; n < policy.actions.size(); ++n) {
        ++lists;
        if (policy.actions[n].jumps.size() > max_jump_bound(c.spec, c.grid.node(n))) ++over;
      }
    const ControlPath control = ControlPath::constant(c.spec.control_set.discretize().back());
    for (double x0 = c.grid.lower[0]; x0 <= c.grid.upper[0] + 1e-9; x0 += 0.25) {
      const auto run = play_policy(c.spec, field, Vector{x0}, control, 0.005);
      ++plays;
      most = std::max(most, run.record.jumps.size());
      if (run.record.jumps.size() > max_jump_bound(c.spec, Vector{x0})) ++play_over;
    }
  }
  return {over == 0 && play_over == 0,
          fmt("%zu/%zu policy lists over the cap, %zu/%zu playbacks over the cap (most jumps %zu)", over, lists,
              play_over, plays, most)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form null-flow fixture", closed_form},
      {"enumeration equals backward value", oracle_equivalence},
      {"solver equals matched finite game", solver_vs_oracle},
      {"restart identity", restart_identity},
      {"obstacle inequality", [] { return obstacle_and_growth(true); }},
      {"lower bound and growth envelope", [] { return obstacle_and_growth(false); }},
      {"terminal limit", terminal_limit},
      {"transformed formulation agrees", transform_equivalence},
      {"residual convergence under refinement", residual_convergence},
      {"trajectory divergence bound", divergence_pairs},
      {"monotone in terminal data", comparison_proxy},
      {"jump cap", jump_cap},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failures;
    std::printf("[%s] %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
