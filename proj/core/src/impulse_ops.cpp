#include "impulse/impulse_ops.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

namespace impulse {

InterventionStencil::InterventionStencil(const ProblemSpec& spec, const GridSpec& grid, double t,
                                         const InterventionOptions& options)
    : nodes_(grid.node_count()), candidates_(spec.impulse_candidates.size()) {
  Interpolator interp(grid, options.interpolation);
  Interpolator snap(grid, InterpolationMode::NearestNode);
  stencils_.reserve(nodes_ * candidates_);
  costs_.reserve(nodes_ * candidates_);
  nearest_.reserve(nodes_ * candidates_);
  Vector target(grid.dimension());
  for (std::size_t n = 0; n < nodes_; ++n) {
    const Vector x = grid.node(n);
    for (const auto& xi : spec.impulse_candidates) {
      const Vector g = spec.jump_map(t, x, xi);
      const double cost = spec.impulse_cost(t, x, xi);
      if (!all_finite(g) || !std::isfinite(cost)) {
        Vector w{t};
        w.insert(w.end(), x.begin(), x.end());
        throw ModelEvaluationError("jump map or impulse cost at (t, x) = " + format_point(w), w);
      }
      for (std::size_t d = 0; d < target.size(); ++d) target[d] = x[d] + g[d];
      stencils_.push_back(interp.stencil(target));
      costs_.push_back(options.cost_scale * cost);
      nearest_.push_back(snap.nearest(target));
    }
  }
  clamp_events_ = interp.clamp_events();
}

std::pair<double, std::size_t> InterventionStencil::best(std::span<const double> slice,
                                                         std::size_t node) const {
  double best_value = std::numeric_limits<double>::infinity();
  std::size_t best_index = static_cast<std::size_t>(-1);
  const std::size_t base = node * candidates_;
  for (std::size_t i = 0; i < candidates_; ++i) {
    const double v = stencils_[base + i].apply(slice) + costs_[base + i];
    if (v < best_value) {
      best_value = v;
      best_index = i;
    }
  }
  return {best_value, best_index};
}

ValueSlice apply_N(const ValueSlice& slice, double t, const ProblemSpec& spec, const GridSpec& grid,
                   const InterventionOptions& options, InterventionStats* stats) {
  if (slice.values.size() != grid.node_count())
    throw ConfigError("apply_N: slice does not match the grid");
  const InterventionStencil stencil(spec, grid, t, options);
  ValueSlice out;
  out.time = t;
  out.values.resize(slice.values.size());
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = stencil.best(slice.values, n).first;
  if (stats) stats->clamp_events += stencil.clamp_events();
  return out;
}

std::size_t max_jump_bound(const ProblemSpec& spec, std::span<const double> x) {
  if (!(spec.alpha > 0.0)) return 1;
  const double n = std::floor(spec.growth_const * (1.0 + norm(x)) / spec.alpha);
  if (!(n >= 1.0)) return 1;
  return static_cast<std::size_t>(std::min(n, 1e9));
}

FixedPointResult impulse_fixed_point(const ValueSlice& slice, double t, const ProblemSpec& spec,
                                     const GridSpec& grid, const InterventionOptions& options) {
  const std::size_t n_nodes = grid.node_count();
  if (slice.values.size() != n_nodes) throw ConfigError("impulse_fixed_point: slice does not match the grid");

  FixedPointResult result;
  result.values.time = t;
  result.policy.time = t;
  result.policy.actions.resize(n_nodes);
  if (spec.impulse_candidates.empty()) {
    result.values.values = slice.values;
    return result;
  }

  const InterventionStencil stencil(spec, grid, t, options);
  result.clamp_events = stencil.clamp_events();

  std::vector<std::size_t> cap(n_nodes);
  std::size_t max_cap = 1;
  for (std::size_t n = 0; n < n_nodes; ++n) {
    cap[n] = max_jump_bound(spec, grid.node(n));
    max_cap = std::max(max_cap, cap[n]);
  }

  constexpr auto kContinue = static_cast<std::size_t>(-1);
  // choice[j][n]: first jump of the best chain of length <= j from node n.
  std::vector<std::vector<std::size_t>> choice{std::vector<std::size_t>(n_nodes, kContinue)};
  std::vector<double> w = slice.values;
  std::vector<double> next(n_nodes);
  std::vector<double> frozen(n_nodes);
  std::vector<bool> is_frozen(n_nodes, false);

  std::size_t level = 0;
  while (level < max_cap) {
    std::vector<std::size_t> level_choice = choice.back();
    bool improved = false;
    for (std::size_t n = 0; n < n_nodes; ++n) {
      const auto [v, i] = stencil.best(w, n);
      if (v < w[n] - options.fp_tol) {
        next[n] = v;
        level_choice[n] = i;
        improved = true;
      } else {
        next[n] = w[n];
      }
    }
    if (!improved) break;
    ++level;
    w.swap(next);
    choice.push_back(std::move(level_choice));
    for (std::size_t n = 0; n < n_nodes; ++n) {
      if (cap[n] == level) {
        frozen[n] = w[n];
        is_frozen[n] = true;
      }
    }
  }
  result.iterations = level;

  result.values.values.resize(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    result.values.values[n] = is_frozen[n] ? frozen[n] : w[n];
    std::size_t budget = std::min(cap[n], level);
    std::size_t cur = n;
    auto& jumps = result.policy.actions[n].jumps;
    while (budget > 0) {
      const std::size_t c = choice[budget][cur];
      if (c == kContinue) break;
      jumps.push_back(c);
      cur = stencil.nearest_target(cur, c);
      --budget;
    }
  }
  return result;
}

FixedPointResult terminal_value_G1(const ProblemSpec& spec, const GridSpec& grid,
                                   const InterventionOptions& options) {
  const ValueSlice g = sample_on_grid(grid, spec.T, [&](std::span<const double> x) {
    const double v = spec.terminal_cost(x);
    if (!std::isfinite(v)) throw ModelEvaluationError("terminal cost at x = " + format_point(x), Vector(x.begin(), x.end()));
    return v;
  });
  return impulse_fixed_point(g, spec.T, spec, grid, options);
}

void write_policy_csv(std::ostream& out, const ProblemSpec& spec, const GridSpec& grid,
                      const PolicySlice& policy, const ValueSlice& values) {
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t d = 0; d < grid.dimension(); ++d) out << 'x' << d << ',';
  out << "value,action,jump_indices,jumps\n";
  for (std::size_t n = 0; n < policy.actions.size(); ++n) {
    for (double c : grid.node(n)) out << num(c) << ',';
    const auto& jumps = policy.actions[n].jumps;
    out << num(values.values[n]) << ',' << (jumps.empty() ? "continue" : "jump") << ',';
    for (std::size_t j = 0; j < jumps.size(); ++j) out << (j ? ";" : "") << jumps[j];
    out << ',';
    for (std::size_t j = 0; j < jumps.size(); ++j) {
      if (j) out << ';';
      const auto& xi = spec.impulse_candidates[jumps[j]];
      for (std::size_t d = 0; d < xi.size(); ++d) out << (d ? " " : "") << num(xi[d]);
    }
    out << '\n';
  }
}

}  // namespace impulse
