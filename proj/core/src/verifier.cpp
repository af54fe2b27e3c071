#include "impulse/verifier.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

namespace impulse {

namespace {

void check_field(const ValueField& field, const ProblemSpec& spec) {
  const GridSpec& grid = field.grid;
  grid.validate();
  if (grid.dimension() != spec.state_dim) throw ConfigError("verifier: grid dimension does not match the problem");
  if (field.slices.size() != grid.time_steps + 1)
    throw ConfigError("verifier: field has the wrong number of slices");
  for (const auto& s : field.slices)
    if (s.values.size() != grid.node_count()) throw ConfigError("verifier: slice size does not match the grid");
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  const auto pos = static_cast<std::size_t>(q * static_cast<double>(values.size() - 1));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(pos), values.end());
  return values[pos];
}

/// Spatial gradient at `node`; central in the interior, one-sided on faces.
Vector gradient(const GridSpec& grid, std::span<const double> v, std::size_t node) {
  const auto idx = grid.unravel(node);
  Vector grad(grid.dimension());
  std::size_t stride = 1;
  std::vector<std::size_t> strides(grid.dimension());
  for (std::size_t a = grid.dimension(); a-- > 0;) {
    strides[a] = stride;
    stride *= grid.nodes[a];
  }
  for (std::size_t a = 0; a < grid.dimension(); ++a) {
    const double h = grid.spacing(a);
    const std::size_t s = strides[a];
    if (idx[a] == 0)
      grad[a] = (v[node + s] - v[node]) / h;
    else if (idx[a] + 1 == grid.nodes[a])
      grad[a] = (v[node] - v[node - s]) / h;
    else
      grad[a] = (v[node + s] - v[node - s]) / (2.0 * h);
  }
  return grad;
}

}  // namespace

ResidualReport qvi_residual(const ValueField& field, const ProblemSpec& spec) {
  check_field(field, spec);
  const GridSpec& grid = field.grid;
  const auto controls = spec.control_set.discretize(field.options.control_samples);
  const double dt = grid.dt(spec);
  const std::size_t K = grid.time_steps;

  ResidualReport report;
  report.residual_computed = true;
  report.clamp_events = field.clamp_events;
  report.residual.assign(K, std::vector<double>(grid.node_count(), std::numeric_limits<double>::quiet_NaN()));

  std::vector<double> magnitudes;
  magnitudes.reserve(K * grid.node_count());
  for (std::size_t k = 0; k < K; ++k) {
    const double t = grid.time(spec, k);
    const auto& v = field.slices[k].values;
    const auto& v_next = field.slices[k + 1].values;
    const InterventionStencil stencil(spec, grid, t, {field.options.interpolation, 1.0, field.options.fp_tol});
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const Vector x = grid.node(n);
      const Vector grad = gradient(grid, v, n);
      const double dv_dt = (v_next[n] - v[n]) / dt;
      double hamiltonian = std::numeric_limits<double>::infinity();
      for (const auto& u : controls) {
        const Vector f = spec.dynamics(t, x, u);
        double transport = 0.0;
        for (std::size_t d = 0; d < f.size(); ++d) transport += grad[d] * f[d];
        hamiltonian = std::min(hamiltonian, -dv_dt - transport - spec.running_cost(t, x, u));
      }
      double obstacle = -std::numeric_limits<double>::infinity();
      if (stencil.candidates() > 0) obstacle = v[n] - stencil.best(v, n).first;
      const double r = std::max(hamiltonian, obstacle);

      if (grid.on_boundary(n)) {
        report.boundary_max_norm = std::max(report.boundary_max_norm, std::abs(r));
        continue;
      }
      report.residual[k][n] = r;
      magnitudes.push_back(std::abs(r));
      if (std::abs(r) > report.max_norm) {
        report.max_norm = std::abs(r);
        report.worst_level = k;
        report.worst_node = n;
      }
    }
  }
  report.quantile_50 = quantile(magnitudes, 0.50);
  report.quantile_90 = quantile(magnitudes, 0.90);
  report.quantile_99 = quantile(magnitudes, 0.99);
  return report;
}

double growth_envelope_constant(const ProblemSpec& spec) {
  const double C = spec.growth_const;
  const double horizon = spec.T - spec.t0;
  return C * (1.0 + horizon) * std::exp(C * horizon);
}

namespace {

struct CostExtremes {
  double psi_min = std::numeric_limits<double>::infinity();
  double g_min = std::numeric_limits<double>::infinity();
};

CostExtremes cost_extremes(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options) {
  CostExtremes out;
  const auto controls = spec.control_set.discretize(options.control_samples);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Vector x = grid.node(n);
    out.g_min = std::min(out.g_min, spec.terminal_cost(x));
    for (std::size_t k = 0; k < grid.time_steps; ++k)
      for (const auto& u : controls)
        out.psi_min = std::min(out.psi_min, spec.running_cost(grid.time(spec, k), x, u));
  }
  return out;
}

}  // namespace

double value_lower_bound(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options,
                         double t) {
  const CostExtremes e = cost_extremes(spec, grid, options);
  return (spec.T - t) * e.psi_min + e.g_min;
}

double terminal_lipschitz_bound(const ProblemSpec& spec, const GridSpec& grid, const SolveOptions& options,
                                const ValueSlice& g1) {
  const std::size_t K = grid.time_steps;
  const double t = grid.time(spec, K - 1);
  const double dt = grid.dt(spec);
  const auto controls = spec.control_set.discretize(options.control_samples);

  // Lipschitz constant of the piecewise-multilinear interpolant of G1.
  double lip_sq = 0.0;
  for (std::size_t a = 0; a < grid.dimension(); ++a) {
    double slope = 0.0;
    std::size_t stride = 1;
    for (std::size_t b = a + 1; b < grid.dimension(); ++b) stride *= grid.nodes[b];
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      if (grid.unravel(n)[a] + 1 == grid.nodes[a]) continue;
      slope = std::max(slope, std::abs(g1.values[n + stride] - g1.values[n]) / grid.spacing(a));
    }
    lip_sq += slope * slope;
  }
  const double lip_g1 = std::sqrt(lip_sq);

  double psi_max = 0.0, f_max = 0.0, cost_shift = 0.0, jump_shift = 0.0;
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Vector x = grid.node(n);
    for (const auto& u : controls) {
      psi_max = std::max(psi_max, std::abs(spec.running_cost(t, x, u)));
      f_max = std::max(f_max, norm(spec.dynamics(t, x, u)));
    }
    for (const auto& xi : spec.impulse_candidates) {
      cost_shift = std::max(cost_shift, std::abs(spec.impulse_cost(t, x, xi) - spec.impulse_cost(spec.T, x, xi)));
      jump_shift = std::max(jump_shift, distance(spec.jump_map(t, x, xi), spec.jump_map(spec.T, x, xi)));
    }
  }
  return psi_max + lip_g1 * f_max + (cost_shift + lip_g1 * jump_shift) / dt;
}

ResidualReport check_structural(const ValueField& field, const ProblemSpec& spec, ResidualReport report) {
  check_field(field, spec);
  const GridSpec& grid = field.grid;
  const std::size_t K = grid.time_steps;
  const double tol = field.options.fp_tol;
  report.structural_computed = true;
  report.clamp_events = field.clamp_events;
  report.obstacle_violations.clear();
  report.growth_violations.clear();

  // Obstacle inequality v <= N[v] at every level.
  for (std::size_t k = 0; k <= K; ++k) {
    const auto& v = field.slices[k].values;
    const InterventionStencil stencil(spec, grid, grid.time(spec, k), {field.options.interpolation, 1.0, tol});
    if (stencil.candidates() == 0) break;
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const double excess = v[n] - stencil.best(v, n).first;
      if (excess > tol) report.obstacle_violations.push_back({k, n, excess});
    }
  }

  // Lower bound and linear-growth envelope.
  const CostExtremes e = cost_extremes(spec, grid, field.options);
  report.growth_const_v = growth_envelope_constant(spec);
  report.lower_bound_at_t0 = (spec.T - spec.t0) * e.psi_min + e.g_min;
  for (std::size_t k = 0; k <= K; ++k) {
    const double lower = (spec.T - grid.time(spec, k)) * e.psi_min + e.g_min;
    const double slack = 1e-12 * std::max(1.0, std::abs(lower));
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const double v = field.slices[k].values[n];
      const double upper = report.growth_const_v * (1.0 + norm(grid.node(n)));
      if (v < lower - slack) report.growth_violations.push_back({k, n, lower - v});
      else if (v > upper + 1e-12 * std::max(1.0, upper)) report.growth_violations.push_back({k, n, v - upper});
    }
  }

  // Terminal limit.
  const auto& last = field.slices[K - 1].values;
  const auto& g1 = field.slices[K].values;
  report.terminal_gap = 0.0;
  for (std::size_t n = 0; n < grid.node_count(); ++n)
    report.terminal_gap = std::max(report.terminal_gap, std::abs(last[n] - g1[n]));
  report.terminal_lipschitz = terminal_lipschitz_bound(spec, grid, field.options, field.slices[K]);
  report.terminal_bound = report.terminal_lipschitz * grid.dt(spec);
  report.terminal_ok = report.terminal_gap <= report.terminal_bound + 1e-9;
  return report;
}

void write_residual_csv(std::ostream& out, const ValueField& field, const ResidualReport& report) {
  const GridSpec& grid = field.grid;
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "level,t";
  for (std::size_t d = 0; d < grid.dimension(); ++d) out << ",x" << d;
  out << ",residual\n";
  for (std::size_t k = 0; k < report.residual.size(); ++k) {
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const double r = report.residual[k][n];
      if (std::isnan(r)) continue;
      out << k << ',' << num(field.slices[k].time);
      for (double c : grid.node(n)) out << ',' << num(c);
      out << ',' << num(r) << '\n';
    }
  }
}

}  // namespace impulse
