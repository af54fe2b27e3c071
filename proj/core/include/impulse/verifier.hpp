#pragma once

#include <iosfwd>
#include <vector>

#include "impulse/solver.hpp"

namespace impulse {

struct NodeViolation {
  std::size_t level = 0;
  std::size_t node = 0;
  double amount = 0.0;  // how far the bound is exceeded
};

struct ResidualReport {
  // qvi_residual section. residual[level][node] for levels 0..K-1; boundary
  // nodes hold NaN and are summarized separately.
  std::vector<std::vector<double>> residual;
  double max_norm = 0.0;
  double boundary_max_norm = 0.0;
  double quantile_50 = 0.0;
  double quantile_90 = 0.0;
  double quantile_99 = 0.0;
  std::size_t worst_level = 0;
  std::size_t worst_node = 0;

  // check_structural section.
  std::vector<NodeViolation> obstacle_violations;  // v > N[v] + fp_tol
  std::vector<NodeViolation> growth_violations;    // outside the envelope
  double lower_bound_at_t0 = 0.0;
  double growth_const_v = 0.0;
  double terminal_gap = 0.0;    // max |v(t_{K-1}) - G1|
  double terminal_bound = 0.0;  // L_spec * dt
  double terminal_lipschitz = 0.0;  // L_spec
  bool terminal_ok = true;

  std::size_t clamp_events = 0;
  bool residual_computed = false;
  bool structural_computed = false;

  bool structural_ok() const {
    return obstacle_violations.empty() && growth_violations.empty() && terminal_ok;
  }
};

/// Per interior node and level k < K:
///   max{ min_u [ -D_t v - D_x v . f - psi ], v - N[v] }
/// with a forward difference in time and central differences in space.
ResidualReport qvi_residual(const ValueField& field, const ProblemSpec& spec);

/// Obstacle inequality, lower bound / linear-growth envelope, and terminal
/// limit. Fills the structural section of `report` (a fresh one if null).
ResidualReport check_structural(const ValueField& field, const ProblemSpec& spec,
                                ResidualReport report = {});

/// Upper-envelope constant C_v with v(t, x) <= C_v (1 + |x|).
double growth_envelope_constant(const ProblemSpec& spec);

/// Lower bound (T - t) min psi + min G over the grid's nodes and controls.
double value_lower_bound(const ProblemSpec& spec, const GridSpec& grid,
                         const SolveOptions& options, double t);

/// L_spec with |v(t_{K-1}) - G1| <= L_spec dt for the discrete recursion.
double terminal_lipschitz_bound(const ProblemSpec& spec, const GridSpec& grid,
                                const SolveOptions& options, const ValueSlice& g1);

void write_residual_csv(std::ostream& out, const ValueField& field, const ResidualReport& report);

}  // namespace impulse
