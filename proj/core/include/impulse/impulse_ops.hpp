#pragma once

#include <iosfwd>
#include <vector>

#include "impulse/grid.hpp"
#include "impulse/problem.hpp"

namespace impulse {

inline constexpr double kDefaultFixedPointTol = 1e-12;

/// Per-node decision; an empty jump list means Continue. Jumps are indices
/// into ProblemSpec::impulse_candidates, applied in order.
struct NodeAction {
  std::vector<std::size_t> jumps;
  bool is_continue() const { return jumps.empty(); }
};

struct PolicySlice {
  double time = 0.0;
  std::vector<NodeAction> actions;
};

struct InterventionOptions {
  InterpolationMode interpolation = InterpolationMode::Multilinear;
  /// Multiplies every impulse cost; exp(t) in the transformed formulation.
  double cost_scale = 1.0;
  double fp_tol = kDefaultFixedPointTol;
};

struct InterventionStats {
  std::size_t clamp_events = 0;
};

/// Jump targets and costs for every (node, candidate) at one time; reusable
/// across fixed-point sweeps because they do not depend on the slice.
class InterventionStencil {
 public:
  InterventionStencil(const ProblemSpec& spec, const GridSpec& grid, double t,
                      const InterventionOptions& options);

  std::size_t candidates() const { return candidates_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t clamp_events() const { return clamp_events_; }

  /// min over candidates of slice(target) + cost at `node`; ties go to the
  /// smallest candidate index. Returns {value, index}; index is npos when
  /// there are no candidates (value is +inf).
  std::pair<double, std::size_t> best(std::span<const double> slice, std::size_t node) const;

  std::size_t nearest_target(std::size_t node, std::size_t candidate) const {
    return nearest_[node * candidates_ + candidate];
  }

 private:
  std::size_t nodes_ = 0;
  std::size_t candidates_ = 0;
  std::vector<Stencil> stencils_;
  std::vector<double> costs_;
  std::vector<std::size_t> nearest_;
  std::size_t clamp_events_ = 0;
};

/// One application of the intervention operator:
/// N[w](x) = min over candidates of w(x + g(t, x, xi)) + C(t, x, xi).
ValueSlice apply_N(const ValueSlice& slice, double t, const ProblemSpec& spec,
                   const GridSpec& grid, const InterventionOptions& options = {},
                   InterventionStats* stats = nullptr);

/// floor(growth_const (1 + |x|) / alpha), at least 1.
std::size_t max_jump_bound(const ProblemSpec& spec, std::span<const double> x);

struct FixedPointResult {
  ValueSlice values;
  PolicySlice policy;
  std::size_t iterations = 0;
  std::size_t clamp_events = 0;
};

/// Iterates w <- min(w, N[w]) (an update counts only when it improves by more
/// than fp_tol) until nothing improves or the largest nodal jump cap is
/// reached. Node x keeps the value built from chains of at most
/// max_jump_bound(x) jumps, so its realized jump list never exceeds that cap.
FixedPointResult impulse_fixed_point(const ValueSlice& slice, double t, const ProblemSpec& spec,
                                     const GridSpec& grid,
                                     const InterventionOptions& options = {});

/// Fixed point of the sampled terminal cost at t = T (zero-jump option kept).
FixedPointResult terminal_value_G1(const ProblemSpec& spec, const GridSpec& grid,
                                   const InterventionOptions& options = {});

/// CSV rows: node coordinates, action, jump list, value.
void write_policy_csv(std::ostream& out, const ProblemSpec& spec, const GridSpec& grid,
                      const PolicySlice& policy, const ValueSlice& values);

}  // namespace impulse
