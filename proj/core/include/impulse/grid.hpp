#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "impulse/common.hpp"

namespace impulse {

struct ProblemSpec;

/// Tensor-product state box plus a uniform time partition of [t0, T].
struct GridSpec {
  Vector lower;
  Vector upper;
  std::vector<std::size_t> nodes;  // per axis, >= 2
  std::size_t time_steps = 1;      // K_steps >= 1

  /// Throws ConfigError naming the offending field.
  void validate() const;

  std::size_t dimension() const { return nodes.size(); }
  std::size_t node_count() const;
  double spacing(std::size_t axis) const;

  /// Row-major: axis 0 varies slowest.
  std::vector<std::size_t> unravel(std::size_t flat) const;
  std::size_t ravel(std::span<const std::size_t> index) const;
  Vector node(std::size_t flat) const;
  double coordinate(std::size_t axis, std::size_t i) const;

  /// Nodes with at least one index on the box faces.
  bool on_boundary(std::size_t flat) const;

  double dt(const ProblemSpec& spec) const;
  double time(const ProblemSpec& spec, std::size_t level) const;
};

/// Node values of one time level.
struct ValueSlice {
  double time = 0.0;
  std::vector<double> values;
};

enum class InterpolationMode {
  Multilinear,  // tensor-linear, targets projected onto the box
  NearestNode,  // nearest node of the projected target, ties to the lower index
};

/// Precomputed read pattern: value = sum_j weight_j * slice[index_j].
struct Stencil {
  std::vector<std::uint32_t> index;
  std::vector<double> weight;

  double apply(std::span<const double> values) const;
};

/// Builds stencils and counts targets that left the box.
class Interpolator {
 public:
  Interpolator(const GridSpec& grid, InterpolationMode mode);

  /// Stencil for `point`, which is projected onto the box first.
  Stencil stencil(std::span<const double> point);
  double evaluate(std::span<const double> values, std::span<const double> point);
  /// Flat index of the nearest node to the projected point (ties to lower).
  std::size_t nearest(std::span<const double> point);

  std::size_t clamp_events() const { return clamp_events_; }
  InterpolationMode mode() const { return mode_; }

 private:
  bool project(std::span<const double> point, Vector& projected);

  const GridSpec& grid_;
  InterpolationMode mode_;
  std::size_t clamp_events_ = 0;
  Vector scratch_;
};

/// Samples a function of the state on every node.
template <typename F>
ValueSlice sample_on_grid(const GridSpec& grid, double time, F&& fn) {
  ValueSlice slice;
  slice.time = time;
  slice.values.resize(grid.node_count());
  for (std::size_t n = 0; n < slice.values.size(); ++n) {
    const Vector x = grid.node(n);
    slice.values[n] = fn(std::span<const double>(x));
  }
  return slice;
}

}  // namespace impulse
