#include "impulse/grid.hpp"

#include <algorithm>
#include <limits>

#include "impulse/problem.hpp"

namespace impulse {

void GridSpec::validate() const {
  if (nodes.empty()) throw ConfigError("grid: at least one axis is required");
  if (lower.size() != nodes.size() || upper.size() != nodes.size())
    throw ConfigError("grid: lower, upper and nodes must have the same length");
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]))
      throw ConfigError("grid: bounds must be finite");
    if (!(lower[a] < upper[a])) throw ConfigError("grid: lower must be < upper on every axis");
    if (nodes[a] < 2) throw ConfigError("grid: node counts must be >= 2");
  }
  if (time_steps < 1) throw ConfigError("grid: time_steps must be >= 1");
  if (node_count() > std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("grid: too many nodes");
}

std::size_t GridSpec::node_count() const {
  std::size_t n = 1;
  for (auto c : nodes) n *= c;
  return n;
}

double GridSpec::spacing(std::size_t axis) const {
  return (upper[axis] - lower[axis]) / static_cast<double>(nodes[axis] - 1);
}

std::vector<std::size_t> GridSpec::unravel(std::size_t flat) const {
  std::vector<std::size_t> idx(nodes.size());
  for (std::size_t a = nodes.size(); a-- > 0;) {
    idx[a] = flat % nodes[a];
    flat /= nodes[a];
  }
  return idx;
}

std::size_t GridSpec::ravel(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < nodes.size(); ++a) flat = flat * nodes[a] + index[a];
  return flat;
}

double GridSpec::coordinate(std::size_t axis, std::size_t i) const {
  if (i + 1 == nodes[axis]) return upper[axis];
  return lower[axis] + static_cast<double>(i) * spacing(axis);
}

Vector GridSpec::node(std::size_t flat) const {
  Vector x(nodes.size());
  for (std::size_t a = nodes.size(); a-- > 0;) {
    x[a] = coordinate(a, flat % nodes[a]);
    flat /= nodes[a];
  }
  return x;
}

bool GridSpec::on_boundary(std::size_t flat) const {
  for (std::size_t a = nodes.size(); a-- > 0;) {
    const std::size_t i = flat % nodes[a];
    if (i == 0 || i + 1 == nodes[a]) return true;
    flat /= nodes[a];
  }
  return false;
}

double GridSpec::dt(const ProblemSpec& spec) const {
  return (spec.T - spec.t0) / static_cast<double>(time_steps);
}

double GridSpec::time(const ProblemSpec& spec, std::size_t level) const {
  if (level == time_steps) return spec.T;
  return spec.t0 + static_cast<double>(level) * dt(spec);
}

double Stencil::apply(std::span<const double> values) const {
  if (index.size() == 1) return weight[0] == 1.0 ? values[index[0]] : weight[0] * values[index[0]];
  double acc = 0.0;
  for (std::size_t j = 0; j < index.size(); ++j) acc += weight[j] * values[index[j]];
  return acc;
}

Interpolator::Interpolator(const GridSpec& grid, InterpolationMode mode)
    : grid_(grid), mode_(mode), scratch_(grid.dimension()) {}

bool Interpolator::project(std::span<const double> point, Vector& projected) {
  bool clamped = false;
  for (std::size_t a = 0; a < grid_.dimension(); ++a) {
    double v = point[a];
    if (v < grid_.lower[a]) {
      v = grid_.lower[a];
      clamped = true;
    } else if (v > grid_.upper[a]) {
      v = grid_.upper[a];
      clamped = true;
    }
    projected[a] = v;
  }
  if (clamped) ++clamp_events_;
  return clamped;
}

std::size_t Interpolator::nearest(std::span<const double> point) {
  project(point, scratch_);
  std::size_t flat = 0;
  for (std::size_t a = 0; a < grid_.dimension(); ++a) {
    const double r = (scratch_[a] - grid_.lower[a]) / grid_.spacing(a);
    auto i = static_cast<std::size_t>(std::floor(r));
    if (r - static_cast<double>(i) > 0.5) ++i;
    i = std::min(i, grid_.nodes[a] - 1);
    flat = flat * grid_.nodes[a] + i;
  }
  return flat;
}

Stencil Interpolator::stencil(std::span<const double> point) {
  Stencil s;
  if (mode_ == InterpolationMode::NearestNode) {
    s.index.push_back(static_cast<std::uint32_t>(nearest(point)));
    s.weight.push_back(1.0);
    return s;
  }
  project(point, scratch_);
  const std::size_t dim = grid_.dimension();
  std::vector<std::size_t> base(dim);
  Vector frac(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    const double r = (scratch_[a] - grid_.lower[a]) / grid_.spacing(a);
    auto i = static_cast<std::size_t>(std::floor(r));
    i = std::min(i, grid_.nodes[a] - 2);
    base[a] = i;
    frac[a] = std::clamp(r - static_cast<double>(i), 0.0, 1.0);
  }
  const std::size_t corners = std::size_t{1} << dim;
  std::vector<std::size_t> idx(dim);
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const bool up = (c >> (dim - 1 - a)) & 1u;
      idx[a] = base[a] + (up ? 1 : 0);
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    s.index.push_back(static_cast<std::uint32_t>(grid_.ravel(idx)));
    s.weight.push_back(w);
  }
  return s;
}

double Interpolator::evaluate(std::span<const double> values, std::span<const double> point) {
  return stencil(point).apply(values);
}

}  // namespace impulse
