#include "impulse/problem.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace impulse {

std::string format_point(std::span<const double> x) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out << ", ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x[i]);
    out << buf;
  }
  out << ')';
  return out.str();
}

// ---------------------------------------------------------------------------
// ControlSet

ControlSet ControlSet::finite(std::vector<Vector> values) {
  if (values.empty()) throw ConfigError("control_set: finite list must be nonempty");
  const std::size_t dim = values.front().size();
  for (const auto& v : values)
    if (v.size() != dim || !all_finite(v))
      throw ConfigError("control_set: entries must be finite and share one dimension");
  return ControlSet{std::move(values)};
}

ControlSet ControlSet::box(Vector lower, Vector upper, std::vector<std::size_t> samples) {
  if (lower.empty() || lower.size() != upper.size() || samples.size() != lower.size())
    throw ConfigError("control_set: box bounds and sample counts must have equal nonzero length");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw ConfigError("control_set: box needs finite lower <= upper");
    if (samples[i] == 0) throw ConfigError("control_set: samples per axis must be >= 1");
  }
  return ControlSet{ControlBox{std::move(lower), std::move(upper), std::move(samples)}};
}

std::size_t ControlSet::dimension() const {
  if (const auto* list = std::get_if<std::vector<Vector>>(&set))
    return list->empty() ? 0 : list->front().size();
  return std::get<ControlBox>(set).lower.size();
}

std::vector<Vector> ControlSet::discretize(std::size_t samples_per_axis) const {
  if (const auto* list = std::get_if<std::vector<Vector>>(&set)) return *list;
  const auto& box = std::get<ControlBox>(set);
  const std::size_t dim = box.lower.size();
  std::vector<std::size_t> counts(dim);
  for (std::size_t a = 0; a < dim; ++a)
    counts[a] = samples_per_axis > 0 ? samples_per_axis : box.samples[a];

  auto axis_value = [&](std::size_t a, std::size_t i) {
    if (counts[a] == 1) return 0.5 * (box.lower[a] + box.upper[a]);
    if (i + 1 == counts[a]) return box.upper[a];
    const double h = (box.upper[a] - box.lower[a]) / static_cast<double>(counts[a] - 1);
    return box.lower[a] + static_cast<double>(i) * h;
  };

  std::size_t total = 1;
  for (auto c : counts) total *= c;
  std::vector<Vector> out;
  out.reserve(total);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vector u(dim);
    for (std::size_t a = 0; a < dim; ++a) u[a] = axis_value(a, idx[a]);
    out.push_back(std::move(u));
    for (std::size_t a = dim; a-- > 0;) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

bool ControlSet::contains(std::span<const double> control) const {
  constexpr double kSlack = 1e-12;
  if (const auto* list = std::get_if<std::vector<Vector>>(&set)) {
    return std::any_of(list->begin(), list->end(), [&](const Vector& v) {
      return v.size() == control.size() && distance(v, control) <= kSlack;
    });
  }
  const auto& box = std::get<ControlBox>(set);
  if (control.size() != box.lower.size()) return false;
  for (std::size_t a = 0; a < control.size(); ++a)
    if (control[a] < box.lower[a] - kSlack || control[a] > box.upper[a] + kSlack) return false;
  return true;
}

// ---------------------------------------------------------------------------
// ProblemSpec

std::string ProblemSpec::fingerprint() const {
  std::ostringstream out;
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << name << "|m=" << state_dim << "|t0=" << num(t0) << "|T=" << num(T);
  for (const auto& [k, v] : params) out << '|' << k << '=' << num(v);
  out << "|alpha=" << num(alpha) << "|C=" << num(growth_const) << "|L=" << num(lipschitz_const);
  out << "|xi=";
  for (const auto& xi : impulse_candidates) out << format_point(xi);
  out << "|K=";
  for (const auto& u : control_set.discretize()) out << format_point(u);
  return out.str();
}

// ---------------------------------------------------------------------------
// Validation

namespace {

constexpr std::array<unsigned, 48> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,
    59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131,
    137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223};

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

/// Randomly shifted Halton sequence (Cranley-Patterson rotation).
class ShiftedHalton {
 public:
  ShiftedHalton(std::size_t dims, std::uint64_t seed) : shift_(dims) {
    if (dims > kPrimes.size()) throw ConfigError("validation: state dimension too large for sampler");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& s : shift_) s = uni(rng);
  }
  double at(std::uint64_t index, std::size_t dim) const {
    double u = radical_inverse(index + 1, kPrimes[dim]) + shift_[dim];
    return u - std::floor(u);
  }

 private:
  Vector shift_;
};

bool within(double value, double bound, double slack) {
  return value <= bound * (1.0 + slack) + slack;
}

double ratio_of(double value, double bound) {
  if (bound > 0.0) return value / bound;
  return value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

void record(AssumptionCheck& check, bool ok, double ratio, double t, const Vector& x,
            const Vector& other) {
  check.worst_ratio = std::max(check.worst_ratio, ratio);
  if (!ok) {
    check.passed = false;
    if (check.violations.size() < 5) check.violations.push_back({t, x, other, ratio});
  }
}

void require_finite(double v, const char* what, double t, std::span<const double> x) {
  if (!std::isfinite(v)) {
    Vector w{t};
    w.insert(w.end(), x.begin(), x.end());
    throw ModelEvaluationError(std::string(what) + " at (t, x) = " + format_point(w), w);
  }
}

void require_finite(const Vector& v, const char* what, double t, std::span<const double> x) {
  for (double e : v) require_finite(e, what, t, x);
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no validation check named " + name);
}

ValidationReport validate_spec(const ProblemSpec& spec, std::size_t sample_budget,
                               const ValidationOptions& options) {
  if (sample_budget < 1) throw ConfigError("validate_spec: sample_budget must be >= 1");
  if (!spec.dynamics || !spec.jump_map || !spec.running_cost || !spec.impulse_cost ||
      !spec.terminal_cost)
    throw ConfigError("validate_spec: problem functions must all be set");

  const std::size_t m = spec.state_dim;
  const auto controls = spec.control_set.discretize();
  const auto& cands = spec.impulse_candidates;
  const double slack = options.slack;

  ValidationReport report;
  report.seed = options.seed;
  report.sample_budget = sample_budget;
  report.radius = options.radius;
  for (const char* name : {"impulse_cost_lower_bound", "growth_dynamics", "growth_costs", "lipschitz"}) {
    report.checks.emplace_back();
    report.checks.back().name = name;
  }
  auto& cost_lb = report.checks[0];
  auto& growth_dyn = report.checks[1];
  auto& growth_cost = report.checks[2];
  auto& lipschitz = report.checks[3];

  ShiftedHalton halton(2 * m + 3, options.seed);
  Vector x(m), y(m);
  for (std::uint64_t s = 0; s < sample_budget; ++s) {
    const double t = spec.t0 + halton.at(s, 0) * (spec.T - spec.t0);
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = options.radius * (2.0 * halton.at(s, 1 + i) - 1.0);
      y[i] = options.radius * (2.0 * halton.at(s, 1 + m + i) - 1.0);
    }
    const auto pick = [&](std::size_t dim, std::size_t n) {
      return std::min(n - 1, static_cast<std::size_t>(halton.at(s, dim) * static_cast<double>(n)));
    };
    const Vector& u = controls[pick(2 * m + 1, controls.size())];
    const Vector* xi = cands.empty() ? nullptr : &cands[pick(2 * m + 2, cands.size())];

    const Vector fx = spec.dynamics(t, x, u);
    require_finite(fx, "dynamics", t, x);
    const Vector fy = spec.dynamics(t, y, u);
    require_finite(fy, "dynamics", t, y);
    const double psi = spec.running_cost(t, x, u);
    require_finite(psi, "running cost", t, x);
    const double G = spec.terminal_cost(x);
    require_finite(G, "terminal cost", t, x);

    double g_norm = 0.0, g_diff = 0.0, cost = 0.0;
    if (xi) {
      const Vector gx = spec.jump_map(t, x, *xi);
      require_finite(gx, "jump map", t, x);
      const Vector gy = spec.jump_map(t, y, *xi);
      require_finite(gy, "jump map", t, y);
      cost = spec.impulse_cost(t, x, *xi);
      require_finite(cost, "impulse cost", t, x);
      g_norm = norm(gx);
      g_diff = distance(gx, gy);

      const bool ok = spec.alpha > 0.0 && within(spec.alpha, cost, slack);
      record(cost_lb, ok,
             spec.alpha > 0.0 ? ratio_of(spec.alpha, cost) : std::numeric_limits<double>::infinity(),
             t, x, *xi);
    } else if (!(spec.alpha > 0.0)) {
      record(cost_lb, false, std::numeric_limits<double>::infinity(), t, x, {});
    }

    const double bound = spec.growth_const * (1.0 + norm(x));
    const double dyn = norm(fx) + g_norm;
    record(growth_dyn, within(dyn, bound, slack), ratio_of(dyn, bound), t, x, u);
    const double costs = std::max({std::abs(psi), std::abs(cost), std::abs(G)});
    record(growth_cost, within(costs, bound, slack), ratio_of(costs, bound), t, x, u);

    const double dx = distance(x, y);
    if (dx > 0.0) {
      const double quotient = (distance(fx, fy) + g_diff) / dx;
      record(lipschitz, within(quotient, spec.lipschitz_const, slack),
             ratio_of(quotient, spec.lipschitz_const), t, x, y);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Built-in problems

std::vector<Vector> symmetric_impulses(double step, double max_abs) {
  std::vector<Vector> out;
  if (!(step > 0.0) || max_abs < step) return out;
  const auto n = static_cast<std::size_t>(std::floor(max_abs / step + 1e-9));
  for (std::size_t k = n; k >= 1; --k) out.push_back({-static_cast<double>(k) * step});
  for (std::size_t k = 1; k <= n; ++k) out.push_back({static_cast<double>(k) * step});
  return out;
}

std::vector<std::string> builtin_problem_names() {
  return {kNullFlow, kAdversarialDrift, kCashManagement};
}

namespace {

struct ParamReader {
  const std::string& problem;
  std::map<std::string, double> values;
  std::set<std::string> allowed;

  double required(const std::string& key) {
    allowed.insert(key);
    auto it = values.find(key);
    if (it == values.end())
      throw ConfigError(problem + ": missing required parameter '" + key + "'");
    return it->second;
  }
  double optional(const std::string& key, double fallback) {
    allowed.insert(key);
    auto [it, inserted] = values.try_emplace(key, fallback);
    return it->second;
  }
  void finish() const {
    for (const auto& [k, v] : values) {
      if (!allowed.count(k)) throw ConfigError(problem + ": unknown parameter '" + k + "'");
      if (!std::isfinite(v)) throw ConfigError(problem + ": parameter '" + k + "' is not finite");
    }
  }
};

double max_abs_impulse(const std::vector<Vector>& cands) {
  double out = 0.0;
  for (const auto& xi : cands) out = std::max(out, norm(xi));
  return out;
}

Vector abs_displacement(double, std::span<const double>, std::span<const double> xi) {
  return Vector(xi.begin(), xi.end());
}

}  // namespace

ProblemSpec builtin_problem(const std::string& name, const ProblemParams& params) {
  ParamReader p{name, params.values, {}};
  ProblemSpec spec;
  spec.name = name;
  spec.state_dim = 1;
  spec.t0 = p.optional("t0", 0.0);
  spec.T = p.optional("T", 1.0);
  const double xi_step = p.optional("xi_step", 0.5);
  const double xi_max = p.optional("xi_max", 2.0);
  spec.impulse_candidates =
      params.impulse_candidates.empty() ? symmetric_impulses(xi_step, xi_max) : params.impulse_candidates;
  for (const auto& xi : spec.impulse_candidates) {
    if (xi.size() != 1 || !all_finite(xi)) throw ConfigError(name + ": impulses must be finite scalars");
    if (xi[0] == 0.0) throw ConfigError(name + ": impulse candidates must be nonzero");
  }
  const double xi_bound = max_abs_impulse(spec.impulse_candidates);
  spec.jump_map = abs_displacement;

  double growth = 0.0;
  if (name == kNullFlow) {
    const double alpha = p.required("alpha");
    spec.alpha = alpha;
    spec.control_set = ControlSet::finite({{0.0}});
    spec.dynamics = [](double, std::span<const double>, std::span<const double>) { return Vector{0.0}; };
    spec.running_cost = [](double, std::span<const double>, std::span<const double>) { return 0.0; };
    spec.impulse_cost = [alpha](double, std::span<const double>, std::span<const double>) { return alpha; };
    spec.terminal_cost = [](std::span<const double> x) { return std::abs(x[0]); };
    growth = std::max({1.0, xi_bound, std::abs(alpha)});
  } else if (name == kAdversarialDrift) {
    const double alpha = p.required("alpha");
    const double beta = p.required("beta");
    const auto samples = static_cast<std::size_t>(p.optional("control_samples", 3.0));
    spec.alpha = alpha;
    spec.control_set = ControlSet::box({-1.0}, {1.0}, {std::max<std::size_t>(samples, 1)});
    spec.dynamics = [](double, std::span<const double>, std::span<const double> u) { return Vector{u[0]}; };
    spec.running_cost = [](double, std::span<const double>, std::span<const double>) { return 0.0; };
    spec.impulse_cost = [alpha, beta](double, std::span<const double>, std::span<const double> xi) {
      return alpha + beta * std::abs(xi[0]);
    };
    spec.terminal_cost = [](std::span<const double> x) { return std::abs(x[0]); };
    growth = std::max({1.0 + xi_bound, std::abs(alpha) + std::abs(beta) * xi_bound, 1.0});
  } else if (name == kCashManagement) {
    const double kappa = p.required("kappa");
    const double k = p.required("k");
    const double mu = p.required("mu");
    const double h = p.required("h");
    spec.alpha = kappa;
    spec.control_set = ControlSet::finite({{0.0}});
    spec.dynamics = [mu](double, std::span<const double>, std::span<const double>) { return Vector{mu}; };
    spec.running_cost = [h](double, std::span<const double> x, std::span<const double>) {
      return h * std::abs(x[0]);
    };
    spec.impulse_cost = [kappa, k](double, std::span<const double>, std::span<const double> xi) {
      return kappa + k * std::abs(xi[0]);
    };
    spec.terminal_cost = [h](std::span<const double> x) { return h * std::abs(x[0]); };
    growth = std::max({std::abs(mu) + xi_bound, std::abs(h), std::abs(kappa) + std::abs(k) * xi_bound});
  } else {
    throw ConfigError("unknown built-in problem '" + name + "'");
  }
  spec.growth_const = p.optional("growth_const", growth);
  spec.lipschitz_const = p.optional("lipschitz_const", 0.0);
  p.finish();
  if (!(spec.t0 >= 0.0 && spec.t0 < spec.T)) throw ConfigError(name + ": need 0 <= t0 < T");
  spec.params = p.values;
  return spec;
}

// ---------------------------------------------------------------------------
// Coefficient-table problems

namespace {

double frobenius(const std::vector<Vector>& m) {
  double s = 0.0;
  for (const auto& row : m)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

void check_square(const std::vector<Vector>& m, std::size_t dim, const char* what) {
  if (m.empty()) return;
  if (m.size() != dim) throw ConfigError(std::string("custom.") + what + ": needs m rows");
  for (const auto& row : m)
    if (row.size() != dim) throw ConfigError(std::string("custom.") + what + ": needs m columns");
}

void mat_vec_add(const std::vector<Vector>& m, std::span<const double> x, Vector& out) {
  if (m.empty()) return;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) out[i] += m[i][j] * x[j];
}

}  // namespace

ProblemSpec custom_problem(const CoefficientTables& tables) {
  const std::size_t m = tables.state_dim;
  if (m == 0) throw ConfigError("custom.state_dim: must be >= 1");
  check_square(tables.A, m, "A");
  check_square(tables.J, m, "J");
  const std::size_t control_dim = tables.control_set.dimension();
  if (!tables.B.empty()) {
    if (tables.B.size() != m) throw ConfigError("custom.B: needs m rows");
    for (const auto& row : tables.B)
      if (row.size() != control_dim) throw ConfigError("custom.B: columns must match control dimension");
  }
  if (!tables.c.empty() && tables.c.size() != m) throw ConfigError("custom.c: needs m entries");
  if (!tables.center.empty() && tables.center.size() != m) throw ConfigError("custom.center: needs m entries");
  for (const auto& xi : tables.impulse_candidates) {
    if (xi.size() != m) throw ConfigError("custom.impulses: each impulse needs m entries");
    if (norm(xi) == 0.0) throw ConfigError("custom.impulses: impulse candidates must be nonzero");
  }
  if (!(tables.t0 >= 0.0 && tables.t0 < tables.T)) throw ConfigError("custom: need 0 <= t0 < T");

  ProblemSpec spec;
  spec.name = "custom";
  spec.state_dim = m;
  spec.t0 = tables.t0;
  spec.T = tables.T;
  spec.control_set = tables.control_set;
  spec.impulse_candidates = tables.impulse_candidates;
  spec.alpha = tables.alpha;

  const auto A = tables.A, B = tables.B, J = tables.J;
  const Vector c = tables.c.empty() ? Vector(m, 0.0) : tables.c;
  const Vector center = tables.center.empty() ? Vector(m, 0.0) : tables.center;
  spec.dynamics = [A, B, c](double, std::span<const double> x, std::span<const double> u) {
    Vector out = c;
    mat_vec_add(A, x, out);
    mat_vec_add(B, u, out);
    return out;
  };
  spec.jump_map = [J](double, std::span<const double> x, std::span<const double> xi) {
    Vector out(xi.begin(), xi.end());
    mat_vec_add(J, x, out);
    return out;
  };
  const double p0 = tables.p0, p1 = tables.p1, p2 = tables.p2;
  spec.running_cost = [p0, p1, p2](double, std::span<const double> x, std::span<const double> u) {
    return p0 + p1 * norm(x) + p2 * norm(u);
  };
  const double k0 = tables.k0, k1 = tables.k1, k2 = tables.k2;
  spec.impulse_cost = [k0, k1, k2](double, std::span<const double> x, std::span<const double> xi) {
    return k0 + k1 * norm(xi) + k2 * norm(x);
  };
  const double g0 = tables.g0, g1 = tables.g1;
  spec.terminal_cost = [g0, g1, center](std::span<const double> x) { return g0 + g1 * distance(x, center); };

  double u_max = 0.0;
  for (const auto& u : tables.control_set.discretize()) u_max = std::max(u_max, norm(u));
  const double xi_max = max_abs_impulse(tables.impulse_candidates);
  const double a = frobenius(A), b = frobenius(B), j = frobenius(J);
  const double dyn = std::max(a + j, b * u_max + norm(c) + xi_max);
  const double costs = std::max({std::abs(p0) + std::abs(p2) * u_max, std::abs(p1),
                                 std::abs(k0) + std::abs(k1) * xi_max, std::abs(k2),
                                 std::abs(g0) + std::abs(g1) * norm(center), std::abs(g1)});
  spec.growth_const = tables.growth_const.value_or(std::max(dyn, costs));
  spec.lipschitz_const = tables.lipschitz_const.value_or(a + j);

  spec.params = {{"p0", p0}, {"p1", p1}, {"p2", p2}, {"k0", k0}, {"k1", k1},
                 {"k2", k2}, {"g0", g0}, {"g1", g1}};
  auto flatten = [&](const std::string& key, const std::vector<Vector>& mat) {
    for (std::size_t r = 0; r < mat.size(); ++r)
      for (std::size_t col = 0; col < mat[r].size(); ++col)
        spec.params[key + "[" + std::to_string(r) + "][" + std::to_string(col) + "]"] = mat[r][col];
  };
  flatten("A", A);
  flatten("B", B);
  flatten("J", J);
  flatten("c", {c});
  flatten("center", {center});
  return spec;
}

}  // namespace impulse
