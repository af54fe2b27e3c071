#include "impulse/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef IMPULSE_VERSION
#define IMPULSE_VERSION "0.0.0"
#endif

namespace impulse {

const char* version() { return IMPULSE_VERSION; }

namespace io {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ControlSet control_set_from_json(const Json& doc, const std::string& path) {
  Section s(doc, path);
  ControlSet out;
  if (s.has("finite") == s.has("box")) throw ConfigError("config: '" + path + "' needs exactly one of 'finite' or 'box'");
  if (s.has("finite")) {
    out = ControlSet::finite(s.matrix("finite"));
  } else {
    Section box = s.child("box");
    const Vector lower = box.vector("lower");
    const Vector upper = box.vector("upper");
    std::vector<std::size_t> samples;
    const Json& raw = box.at("samples");
    if (raw.is_array()) {
      for (std::size_t i = 0; i < raw.size(); ++i)
        samples.push_back(Section::as_count(raw[i], box.field("samples")));
    } else {
      samples.assign(lower.size(), Section::as_count(raw, box.field("samples")));
    }
    box.finish();
    out = ControlSet::box(lower, upper, samples);
  }
  s.finish();
  return out;
}

Json witness_to_json(const ValidationWitness& w) {
  return {{"t", w.t}, {"x", w.x}, {"other", w.other}, {"ratio", w.ratio}};
}

Json violations_to_json(const std::vector<NodeViolation>& list, std::size_t limit) {
  Json out = Json::array();
  for (std::size_t i = 0; i < list.size() && i < limit; ++i)
    out.push_back({{"level", list[i].level}, {"node", list[i].node}, {"amount", list[i].amount}});
  return out;
}

double parse_number(const std::string& cell, const std::string& where) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size()) throw ConfigError(where + ": malformed number '" + cell + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string slice_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%04zu.csv", k);
  return buf;
}

}  // namespace

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": JSON syntax error");
  }
}

Json read_json_file(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

ProblemSpec problem_from_json(const Json& section) {
  Section s(section, "problem");
  if (s.has("builtin") == s.has("custom"))
    throw ConfigError("config: 'problem' needs exactly one of 'builtin' or 'custom'");

  if (s.has("builtin")) {
    const std::string name = s.text("builtin");
    ProblemParams params;
    if (s.has("params")) {
      const Json& raw = s.at("params");
      if (!raw.is_object()) throw ConfigError("config: 'problem.params' must be an object");
      for (const auto& [key, value] : raw.items())
        params.values[key] = Section::as_number(value, "problem.params." + key);
    }
    if (s.has("impulses")) params.impulse_candidates = s.matrix("impulses");
    s.finish();
    const auto names = builtin_problem_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ConfigError("config: unknown builtin problem '" + name + "'");
    return builtin_problem(name, params);
  }

  Section c = s.child("custom");
  s.finish();
  CoefficientTables t;
  t.state_dim = c.count("state_dim", 1);
  t.t0 = c.number("t0", 0.0);
  t.T = c.number("T", 1.0);
  if (c.has("A")) t.A = c.matrix("A");
  if (c.has("B")) t.B = c.matrix("B");
  if (c.has("J")) t.J = c.matrix("J");
  if (c.has("c")) t.c = c.vector("c");
  t.p0 = c.number("p0", 0.0);
  t.p1 = c.number("p1", 0.0);
  t.p2 = c.number("p2", 0.0);
  t.k0 = c.number("k0", 0.0);
  t.k1 = c.number("k1", 0.0);
  t.k2 = c.number("k2", 0.0);
  t.g0 = c.number("g0", 0.0);
  t.g1 = c.number("g1", 0.0);
  if (c.has("center")) t.center = c.vector("center");
  t.control_set = control_set_from_json(c.at("controls"), c.field("controls"));
  t.impulse_candidates = c.matrix("impulses");
  t.alpha = c.number("alpha");
  if (c.has("growth_const")) t.growth_const = c.number("growth_const");
  if (c.has("lipschitz_const")) t.lipschitz_const = c.number("lipschitz_const");
  c.finish();
  return custom_problem(t);
}

GridSpec grid_from_json(const Json& section) {
  Section s(section, "grid");
  GridSpec g;
  g.lower = s.vector("lower");
  g.upper = s.vector("upper");
  const Json& nodes = s.at("nodes");
  if (nodes.is_array()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) g.nodes.push_back(Section::as_count(nodes[i], "grid.nodes"));
  } else {
    g.nodes.assign(g.lower.size(), Section::as_count(nodes, "grid.nodes"));
  }
  g.time_steps = s.count("time_steps");
  s.finish();
  g.validate();
  return g;
}

Json grid_to_json(const GridSpec& grid) {
  return {{"lower", grid.lower}, {"upper", grid.upper}, {"nodes", grid.nodes}, {"time_steps", grid.time_steps}};
}

const char* interpolation_name(InterpolationMode mode) {
  return mode == InterpolationMode::NearestNode ? "nearest" : "multilinear";
}

SolveOptions solve_options_from_json(const Json& section) {
  Section s(section, "solve");
  SolveOptions o;
  o.control_samples = s.count("control_samples", o.control_samples);
  o.use_transformed = s.flag("use_transformed", o.use_transformed);
  o.fp_tol = s.number("fp_tol", o.fp_tol);
  if (s.has("interpolation")) {
    const std::string mode = s.text("interpolation");
    if (mode == "multilinear") o.interpolation = InterpolationMode::Multilinear;
    else if (mode == "nearest") o.interpolation = InterpolationMode::NearestNode;
    else throw ConfigError("config: field 'solve.interpolation' must be 'multilinear' or 'nearest'");
  }
  o.force = s.flag("force", o.force);
  o.validation_budget = s.count("validation_budget", o.validation_budget);
  if (s.has("validation_seed")) o.validation_seed = s.count("validation_seed");
  s.finish();
  o.validate();
  return o;
}

Json solve_options_to_json(const SolveOptions& o) {
  return {{"control_samples", o.control_samples}, {"use_transformed", o.use_transformed},
          {"fp_tol", o.fp_tol},                   {"interpolation", interpolation_name(o.interpolation)},
          {"force", o.force},                     {"validation_budget", o.validation_budget},
          {"validation_seed", o.validation_seed}};
}

ControlPath control_path_from_json(const Json& section, std::size_t dim) {
  Section s(section, "simulate.control");
  ControlPath path;
  if (s.has("constant") == s.has("values"))
    throw ConfigError("config: 'simulate.control' needs exactly one of 'constant' or 'values'");
  if (s.has("constant")) {
    path = ControlPath::constant(s.vector("constant"));
  } else {
    path.values = s.matrix("values");
    if (s.has("breakpoints")) path.breakpoints = s.vector("breakpoints");
  }
  s.finish();
  for (const auto& u : path.values)
    if (u.size() != dim) throw ConfigError("config: 'simulate.control' values have the wrong dimension");
  return path;
}

ImpulseSchedule schedule_from_json(const Json& section) {
  if (!section.is_array()) throw ConfigError("config: 'simulate.schedule' must be an array");
  ImpulseSchedule out;
  for (std::size_t i = 0; i < section.size(); ++i) {
    Section e(section[i], "simulate.schedule[" + std::to_string(i) + "]");
    out.entries.push_back({e.number("t"), e.vector("xi")});
    e.finish();
  }
  return out;
}

Json validation_report_to_json(const ValidationReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    Json witnesses = Json::array();
    for (const auto& w : c.violations) witnesses.push_back(witness_to_json(w));
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"worst_ratio", c.worst_ratio}, {"violations", witnesses}});
  }
  return {{"seed", report.seed}, {"sample_budget", report.sample_budget}, {"radius", report.radius},
          {"passed", report.passed()}, {"checks", checks}};
}

Json residual_report_to_json(const ResidualReport& r) {
  Json out;
  out["clamp_events"] = r.clamp_events;
  if (r.residual_computed) {
    out["residual"] = {{"max_norm", r.max_norm},
                       {"boundary_max_norm", r.boundary_max_norm},
                       {"quantile_50", r.quantile_50},
                       {"quantile_90", r.quantile_90},
                       {"quantile_99", r.quantile_99},
                       {"worst_level", r.worst_level},
                       {"worst_node", r.worst_node}};
  }
  if (r.structural_computed) {
    out["structural"] = {{"passed", r.structural_ok()},
                         {"obstacle_violation_count", r.obstacle_violations.size()},
                         {"obstacle_violations", violations_to_json(r.obstacle_violations, 20)},
                         {"growth_violation_count", r.growth_violations.size()},
                         {"growth_violations", violations_to_json(r.growth_violations, 20)},
                         {"lower_bound_at_t0", r.lower_bound_at_t0},
                         {"growth_const_v", r.growth_const_v},
                         {"terminal_gap", r.terminal_gap},
                         {"terminal_bound", r.terminal_bound},
                         {"terminal_lipschitz", r.terminal_lipschitz},
                         {"terminal_ok", r.terminal_ok}};
  }
  return out;
}

Json game_to_json(const FiniteGame& g) {
  return {{"n_states", g.n_states},
          {"n_steps", g.n_steps},
          {"n_controls", g.n_controls},
          {"n_impulses", g.n_impulses},
          {"alpha", g.alpha},
          {"next", g.next},
          {"stage", g.stage},
          {"jump", g.jump},
          {"jump_cost", g.jump_cost},
          {"terminal", g.terminal},
          {"terminal_is_composed", g.terminal_is_composed},
          {"jump_cap", g.jump_cap}};
}

FiniteGame game_from_json(const Json& doc) {
  Section s(doc, "game");
  FiniteGame g;
  try {
    g.n_states = s.count("n_states");
    g.n_steps = s.count("n_steps");
    g.n_controls = s.count("n_controls");
    g.n_impulses = s.count("n_impulses");
    g.alpha = s.number("alpha");
    g.next = s.at("next").get<decltype(g.next)>();
    g.stage = s.at("stage").get<decltype(g.stage)>();
    g.jump = s.at("jump").get<decltype(g.jump)>();
    g.jump_cost = s.at("jump_cost").get<decltype(g.jump_cost)>();
    g.terminal = s.at("terminal").get<decltype(g.terminal)>();
    g.terminal_is_composed = s.flag("terminal_is_composed", true);
    g.jump_cap = s.at("jump_cap").get<decltype(g.jump_cap)>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("game: malformed table (") + e.what() + ")");
  }
  s.finish();
  g.validate();
  return g;
}

void write_value_field(const std::filesystem::path& dir, const ProblemSpec& spec, const ValueField& field,
                       const Json& manifest) {
  std::filesystem::create_directories(dir);
  Json slices = Json::array();
  Json times = Json::array();
  for (std::size_t k = 0; k < field.slices.size(); ++k) {
    const std::string name = slice_name(k);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    write_policy_csv(out, spec, field.grid, field.policies[k], field.slices[k]);
    slices.push_back(name);
    times.push_back(field.slices[k].time);
  }
  Json doc = manifest;
  doc["field"] = {{"grid", grid_to_json(field.grid)},
                  {"options", solve_options_to_json(field.options)},
                  {"spec_fingerprint", field.spec_fingerprint},
                  {"clamp_events", field.clamp_events},
                  {"fixed_point_iterations", field.fixed_point_iterations},
                  {"seconds", field.seconds},
                  {"times", times},
                  {"slices", slices}};
  write_json_file(dir / "manifest.json", doc);
}

LoadedField read_value_field(const std::filesystem::path& manifest_or_dir) {
  std::filesystem::path manifest_path = manifest_or_dir;
  if (std::filesystem::is_directory(manifest_path)) manifest_path /= "manifest.json";
  const std::filesystem::path dir = manifest_path.parent_path();

  LoadedField loaded;
  loaded.manifest = read_json_file(manifest_path);
  const Json& m = loaded.manifest;
  if (!m.is_object() || !m.contains("field") || !m.contains("config") || !m["config"].contains("problem"))
    throw ConfigError(manifest_path.string() + ": not a value-field manifest");
  loaded.spec = problem_from_json(m["config"]["problem"]);

  const Json& f = m["field"];
  ValueField& field = loaded.field;
  try {
    field.grid = grid_from_json(f.at("grid"));
    field.options = solve_options_from_json(f.at("options"));
    field.spec_fingerprint = f.at("spec_fingerprint").get<std::string>();
    field.clamp_events = f.at("clamp_events").get<std::size_t>();
    field.fixed_point_iterations = f.at("fixed_point_iterations").get<std::size_t>();
    field.seconds = f.at("seconds").get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(manifest_path.string() + ": malformed field section (" + e.what() + ")");
  }
  if (field.spec_fingerprint != loaded.spec.fingerprint())
    throw ConfigError(manifest_path.string() + ": field was produced by a different problem");

  const GridSpec& grid = field.grid;
  const std::size_t dim = grid.dimension();
  const std::size_t levels = grid.time_steps + 1;
  const Json& names = f.at("slices");
  if (!names.is_array() || names.size() != levels)
    throw ConfigError(manifest_path.string() + ": expected " + std::to_string(levels) + " slices");

  for (std::size_t k = 0; k < levels; ++k) {
    const std::filesystem::path path = dir / names[k].get<std::string>();
    const std::string where = path.string();
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(where + ": empty file");
    const std::size_t columns = dim + 4;
    if (split(line, ',').size() != columns) throw ConfigError(where + ": unexpected header");

    ValueSlice slice;
    slice.time = grid.time(loaded.spec, k);
    PolicySlice policy;
    policy.time = slice.time;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      const std::string at = where + ":" + std::to_string(row + 2);
      if (row >= grid.node_count()) throw ConfigError(at + ": too many rows");
      const auto cells = split(line, ',');
      if (cells.size() != columns) throw ConfigError(at + ": expected " + std::to_string(columns) + " columns");
      const Vector x = grid.node(row);
      for (std::size_t d = 0; d < dim; ++d) {
        const double c = parse_number(cells[d], at);
        if (std::abs(c - x[d]) > 1e-9 * std::max(1.0, std::abs(x[d])))
          throw ConfigError(at + ": node coordinates do not match the grid");
      }
      slice.values.push_back(parse_number(cells[dim], at));
      NodeAction action;
      if (!cells[dim + 2].empty()) {
        for (const auto& idx : split(cells[dim + 2], ';')) {
          const double i = parse_number(idx, at);
          if (i < 0 || i != std::floor(i) || i >= static_cast<double>(loaded.spec.impulse_candidates.size()))
            throw ConfigError(at + ": jump index out of range");
          action.jumps.push_back(static_cast<std::size_t>(i));
        }
      }
      policy.actions.push_back(std::move(action));
      ++row;
    }
    if (row != grid.node_count())
      throw ConfigError(where + ": truncated (" + std::to_string(row) + " of " + std::to_string(grid.node_count()) +
                        " rows)");
    field.slices.push_back(std::move(slice));
    field.policies.push_back(std::move(policy));
  }
  return loaded;
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

}  // namespace io
}  // namespace impulse
