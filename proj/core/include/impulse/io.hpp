#pragma once

#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "impulse/oracle.hpp"
#include "impulse/problem.hpp"
#include "impulse/solver.hpp"
#include "impulse/verifier.hpp"

namespace impulse::io {

using Json = nlohmann::json;

/// Object view that remembers which keys were read and rejects the rest.
class Section {
 public:
  Section(const Json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key) && !doc_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    if (!has(key)) throw ConfigError("config: missing field '" + field(key) + "'");
    return doc_.at(key);
  }

  double number(const std::string& key) { return as_number(at(key), field(key)); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::size_t count(const std::string& key) { return as_count(at(key), field(key)); }
  std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_boolean()) throw ConfigError("config: field '" + field(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError("config: field '" + field(key) + "' must be a string");
    return v.get<std::string>();
  }

  Vector vector(const std::string& key) { return as_vector(at(key), field(key)); }
  std::vector<Vector> matrix(const std::string& key) { return as_matrix(at(key), field(key)); }

  Section child(const std::string& key) { return Section(at(key), field(key)); }

  void finish() const {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) throw ConfigError("config: unknown field '" + field(key) + "'");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError("config: field '" + where + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("config: field '" + where + "' must be finite");
    return x;
  }

  static std::size_t as_count(const Json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() || v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1e15) return static_cast<std::size_t>(x);
    }
    throw ConfigError("config: field '" + where + "' must be a nonnegative integer");
  }

  static Vector as_vector(const Json& v, const std::string& where) {
    if (v.is_number()) return {as_number(v, where)};
    if (!v.is_array()) throw ConfigError("config: field '" + where + "' must be an array of numbers");
    Vector out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

  static std::vector<Vector> as_matrix(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError("config: field '" + where + "' must be an array");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_vector(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const Json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Parses JSON text; syntax errors become ConfigError with line and column.
Json parse_json(const std::string& text, const std::string& source);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

/// `{"builtin": name, "params": {...}, "impulses": [...]}` or
/// `{"custom": {...coefficient tables...}}`.
ProblemSpec problem_from_json(const Json& section);

GridSpec grid_from_json(const Json& section);
Json grid_to_json(const GridSpec& grid);

SolveOptions solve_options_from_json(const Json& section);
Json solve_options_to_json(const SolveOptions& options);

ControlPath control_path_from_json(const Json& section, std::size_t dim);
ImpulseSchedule schedule_from_json(const Json& section);

Json validation_report_to_json(const ValidationReport& report);
Json residual_report_to_json(const ResidualReport& report);

Json game_to_json(const FiniteGame& game);
FiniteGame game_from_json(const Json& doc);

const char* interpolation_name(InterpolationMode mode);

/// Writes slice_XXXX.csv per level plus manifest.json into `dir`. `manifest`
/// is merged into the written manifest (config echo, seeds, versions).
void write_value_field(const std::filesystem::path& dir, const ProblemSpec& spec,
                       const ValueField& field, const Json& manifest);

/// Reads a field written by write_value_field. The problem is rebuilt from
/// the manifest's config echo. Truncated or malformed files raise ConfigError.
struct LoadedField {
  Json manifest;
  ProblemSpec spec;
  ValueField field;
};
LoadedField read_value_field(const std::filesystem::path& manifest_or_dir);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace impulse::io
