#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace impulse {

using Vector = std::vector<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad config, bad grid, bad schedule, unparsable file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A user-supplied model function returned a non-finite value.
class ModelEvaluationError : public Error {
 public:
  ModelEvaluationError(const std::string& what, Vector witness)
      : Error("model evaluation failure: " + what), witness_(std::move(witness)) {}
  const Vector& witness() const noexcept { return witness_; }

 private:
  Vector witness_;
};

/// Trajectory state became non-finite during integration.
class BlowUpError : public Error {
 public:
  BlowUpError(double time, const std::string& what)
      : Error("blow-up at t=" + std::to_string(time) + ": " + what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// A structural or consistency check did not pass.
class CheckFailure : public Error {
 public:
  using Error::Error;
};

/// An enumeration size guard was exceeded.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

inline double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string format_point(std::span<const double> x);

/// Library version string.
const char* version();

}  // namespace impulse
