#pragma once

#include <stdexcept>
#include <string>

namespace dualvp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (unknown law, bad parameter, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Array sizes disagree with the owning system description.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not defined for this system.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A linear system that must be inverted is (numerically) singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// Forward integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace dualvp
