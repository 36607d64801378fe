#pragma once

#include <stdexcept>
#include <string>

namespace hibler {

// Error categories map onto CLI exit codes (config 2, solver 3, I/O 4).
enum class ErrorKind { config, solver, io, geometry, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual = 0.0, long step = -1)
      : Error(ErrorKind::solver, what), residual_(residual), step_(step) {}
  double residual() const noexcept { return residual_; }
  long step() const noexcept { return step_; }

 private:
  double residual_;
  long step_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error(ErrorKind::geometry, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Raised by the unregularized viscous-plastic formulas when Delta(z) = 0.
class DegenerateStrainError : public NumericError {
 public:
  explicit DegenerateStrainError(const std::string& what) : NumericError(what) {}
};

}  // namespace hibler
