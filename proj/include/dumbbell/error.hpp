#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dumbbell {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mesh construction or validation failure.
class MeshError : public Error {
public:
  using Error::Error;
};

/// Syntax error while reading an ASCII mesh or config file.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Invalid geometric input (degenerate cells, non-separating hypersurface, ...).
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Linear or eigen solver failure.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Iterative solver hit its cap; carries the best residual reached.
class ConvergenceError : public SolverError {
public:
  ConvergenceError(const std::string& what, double best_residual)
      : SolverError(what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

private:
  double best_residual_;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace dumbbell
