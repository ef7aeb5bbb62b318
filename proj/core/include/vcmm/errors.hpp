#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vcmm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (support, parameter space).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Data that cannot identify the requested quantity: identical observations,
/// constant columns for Kendall's tau, too few points.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// A numerical optimizer stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

/// No candidate model could be fitted.
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// A mixture component lost (almost) all posterior mass during ECM.
class EmptyComponentError : public Error {
 public:
  EmptyComponentError(const std::string& what, int component, int iteration)
      : Error(what), component_(component), iteration_(iteration) {}
  int component() const noexcept { return component_; }
  int iteration() const noexcept { return iteration_; }

 private:
  int component_;
  int iteration_;
};

/// The starting partition cannot seed a model (empty or tiny clusters).
class InitializationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (CSV with missing or non-numeric cells).
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent persisted model or dimension mismatch between model and data.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcmm
