#pragma once

#include <stdexcept>
#include <string>

namespace qwave {

/// Raised when user-supplied parameters fall outside the declared validity range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when the requested discretization cannot meet its accuracy contract.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hard solver failure: CFL violation, non-finite values, coefficient guard.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incomplete experiment configuration. `where` is a field path
/// ("grid.dr") or "line L, column C" for syntax errors.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::invalid_argument(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace qwave
