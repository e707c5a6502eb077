#pragma once

#include <stdexcept>
#include <string>

namespace scpw {

/// Invalid physical or numerical input (precondition violation).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Configuration file problem. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data file. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit failed to converge. The CLI maps this to exit code 4.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scpw
