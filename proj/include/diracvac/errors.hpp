#pragma once

#include <stdexcept>
#include <string>

namespace diracvac {

// Base of every recoverable failure raised by the library. Violations of
// type invariants (a <= 0, m != 0, k == 0) throw std::invalid_argument.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  ConfigError(std::string field, const std::string& what)
      : Error("config: " + field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct QuadratureNotConverged : Error {
  using Error::Error;
};

struct NoRootInBracket : Error {
  using Error::Error;
};

}  // namespace diracvac
