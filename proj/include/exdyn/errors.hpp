#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exdyn {

// Runtime failures a caller can reasonably recover from.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Broken precondition: a bug in the caller, not a model outcome.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct InvalidParams : Error {
  using Error::Error;
};

struct EmptyCategory : Error {
  using Error::Error;
};

struct NoEquilibrium : Error {
  using Error::Error;
};

struct CategoryExtinct : Error {
  using Error::Error;
};

struct IntegrationFailure : Error {
  IntegrationFailure(const std::string& what, std::string diagnostic)
      : Error(what), diagnostic(std::move(diagnostic)) {}
  std::string diagnostic;
};

struct ScenarioError : Error {
  ScenarioError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

}  // namespace exdyn
