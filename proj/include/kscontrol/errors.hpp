#pragma once

#include <stdexcept>
#include <string>

namespace ks {

// Error taxonomy used across the library. The CLI maps these to exit codes:
// validation-type errors -> 2, solver/convergence errors -> 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

struct ConstructionError : Error {
  explicit ConstructionError(const std::string& msg) : Error(msg) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& msg) : Error(msg) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

struct HypothesisError : Error {
  explicit HypothesisError(const std::string& msg) : Error(msg) {}
};

struct StabilityError : Error {
  explicit StabilityError(const std::string& msg) : Error(msg) {}
};

struct DivergenceError : Error {
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

}  // namespace ks
