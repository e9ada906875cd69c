#pragma once

#include <stdexcept>
#include <string>

namespace backbone {

// Bad arguments or malformed data.
class InvalidInputError : public std::invalid_argument {
public:
  explicit InvalidInputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Instance exceeds the caps of an exact solver.
class SolverScaleError : public std::runtime_error {
public:
  explicit SolverScaleError(const std::string& msg) : std::runtime_error(msg) {}
};

// The reduced problem admits no feasible solution.
class InfeasibleError : public std::runtime_error {
public:
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric requested on degenerate input (constant response, single class, ...).
class UndefinedMetricError : public std::runtime_error {
public:
  explicit UndefinedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// A solver-contract callback failed inside the engine loop.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace backbone
