#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stratsel {

// Input-side failures: malformed data, violated invariants, model parameters
// outside the supported regime. The CLI maps these to exit code 2.
class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Noise variance too small for the requested operation (uniqueness regime).
class RegimeError : public InvalidInputError {
 public:
  explicit RegimeError(const std::string& msg) : InvalidInputError(msg) {}
};

// Runtime numeric failures. CLI exit code 1.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& msg, std::vector<double> iterates)
      : NumericalError(msg), trace(std::move(iterates)) {}
  std::vector<double> trace;
};

class RankError : public NumericalError {
 public:
  explicit RankError(const std::string& msg) : NumericalError(msg) {}
};

class IllConditionedError : public NumericalError {
 public:
  explicit IllConditionedError(const std::string& msg) : NumericalError(msg) {}
};

class DegenerateStepError : public NumericalError {
 public:
  explicit DegenerateStepError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace stratsel
