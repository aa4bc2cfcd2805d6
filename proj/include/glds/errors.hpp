#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace glds {

// Invalid arguments: dimension mismatches, non-finite inputs, bad parameters.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A rollout or a fit produced a non-finite or absurdly large state. Carries the
// index (time step or iteration) at which the blow-up was detected.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t index)
      : std::runtime_error(what + " at index " + std::to_string(index)),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// The empirical covariance is singular, so the least-squares system has no
// unique solution.
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Power iteration failed to converge within its iteration cap. Distinct from
// "no certificate exists": the search could not complete.
class PowerIterationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace glds
