#pragma once

#include <cstddef>
#include <cstdint>

namespace gsa::harness {

struct FailureEstimate {
  std::size_t l = 0, n = 0, d = 0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double empirical = 0;
  double formula = 0;
  double std_error = 0;  // binomial, at the formula value
  double z = 0;
};

/// Samples `trials` random groups of n identifiers and runs index agreement.
/// Throws ContractViolation for fewer than 10^4 trials.
FailureEstimate montecarlo_failure(std::size_t l, std::size_t n, std::size_t d, std::size_t trials, std::uint64_t seed);

struct AnonymityEstimate {
  std::size_t d = 0;
  std::size_t population = 0;
  std::size_t position = 1;
  std::size_t sharing = 0;  // users holding the reference pseudonym, itself included
  double fraction = 0;
  double expected = 0;
  double std_error = 0;
  double z = 0;
};

/// Fraction of `population` random users sharing the first user's pseudonym
/// at `position`.
AnonymityEstimate montecarlo_anonymity(std::size_t d, std::size_t population, std::uint64_t seed,
                                       std::size_t position = 1);

}  // namespace gsa::harness
