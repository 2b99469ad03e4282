#include "gsa/harness/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gsa/errors.hpp"
#include "gsa/keymgmt.hpp"

namespace gsa::harness {

namespace {

keymgmt::UserIdentifier random_identifier(std::mt19937_64& gen, std::size_t length) {
  std::uniform_int_distribution<int> digit(0, 9);
  std::string s(length, '0');
  for (auto& c : s) c = static_cast<char>('0' + digit(gen));
  return {std::move(s)};
}

double z_score(double observed, double expected, double se) {
  if (se > 0) return (observed - expected) / se;
  return observed == expected ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

FailureEstimate montecarlo_failure(std::size_t l, std::size_t n, std::size_t d, std::size_t trials, std::uint64_t seed) {
  if (trials < 10'000) throw ContractViolation("Monte Carlo needs at least 10^4 trials");
  if (l == 0 || n == 0 || d == 0) throw DomainError("l, n and d must be positive");
  FailureEstimate out{l, n, d, trials};
  std::mt19937_64 gen(seed);
  std::vector<keymgmt::KeyVector> group(n);
  for (std::size_t i = 0; i < trials; ++i) {
    for (auto& kv : group) kv = keymgmt::derive_key_vector(random_identifier(gen, l * d), l, d);
    if (!keymgmt::agree_index(group)) ++out.failures;
  }
  out.empirical = static_cast<double>(out.failures) / static_cast<double>(trials);
  out.formula = static_cast<double>(keymgmt::failure_probability(l, n, d));
  out.std_error = std::sqrt(out.formula * (1 - out.formula) / static_cast<double>(trials));
  out.z = z_score(out.empirical, out.formula, out.std_error);
  return out;
}

AnonymityEstimate montecarlo_anonymity(std::size_t d, std::size_t population, std::uint64_t seed, std::size_t position) {
  if (d == 0 || population == 0 || position == 0) throw DomainError("d, population and position must be positive");
  AnonymityEstimate out{d, population, position};
  std::mt19937_64 gen(seed);
  std::string reference;
  for (std::size_t i = 0; i < population; ++i) {
    const auto kv = keymgmt::derive_key_vector(random_identifier(gen, position * d), position, d);
    const auto& p = kv.at(position);
    if (i == 0) reference = p;
    if (p == reference) ++out.sharing;
  }
  const double p = keymgmt::anonymity_fraction(d);
  const double n = static_cast<double>(population);
  out.fraction = static_cast<double>(out.sharing) / n;
  out.expected = p;
  // The reference user always matches; the other n-1 are Bernoulli(p).
  out.std_error = std::sqrt(p * (1 - p) * (n - 1)) / n;
  out.z = population == 1 ? 0.0 : z_score(out.fraction, p, out.std_error);
  return out;
}

}  // namespace gsa::harness
