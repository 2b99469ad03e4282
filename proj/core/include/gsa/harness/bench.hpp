#pragma once

// Operation-count benchmark: every IBDT algorithm run in its own counter
// scope, next to the published cost formulas and this construction's.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gsa/bilinear_group.hpp"

namespace gsa::harness {

/// a_n * n + a_t * t + c
struct Affine {
  long a_n = 0;
  long a_t = 0;
  long c = 0;

  long at(std::size_t n, std::size_t t) const {
    return a_n * static_cast<long>(n) + a_t * static_cast<long>(t) + c;
  }
  std::string text() const;
};

struct CostFormula {
  std::array<Affine, 3> ops;  // multiplications, exponentiations, pairings
};

struct AlgorithmSpec {
  std::string name;
  CostFormula paper;
  CostFormula realized;
};

/// Setup, Keygen, Sign, Comb, Verify, SignPC, FastSign, CombPC, FastComb.
const std::vector<AlgorithmSpec>& algorithm_specs();

struct BenchRow {
  std::string algorithm;
  std::size_t n = 0;
  std::size_t t = 0;
  std::array<std::size_t, 3> measured{};
  std::array<long, 3> paper{};
  std::array<long, 3> realized{};

  bool matches_paper(std::size_t k) const { return static_cast<long>(measured[k]) == paper[k]; }
  bool matches_realized() const;
};

struct ShapeCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct BenchTable {
  std::vector<BenchRow> rows;
  std::vector<ShapeCheck> checks;

  const BenchRow* find(const std::string& algorithm, std::size_t n, std::size_t t) const;
  bool shape_ok() const;
  std::string to_text() const;
};

/// Throws ContractViolation unless 1 <= t <= n for every pair.
BenchTable bench_opcounts(const std::vector<std::pair<std::size_t, std::size_t>>& nt, std::uint64_t seed = 1);

}  // namespace gsa::harness
