#include "gsa/harness/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "gsa/errors.hpp"
#include "gsa/ibdt.hpp"

namespace gsa::harness {

using namespace gsa::ibdt;
using bg::count_operations;

namespace {

std::array<std::size_t, 3> counts(const bg::OpCounters& c) { return {c.multiplications, c.exponentiations, c.pairings}; }

std::array<long, 3> eval(const CostFormula& f, std::size_t n, std::size_t t) {
  return {f.ops[0].at(n, t), f.ops[1].at(n, t), f.ops[2].at(n, t)};
}

std::vector<std::string> identities(std::size_t t) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < t; ++i) out.push_back(std::to_string(10 + i));
  return out;
}

struct Measurement {
  std::map<std::string, std::array<std::size_t, 3>> by_algorithm;
};

Measurement measure(std::size_t n, std::size_t t, std::uint64_t seed) {
  Measurement m;
  Rng rng(seed);
  Rng setup_rng = rng.fork("setup");
  SetupResult sr;
  m.by_algorithm["Setup"] = counts(count_operations("Setup", [&] {
    sr = setup(kSupportedLambda, IdentityUniverse::decimal_digits(), n, setup_rng);
  }));
  const auto& pms = sr.pms;
  const auto& mpk = sr.keys.mpk;

  const auto gamma = ThresholdPolicy::all_of(identities(t));
  std::vector<IdentitySecretKey> keys;
  for (std::size_t i = 0; i < t; ++i) {
    auto c = count_operations("Keygen", [&] { keys.push_back(keygen(pms, mpk, sr.keys.msk, gamma.members[i])); });
    if (i == 0) m.by_algorithm["Keygen"] = counts(c);
  }

  const Bytes msg{'b', 'e', 'n', 'c', 'h'};
  std::vector<PartialSignature> partials;
  for (std::size_t i = 0; i < t; ++i) {
    auto c = count_operations("Sign", [&] { partials.push_back(sign(pms, mpk, keys[i], msg, gamma, rng)); });
    if (i == 0) m.by_algorithm["Sign"] = counts(c);
  }
  CombinedSignature sigma;
  m.by_algorithm["Comb"] = counts(count_operations("Comb", [&] { sigma = comb(pms, mpk, keys[0], msg, gamma, partials); }));
  VerifyResult vr;
  m.by_algorithm["Verify"] = counts(count_operations("Verify", [&] { vr = verify(pms, mpk, msg, sigma, gamma); }));
  if (!vr.valid) throw Error("bench signature failed to verify");

  SignPrecomputation spre;
  m.by_algorithm["SignPC"] = counts(count_operations("SignPC", [&] { spre = sign_precompute(pms, mpk, keys[0], gamma); }));
  m.by_algorithm["FastSign"] = counts(count_operations("FastSign", [&] { fast_sign(spre, msg, rng); }));
  CombPrecomputation cpre;
  m.by_algorithm["CombPC"] = counts(count_operations("CombPC", [&] { cpre = comb_precompute(pms, mpk, keys[0], gamma); }));
  CombinedSignature fast;
  m.by_algorithm["FastComb"] = counts(count_operations("FastComb", [&] { fast = fast_comb(cpre, msg, partials); }));
  if (!(fast == sigma)) throw Error("bench fast_comb differs from comb");
  return m;
}

std::string triple(const std::array<std::size_t, 3>& v) {
  return std::to_string(v[0]) + "/" + std::to_string(v[1]) + "/" + std::to_string(v[2]);
}
std::string triple(const std::array<long, 3>& v) {
  return std::to_string(v[0]) + "/" + std::to_string(v[1]) + "/" + std::to_string(v[2]);
}

}  // namespace

std::string Affine::text() const {
  std::string out;
  auto term = [&](long k, const char* var) {
    if (k == 0) return;
    if (!out.empty()) out += k > 0 ? "+" : "-";
    else if (k < 0) out += "-";
    const long a = k < 0 ? -k : k;
    if (a != 1) out += std::to_string(a);
    out += var;
  };
  term(a_n, "n");
  term(a_t, "t");
  if (c != 0 || out.empty()) {
    if (!out.empty()) out += c > 0 ? "+" : "-";
    else if (c < 0) out += "-";
    out += std::to_string(c < 0 ? -c : c);
  }
  return out;
}

const std::vector<AlgorithmSpec>& algorithm_specs() {
  static const std::vector<AlgorithmSpec> specs = {
      {"Setup", {{{{0, 0, 0}, {1, 0, 4}, {0, 0, 1}}}}, {{{{0, 0, 0}, {2, 0, 0}, {0, 0, 1}}}}},
      {"Keygen", {{{{2, 0, 0}, {4, 0, 0}, {0, 0, 0}}}}, {{{{0, 0, 0}, {0, 0, 1}, {0, 0, 0}}}}},
      {"Sign", {{{{2, 0, 6}, {2, 0, 5}, {0, 0, 0}}}}, {{{{1, 0, 1}, {1, 0, 4}, {0, 0, 0}}}}},
      {"Comb", {{{{2, -1, 1}, {2, -1, 0}, {0, 0, 0}}}}, {{{{1, 1, -1}, {1, -1, 0}, {0, 0, 0}}}}},
      {"Verify", {{{{1, 0, 2}, {1, 0, 1}, {0, 0, 4}}}}, {{{{1, 0, 1}, {1, 0, 1}, {0, 0, 2}}}}},
      {"SignPC", {{{{2, 0, 2}, {2, 0, 1}, {0, 0, 0}}}}, {{{{1, 0, 0}, {1, 0, 2}, {0, 0, 0}}}}},
      {"FastSign", {{{{0, 0, 2}, {0, 0, 4}, {0, 0, 0}}}}, {{{{0, 0, 1}, {0, 0, 2}, {0, 0, 0}}}}},
      {"CombPC", {{{{2, -2, 0}, {2, -2, 0}, {0, 0, 0}}}}, {{{{1, -1, 0}, {1, -1, 0}, {0, 0, 0}}}}},
      {"FastComb", {{{{0, 3, 1}, {0, 3, 0}, {0, 0, 0}}}}, {{{{0, 2, -1}, {0, 0, 0}, {0, 0, 0}}}}},
  };
  return specs;
}

bool BenchRow::matches_realized() const {
  for (std::size_t k = 0; k < 3; ++k)
    if (static_cast<long>(measured[k]) != realized[k]) return false;
  return true;
}

const BenchRow* BenchTable::find(const std::string& algorithm, std::size_t n, std::size_t t) const {
  for (const auto& r : rows)
    if (r.algorithm == algorithm && r.n == n && r.t == t) return &r;
  return nullptr;
}

bool BenchTable::shape_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ShapeCheck& c) { return c.passed; });
}

BenchTable bench_opcounts(const std::vector<std::pair<std::size_t, std::size_t>>& nt, std::uint64_t seed) {
  if (nt.empty()) throw ContractViolation("bench needs at least one (n, t) pair");
  for (auto [n, t] : nt)
    if (t < 1 || t > n) throw ContractViolation("bench requires 1 <= t <= n");

  BenchTable table;
  std::map<std::pair<std::size_t, std::size_t>, Measurement> measured;
  for (auto [n, t] : nt) {
    auto m = measure(n, t, seed);
    for (const auto& spec : algorithm_specs()) {
      BenchRow row;
      row.algorithm = spec.name;
      row.n = n;
      row.t = t;
      row.measured = m.by_algorithm.at(spec.name);
      row.paper = eval(spec.paper, n, t);
      row.realized = eval(spec.realized, n, t);
      table.rows.push_back(row);
    }
    measured[{n, t}] = std::move(m);
  }

  auto distinct_counts = [&](const std::string& algo) {
    std::set<std::array<std::size_t, 3>> seen;
    for (const auto& r : table.rows)
      if (r.algorithm == algo) seen.insert(r.measured);
    return seen;
  };
  std::set<std::size_t> verify_pairings;
  for (const auto& c : distinct_counts("Verify")) verify_pairings.insert(c[2]);
  table.checks.push_back({"verify-pairings-constant", verify_pairings.size() == 1,
                          "Verify pairing count identical for every tested (n, t)"});
  table.checks.push_back({"fastsign-identical", distinct_counts("FastSign").size() == 1,
                          "FastSign (mult, exp, pairings) identical for every tested (n, t)"});

  // Comb must be affine in t at fixed n: sweep t over [1, n] for each n.
  bool affine = true;
  std::string affine_detail;
  std::set<std::size_t> ns;
  for (auto [n, t] : nt) ns.insert(n);
  for (auto n : ns) {
    std::vector<std::array<std::size_t, 3>> series;
    for (std::size_t t = 1; t <= n; ++t) {
      auto it = measured.find({n, t});
      series.push_back(it != measured.end() ? it->second.by_algorithm.at("Comb") : measure(n, t, seed).by_algorithm.at("Comb"));
    }
    for (std::size_t k = 0; k < 3 && series.size() >= 3; ++k) {
      const long step = static_cast<long>(series[1][k]) - static_cast<long>(series[0][k]);
      for (std::size_t i = 2; i < series.size(); ++i)
        if (static_cast<long>(series[i][k]) - static_cast<long>(series[i - 1][k]) != step) affine = false;
    }
    affine_detail += (affine_detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " t=1.." + std::to_string(n);
  }
  table.checks.push_back({"comb-affine-in-t", affine, "Comb counts have constant first differences in t (" + affine_detail + ")"});

  // Phase split: precomputed + fast phase equals the plain algorithm within 2.
  bool split = true;
  for (const auto& [key, m] : measured) {
    const auto& s = m.by_algorithm;
    for (std::size_t k = 0; k < 3; ++k) {
      const long sign_gap = static_cast<long>(s.at("SignPC")[k] + s.at("FastSign")[k]) - static_cast<long>(s.at("Sign")[k]);
      const long comb_gap = static_cast<long>(s.at("CombPC")[k] + s.at("FastComb")[k]) - static_cast<long>(s.at("Comb")[k]);
      if (std::abs(sign_gap) > 2 || std::abs(comb_gap) > 2) split = false;
    }
  }
  table.checks.push_back({"phase-split-consistent", split, "SignPC+FastSign vs Sign and CombPC+FastComb vs Comb within 2"});
  return table;
}

std::string BenchTable::to_text() const {
  std::ostringstream os;
  os << "# operation counts: mult/exp/pairings\n";
  os << std::left << std::setw(10) << "algorithm" << std::setw(4) << "n" << std::setw(4) << "t" << std::setw(14)
     << "measured" << std::setw(14) << "paper" << std::setw(10) << "paper=" << std::setw(14) << "realized"
     << "realized=\n";
  for (const auto& r : rows) {
    std::string flags;
    for (std::size_t k = 0; k < 3; ++k) flags += r.matches_paper(k) ? "Y" : "N";
    os << std::left << std::setw(10) << r.algorithm << std::setw(4) << r.n << std::setw(4) << r.t << std::setw(14)
       << triple(r.measured) << std::setw(14) << triple(r.paper) << std::setw(10) << flags << std::setw(14)
       << triple(r.realized) << (r.matches_realized() ? "Y" : "N") << "\n";
  }
  os << "#\n# formulas (paper | realized)\n";
  for (const auto& s : algorithm_specs()) {
    os << "formula " << std::left << std::setw(10) << s.name;
    for (std::size_t k = 0; k < 3; ++k) os << (k ? ", " : "") << s.paper.ops[k].text();
    os << " | ";
    for (std::size_t k = 0; k < 3; ++k) os << (k ? ", " : "") << s.realized.ops[k].text();
    os << "\n";
  }
  os << "#\n";
  for (const auto& c : checks) os << "check " << c.name << " " << (c.passed ? "pass" : "fail") << "  # " << c.detail << "\n";
  return os.str();
}

}  // namespace gsa::harness
