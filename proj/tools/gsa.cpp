// gsa: scenario runner, op-count bench, Monte Carlo checks and test vectors.
// Exit codes: 0 success, 1 a check or expectation failed, 2 usage or input error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "gsa/errors.hpp"
#include "gsa/harness/bench.hpp"
#include "gsa/harness/montecarlo.hpp"
#include "gsa/harness/scenario.hpp"
#include "gsa/harness/vectors.hpp"

namespace fs = std::filesystem;
using namespace gsa;
using namespace gsa::harness;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

/// Writes to --out when given, else stdout.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error("cannot write " + g.out);
  f << text;
}

std::pair<std::size_t, std::size_t> parse_pair(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw Error("expected N:T, got '" + s + "'");
  return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

int cmd_run(const Globals& g, const std::vector<std::string>& paths) {
  std::string text;
  bool all = true;
  for (const auto& p : paths) {
    auto scenario = load_scenario(p);
    if (!g.config.empty()) {
      scenario.config = load_config(g.config, scenario.config);
    }
    const auto report = run_scenario(scenario, RunOptions{g.seed});
    text += report.to_text();
    std::cerr << report.summary() << "\n";
    all = all && report.passed();
  }
  emit(g, text);
  return all ? 0 : 1;
}

int cmd_bench(const Globals& g, const std::vector<std::string>& pairs) {
  std::vector<std::pair<std::size_t, std::size_t>> nt;
  for (const auto& s : pairs) nt.push_back(parse_pair(s));
  const auto table = bench_opcounts(nt, g.seed.value_or(1));
  emit(g, table.to_text());
  return table.shape_ok() ? 0 : 1;
}

keymgmt::KeyParams key_params(const Globals& g) {
  protocol::SystemConfig base;
  base.price_table = protocol::SystemConfig::linear_prices(base.n_max, 1000);
  return g.config.empty() ? base.key_params : load_config(g.config, base).key_params;
}

int cmd_mc_fail(const Globals& g, std::optional<std::size_t> l, std::size_t n, std::optional<std::size_t> d,
                std::size_t trials) {
  const auto kp = key_params(g);
  const auto e = montecarlo_failure(l.value_or(kp.positions), n, d.value_or(kp.digits), trials, g.seed.value_or(1));
  const bool ok = std::abs(e.z) < 3.0 || (e.std_error == 0 && e.empirical == e.formula);
  std::ostringstream os;
  os << "mc-fail l=" << e.l << " n=" << e.n << " d=" << e.d << " trials=" << e.trials << " failures=" << e.failures
     << " empirical=" << fmt(e.empirical) << " formula=" << fmt(e.formula) << " se=" << fmt(e.std_error)
     << " z=" << fmt(e.z) << " within_3se=" << (ok ? "yes" : "no") << "\n";
  emit(g, os.str());
  return ok ? 0 : 1;
}

int cmd_mc_anon(const Globals& g, std::optional<std::size_t> d, std::size_t population, std::size_t position) {
  const auto kp = key_params(g);
  const auto e = montecarlo_anonymity(d.value_or(kp.digits), population, g.seed.value_or(1), position);
  const bool ok = std::abs(e.z) < 3.0 || e.std_error == 0;
  std::ostringstream os;
  os << "mc-anon d=" << e.d << " population=" << e.population << " position=" << e.position
     << " sharing=" << e.sharing << " fraction=" << fmt(e.fraction) << " expected=" << fmt(e.expected)
     << " se=" << fmt(e.std_error) << " z=" << fmt(e.z) << " within_3se=" << (ok ? "yes" : "no") << "\n";
  emit(g, os.str());
  return ok ? 0 : 1;
}

int cmd_vectors(const Globals& g) {
  const fs::path dir = g.out.empty() ? fs::path("vectors") : fs::path(g.out);
  for (const auto& f : emit_vectors(dir, g.seed.value_or(1))) std::cout << f.string() << "\n";
  return 0;
}

int cmd_vector_check(const Globals& g, const std::string& dir) {
  const auto r = check_vectors(dir);
  std::ostringstream os;
  for (const auto& f : r.failures) os << "fail " << f << "\n";
  os << "vector-check checks=" << r.checks << " failures=" << r.failures.size() << " result="
     << (r.ok() ? "pass" : "fail") << "\n";
  emit(g, os.str());
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-size accreditation: simulator, benchmarks and validators"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed (scenario, bench, Monte Carlo, vectors)");
  app.add_option("--config", g.config, "YAML config: positions, digits, n_max, ticket_validity, prices, seed")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output file (vectors: output directory)");

  std::vector<std::string> scenarios;
  auto* run = app.add_subcommand("run", "Run scenario files and print their reports");
  run->add_option("scenarios", scenarios, "Scenario YAML files")->required()->check(CLI::ExistingFile);

  std::vector<std::string> pairs{"5:3", "10:4", "10:10"};
  auto* bench = app.add_subcommand("bench", "Count group operations per algorithm");
  bench->add_option("--nt", pairs, "N:T pairs")->capture_default_str();

  std::optional<std::size_t> l, d_fail, d_anon;
  std::size_t n = 2, trials = 100000, population = 100000, position = 1;
  auto* mc_fail = app.add_subcommand("mc-fail", "Monte Carlo check of the index-agreement failure probability");
  mc_fail->add_option("-l,--positions", l, "Key vector length (default from config, else 4)");
  mc_fail->add_option("-n,--group", n, "Group size")->capture_default_str();
  mc_fail->add_option("-d,--digits", d_fail, "Digits per chunk (default from config, else 1)");
  mc_fail->add_option("--trials", trials, "Trials, at least 10000")->capture_default_str();

  auto* mc_anon = app.add_subcommand("mc-anon", "Monte Carlo check of the pseudonym sharing fraction");
  mc_anon->add_option("-d,--digits", d_anon, "Digits per chunk (default from config, else 1)");
  mc_anon->add_option("--population", population)->capture_default_str();
  mc_anon->add_option("--position", position)->capture_default_str();

  auto* vectors = app.add_subcommand("vectors", "Write serialization test vectors to --out (default ./vectors)");

  std::string vdir;
  auto* vcheck = app.add_subcommand("vector-check", "Re-verify a vector directory");
  vcheck->add_option("dir", vdir)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  try {
    if (*run) return cmd_run(g, scenarios);
    if (*bench) return cmd_bench(g, pairs);
    if (*mc_fail) return cmd_mc_fail(g, l, n, d_fail, trials);
    if (*mc_anon) return cmd_mc_anon(g, d_anon, population, position);
    if (*vectors) return cmd_vectors(g);
    if (*vcheck) return cmd_vector_check(g, vdir);
  } catch (const ParseError& e) {
    std::cerr << "gsa: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gsa: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
