#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>

#include "gsa/errors.hpp"
#include "gsa/harness/bench.hpp"
#include "gsa/harness/montecarlo.hpp"
#include "gsa/harness/scenario.hpp"
#include "gsa/harness/simulation.hpp"
#include "gsa/harness/transport.hpp"
#include "gsa/harness/vectors.hpp"
#include "gsa/keymgmt.hpp"

using namespace gsa;
using namespace gsa::harness;
namespace fs = std::filesystem;

namespace {

protocol::SystemConfig small_config(std::uint64_t seed = 3) {
  protocol::SystemConfig c;
  c.key_params = {4, 1};
  c.n_max = 10;
  c.price_table = protocol::SystemConfig::linear_prices(10, 1000);
  c.seed = seed;
  return c;
}

protocol::Frame frame(protocol::FrameType type, std::string_view payload) {
  return {type, Bytes(payload.begin(), payload.end())};
}

std::vector<fs::path> bundled_scenarios() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(GSA_SCENARIO_DIR))
    if (e.path().extension() == ".yaml") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gsa_harness_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("transport gates tickets to detected devices") {
  SimTransport t(Rng(1));
  for (auto n : {"gate", "a", "b"}) t.add_entity(n);
  t.set_detected("gate", {"a"});
  CHECK(t.detects("gate", "a"));
  CHECK_FALSE(t.detects("gate", "b"));

  CHECK(t.send("gate", "a", frame(protocol::FrameType::Ticket, "x")));
  CHECK_FALSE(t.send("gate", "b", frame(protocol::FrameType::Ticket, "x")));
  CHECK(t.pending("a") == 1);
  CHECK(t.pending("b") == 0);
  CHECK(t.trace().size() == 1);

  // Only tickets are gated.
  CHECK(t.send("a", "b", frame(protocol::FrameType::PartialSignature, "p")));
  CHECK(t.pending("b") == 1);

  auto reached = t.broadcast_detected("gate", frame(protocol::FrameType::Ticket, "y"));
  CHECK(reached == std::vector<std::string>{"a"});
}

TEST_CASE("transport delivers by type in order") {
  SimTransport t(Rng(1));
  t.add_entity("a");
  t.add_entity("b");
  t.send("a", "b", frame(protocol::FrameType::PartialSignature, "1"));
  t.send("a", "b", frame(protocol::FrameType::Verdict, "2"));
  t.send("a", "b", frame(protocol::FrameType::PartialSignature, "3"));
  auto v = t.receive("b", protocol::FrameType::Verdict);
  REQUIRE(v);
  CHECK(v->payload == Bytes{'2'});
  CHECK(t.receive("b")->payload == Bytes{'1'});
  CHECK(t.receive("b")->payload == Bytes{'3'});
  CHECK_FALSE(t.receive("b"));
  CHECK_THROWS_AS(t.send("a", "nobody", frame(protocol::FrameType::PartialSignature, "")), Error);
}

TEST_CASE("transport drops are seeded and traced") {
  auto run = [](std::uint64_t seed) {
    SimTransport t(Rng(seed), 0.5);
    t.add_entity("a");
    t.add_entity("b");
    std::size_t delivered = 0;
    for (int i = 0; i < 200; ++i) delivered += t.send("a", "b", frame(protocol::FrameType::PartialSignature, "z"));
    CHECK(t.trace().size() == 200);
    CHECK(t.pending("b") == delivered);
    return std::make_pair(delivered, t.trace_digest());
  };
  auto [d1, h1] = run(5);
  auto [d2, h2] = run(5);
  auto [d3, h3] = run(6);
  CHECK(d1 == d2);
  CHECK(h1 == h2);
  CHECK(h1 != h3);
  CHECK(d1 > 60);
  CHECK(d1 < 140);
}

TEST_CASE("simulation runs a full session") {
  Simulation sim(small_config(), "gate-1");
  sim.add_user("alice", "40213587", 5000);
  sim.add_user("bob", "71828182", 5000);
  sim.add_user("carol", "16180339", 5000);

  auto gs = sim.group_setup({"alice", "bob", "carol"});
  CHECK(gs.outcome == "ok");
  CHECK(gs.roster.j == 1);
  CHECK(gs.roster.pseudonyms.size() == 3);

  sim.issue_ticket("terms");
  auto acc = sim.accredit();
  REQUIRE(acc.result);
  CHECK(acc.result->verdict == protocol::Verdict::Granted);
  CHECK(acc.result->group_size == 3);
  CHECK(acc.result->amount_due == 3000);

  auto s = sim.pay({"alice", "bob", "carol"});
  CHECK(s.settled());
  CHECK(s.total == 3000);
  CHECK(sim.sp().ledger().balance(sim.user("alice").pay_codes().front()) == 4000);

  auto replayed = sim.replay();
  REQUIRE(replayed.result);
  CHECK(replayed.result->verdict == protocol::Verdict::Rejected);

  CHECK(identifier_hits(sim.transport().trace_bytes(), sim.identifiers(), 1) == 0);
  for (const auto& st : sim.settlements())
    CHECK(settlement_hits(st.to_text(), sim.identifiers(), sim.pseudonyms()) == 0);
}

TEST_CASE("simulation reports infeasible groups and free riders") {
  Simulation sim(small_config(), "gate-1");
  sim.add_user("alice", "40213587", 5000);
  sim.add_user("twin", "99993587", 5000);
  sim.add_user("carol", "16180339", 5000);
  CHECK(sim.group_setup({"alice", "twin"}).outcome == "infeasible");

  REQUIRE(sim.group_setup({"alice", "carol"}).outcome == "ok");
  sim.issue_ticket();
  auto acc = sim.accredit({"carol"});
  REQUIRE(acc.result);
  CHECK(acc.result->verdict == protocol::Verdict::Penalized);
  CHECK(acc.result->amount_due == 0);
  CHECK(sim.verifier().penalty_log().size() == 1);
}

TEST_CASE("disclosure scanners find planted leaks") {
  const std::vector<std::string> ids{"40213587"};
  const std::string planted = "xx40213587yy";
  CHECK(identifier_hits(as_bytes(planted), ids, 1) == 1);
  CHECK(identifier_hits(as_bytes(std::string("4021358")), ids, 1) == 0);
  CHECK(settlement_hits("share 17 1000", ids, {"17"}) == 1);
  CHECK(settlement_hits("share 170 1000", ids, {"17"}) == 0);
  CHECK(settlement_hits("id 40213587", ids, {}) == 1);
}

TEST_CASE("scenario parsing rejects bad input with line numbers") {
  auto message = [](const std::string& yaml) -> std::string {
    try {
      parse_scenario(yaml);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("version: 2\nname: x\ncast: []\nscript: []\n").find("version") != std::string::npos);
  CHECK(message("name: x\n").find("version") != std::string::npos);
  auto m = message("version: 1\nname: x\ncast:\n  - {name: a, id: \"12345678\"}\nscript:\n  - dance: [a]\n");
  CHECK(m.find("line 6") != std::string::npos);
  m = message("version: 1\nname: x\ncast:\n  - {name: a, id: \"12345678\"}\nscript:\n  - group_setup: [zed]\n");
  CHECK(m.find("zed") != std::string::npos);
  CHECK_FALSE(message("version: 1\nname: x\ncast: [\n").empty());
  CHECK_THROWS_AS(load_scenario("/nonexistent/file.yaml"), ParseError);
}

TEST_CASE("scenario parser reads every field") {
  auto s = parse_scenario(R"(version: 1
name: demo
description: two riders
seed: 42
config: {positions: 5, digits: 2, n_max: 6, ticket_validity: 20, price_per_member: 300}
verifier: gate-9
drop_probability: 0.25
cast:
  - {name: a, id: "1234567890", card: 700}
  - {name: b, id: "9876543210", detected: false}
script:
  - group_setup: [a, b]
    expect: {outcome: ok, j: 1}
  - ticket: {terms: hello}
  - advance: 5
  - accredit: {withhold: [b]}
    expect: {verdict: penalized, group_size: 2, reason: pairing-check-failed}
  - replay: {}
  - pay: [a]
    expect: {status: declined, shares: 1, amount: 600}
)");
  CHECK(s.name == "demo");
  CHECK(s.config.seed == 42);
  CHECK(s.config.key_params.positions == 5);
  CHECK(s.config.key_params.digits == 2);
  CHECK(s.config.n_max == 6);
  CHECK(s.config.ticket_validity == 20);
  CHECK(s.config.price_table.at(2) == 600);
  CHECK(s.verifier_id == "gate-9");
  CHECK(s.drop_probability == doctest::Approx(0.25));
  REQUIRE(s.cast.size() == 2);
  CHECK(s.cast[0].card == 700);
  CHECK_FALSE(s.cast[1].card);
  CHECK_FALSE(s.cast[1].detected);
  REQUIRE(s.script.size() == 6);
  CHECK(s.script[0].kind == EventKind::GroupSetup);
  CHECK(s.script[0].expect.j == 1);
  CHECK(s.script[1].terms == "hello");
  CHECK(s.script[2].seconds == 5);
  CHECK(s.script[3].names == std::vector<std::string>{"b"});
  CHECK(s.script[3].line == 16);
  CHECK(s.script[5].expect.amount == 600);
}

TEST_CASE("bundled scenarios pass and replay identically") {
  const auto paths = bundled_scenarios();
  REQUIRE(paths.size() >= 8);
  for (const auto& p : paths) {
    CAPTURE(p.filename().string());
    auto a = run_scenario(p);
    CHECK(a.passed());
    CHECK(a.expectations() > 0);
    CHECK(a.trace_identifier_hits == 0);
    CHECK(a.settlement_disclosure_hits == 0);
    auto b = run_scenario(p);
    CHECK(a.trace_digest == b.trace_digest);
    CHECK(a.to_text() == b.to_text());
  }
}

TEST_CASE("scenario seed override changes the trace") {
  const auto p = fs::path(GSA_SCENARIO_DIR) / "group4_happy.yaml";
  auto a = run_scenario(p);
  auto b = run_scenario(p, RunOptions{99});
  CHECK(b.passed());
  CHECK(b.seed == 99);
  CHECK(a.trace_digest != b.trace_digest);
}

TEST_CASE("scenario mismatches are reported, not thrown") {
  auto s = parse_scenario(R"(version: 1
name: wrong
cast:
  - {name: a, id: "40213587", card: 5000}
script:
  - group_setup: [a]
    expect: {outcome: ok, j: 3}
  - ticket: {}
  - accredit: {}
    expect: {verdict: penalized}
)");
  auto r = run_scenario(s);
  CHECK_FALSE(r.passed());
  CHECK(r.mismatches() == 2);
  const auto text = r.to_text();
  CHECK(text.find("result fail") != std::string::npos);
  CHECK(text.find("expect 1 mismatch") != std::string::npos);
}

TEST_CASE("bench reports measured, published and realized counts") {
  auto table = bench_opcounts({{5, 3}, {10, 4}, {10, 10}});
  CHECK(table.shape_ok());
  for (const auto& row : table.rows) {
    CAPTURE(row.algorithm);
    CHECK(row.matches_realized());
  }
  const auto* verify = table.find("Verify", 10, 10);
  REQUIRE(verify);
  CHECK(verify->paper[2] == 4);
  CHECK(verify->measured[2] == 2);
  const auto* comb = table.find("Comb", 10, 10);
  REQUIRE(comb);
  CHECK(comb->paper[0] == 11);
  const auto* fs_row = table.find("FastSign", 10, 4);
  REQUIRE(fs_row);
  CHECK(fs_row->measured == std::array<std::size_t, 3>{1, 2, 0});
  CHECK(algorithm_specs().size() == 9);
  CHECK(table.to_text().find("Verify") != std::string::npos);
  CHECK_THROWS_AS(bench_opcounts({{3, 4}}), ContractViolation);
  CHECK_THROWS_AS(bench_opcounts({{3, 0}}), ContractViolation);
}

TEST_CASE("montecarlo edge cases") {
  auto single = montecarlo_failure(4, 1, 1, 10000, 1);
  CHECK(single.failures == 0);
  CHECK(single.formula == 0.0);
  auto crowded = montecarlo_failure(2, 11, 1, 10000, 1);
  CHECK(crowded.failures == 10000);
  CHECK(crowded.formula == 1.0);
  CHECK_THROWS_AS(montecarlo_failure(4, 5, 1, 9999, 1), ContractViolation);

  auto lone = montecarlo_anonymity(1, 1, 1);
  CHECK(lone.sharing == 1);
  CHECK(lone.fraction == 1.0);

  auto a = montecarlo_failure(4, 5, 1, 20000, 7);
  auto b = montecarlo_failure(4, 5, 1, 20000, 7);
  CHECK(a.failures == b.failures);
  CHECK(a.formula == doctest::Approx(keymgmt::failure_probability(4, 5, 1)));
  CHECK(std::abs(a.z) < 5);
}

TEST_CASE("vectors are deterministic and self-checking") {
  auto d1 = scratch_dir("v1");
  auto d2 = scratch_dir("v2");
  auto files = emit_vectors(d1, 1);
  emit_vectors(d2, 1);
  REQUIRE(files.size() >= 6);
  for (const auto& f : files) {
    std::ifstream a(f, std::ios::binary), b(d2 / f.filename(), std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
  auto report = check_vectors(d1);
  CHECK(report.ok());
  CHECK(report.checks > 10);

  // Flip one character inside the signatures file.
  const auto sig = d1 / "signatures.json";
  std::string text;
  {
    std::ifstream in(sig, std::ios::binary);
    text.assign((std::istreambuf_iterator<char>(in)), {});
  }
  auto pos = text.find("\"signature\"");
  REQUIRE(pos != std::string::npos);
  pos = text.find_first_of("0123456789abcdef", text.find(':', pos) + 3);
  text[pos] = text[pos] == '0' ? '1' : '0';
  std::ofstream(sig, std::ios::binary) << text;
  CHECK_FALSE(check_vectors(d1).ok());
  CHECK_FALSE(check_vectors(scratch_dir("empty")).ok());
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("standalone config files override a base config") {
  protocol::SystemConfig base;
  base.price_table = protocol::SystemConfig::linear_prices(base.n_max, 1000);
  auto c = parse_config("seed: 5\ndigits: 2\nprice_per_member: 250\n", base);
  CHECK(c.seed == 5);
  CHECK(c.key_params.digits == 2);
  CHECK(c.key_params.positions == base.key_params.positions);
  CHECK(c.price_table.at(4) == 1000);
  auto same = parse_config("ticket_validity: 9\n", base);
  CHECK(same.price_table == base.price_table);
  CHECK(same.ticket_validity == 9);
  CHECK_THROWS_AS(parse_config("colour: red\n", base), ParseError);
  CHECK_THROWS_AS(parse_config("n_max: 0\n", base), ParseError);
  CHECK_THROWS_AS(parse_config("- 1\n", base), ParseError);
}
