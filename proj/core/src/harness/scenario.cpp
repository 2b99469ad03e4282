#include "gsa/harness/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gsa/errors.hpp"

namespace gsa::harness {

namespace {

std::size_t line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : static_cast<std::size_t>(n.Mark().line) + 1; }

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) { throw ParseError(what, line_of(n)); }

template <typename T>
T as(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, what + " has the wrong type");
  }
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) fail(map, where + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = as<std::string>(kv.first, "key");
    if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
  }
}

std::vector<std::string> name_list(const YAML::Node& n, const std::string& what) {
  if (!n.IsDefined() || n.IsNull()) return {};
  if (!n.IsSequence()) fail(n, what + " must be a list of names");
  std::vector<std::string> out;
  for (const auto& item : n) out.push_back(as<std::string>(item, what + " entry"));
  return out;
}

Expectation parse_expect(const YAML::Node& n) {
  check_keys(n, {"outcome", "j", "verdict", "group_size", "amount", "reason", "status", "shares"}, "expect");
  Expectation e;
  if (n["outcome"]) e.outcome = as<std::string>(n["outcome"], "outcome");
  if (n["j"]) e.j = as<std::size_t>(n["j"], "j");
  if (n["verdict"]) e.verdict = as<std::string>(n["verdict"], "verdict");
  if (n["group_size"]) e.group_size = as<std::size_t>(n["group_size"], "group_size");
  if (n["amount"]) e.amount = as<payment::Amount>(n["amount"], "amount");
  if (n["reason"]) e.reason = as<std::string>(n["reason"], "reason");
  if (n["status"]) e.status = as<std::string>(n["status"], "status");
  if (n["shares"]) e.shares = as<std::size_t>(n["shares"], "shares");
  return e;
}

ScriptEvent parse_event(const YAML::Node& n) {
  if (!n.IsMap()) fail(n, "script entries must be mappings");
  ScriptEvent ev;
  ev.line = line_of(n);
  std::optional<std::string> action;
  for (const auto& kv : n) {
    const auto key = as<std::string>(kv.first, "key");
    if (key == "expect") {
      ev.expect = parse_expect(kv.second);
      continue;
    }
    if (action) fail(kv.first, "script entry has two actions: " + *action + " and " + key);
    action = key;
    const auto& v = kv.second;
    if (key == "group_setup") {
      ev.kind = EventKind::GroupSetup;
      ev.names = name_list(v, "group_setup");
      if (ev.names.empty()) fail(v, "group_setup needs at least one member");
    } else if (key == "ticket") {
      ev.kind = EventKind::Ticket;
      if (v.IsMap()) {
        check_keys(v, {"terms"}, "ticket");
        if (v["terms"]) ev.terms = as<std::string>(v["terms"], "terms");
      } else if (!v.IsNull()) {
        fail(v, "ticket takes an optional mapping");
      }
    } else if (key == "accredit") {
      ev.kind = EventKind::Accredit;
      if (v.IsMap()) {
        check_keys(v, {"withhold"}, "accredit");
        ev.names = name_list(v["withhold"], "withhold");
      } else if (!v.IsNull()) {
        fail(v, "accredit takes an optional mapping");
      }
    } else if (key == "replay") {
      ev.kind = EventKind::Replay;
    } else if (key == "pay") {
      ev.kind = EventKind::Pay;
      ev.names = name_list(v, "pay");
      if (ev.names.empty()) fail(v, "pay needs at least one payer");
    } else if (key == "advance") {
      ev.kind = EventKind::Advance;
      ev.seconds = as<std::int64_t>(v, "advance");
      if (ev.seconds < 0) fail(v, "advance must be non-negative");
    } else {
      fail(kv.first, "unknown action '" + key + "'");
    }
  }
  if (!action) fail(n, "script entry has no action");
  return ev;
}

void apply_config(const YAML::Node& cfg, protocol::SystemConfig& c, std::optional<payment::Amount>& per_member,
                  bool allow_seed) {
  std::set<std::string> keys{"positions", "digits", "n_max", "ticket_validity", "price_per_member", "prices"};
  if (allow_seed) keys.insert("seed");
  check_keys(cfg, keys, "config");
  if (cfg["seed"]) c.seed = as<std::uint64_t>(cfg["seed"], "seed");
  if (cfg["positions"]) c.key_params.positions = as<std::size_t>(cfg["positions"], "positions");
  if (cfg["digits"]) c.key_params.digits = as<std::size_t>(cfg["digits"], "digits");
  if (cfg["n_max"]) c.n_max = as<std::size_t>(cfg["n_max"], "n_max");
  if (cfg["ticket_validity"]) c.ticket_validity = as<std::int64_t>(cfg["ticket_validity"], "ticket_validity");
  if (cfg["price_per_member"]) per_member = as<payment::Amount>(cfg["price_per_member"], "price_per_member");
  if (const auto prices = cfg["prices"]) {
    if (!prices.IsMap()) fail(prices, "prices must map group size to amount");
    per_member.reset();
    c.price_table.clear();
    for (const auto& kv : prices)
      c.price_table[as<std::size_t>(kv.first, "price key")] = as<payment::Amount>(kv.second, "price");
  }
}

void finish_config(const YAML::Node& where, protocol::SystemConfig& c, const std::optional<payment::Amount>& per_member) {
  if (per_member) c.price_table = protocol::SystemConfig::linear_prices(c.n_max, *per_member);
  try {
    c.validate();
  } catch (const ConfigurationError& e) {
    fail(where, e.what());
  }
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void expect_eq(EventRecord& rec, const std::string& key, const std::optional<std::string>& want,
               const std::string& got) {
  if (!want) return;
  rec.checked = true;
  if (*want != got) rec.mismatches.push_back(key + " expected " + *want + " got " + got);
}

template <typename T>
void expect_eq(EventRecord& rec, const std::string& key, const std::optional<T>& want, const T& got) {
  if (!want) return;
  rec.checked = true;
  if (*want != got) rec.mismatches.push_back(key + " expected " + str(*want) + " got " + str(got));
}

}  // namespace

std::string_view event_name(EventKind k) {
  switch (k) {
    case EventKind::GroupSetup: return "group_setup";
    case EventKind::Ticket: return "ticket";
    case EventKind::Accredit: return "accredit";
    case EventKind::Replay: return "replay";
    case EventKind::Pay: return "pay";
    case EventKind::Advance: return "advance";
  }
  return "unknown";
}

bool Expectation::empty() const {
  return !outcome && !j && !verdict && !group_size && !amount && !reason && !status && !shares;
}

Scenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }
  check_keys(root, {"version", "name", "description", "seed", "config", "verifier", "drop_probability", "cast", "script"},
             "scenario");
  if (!root["version"]) fail(root, "missing 'version'");
  if (as<int>(root["version"], "version") != kScenarioVersion) fail(root["version"], "unsupported scenario version");

  Scenario s;
  if (!root["name"]) fail(root, "missing 'name'");
  s.name = as<std::string>(root["name"], "name");
  if (root["description"]) s.description = as<std::string>(root["description"], "description");
  if (root["seed"]) s.config.seed = as<std::uint64_t>(root["seed"], "seed");
  if (root["verifier"]) s.verifier_id = as<std::string>(root["verifier"], "verifier");
  if (root["drop_probability"]) s.drop_probability = as<double>(root["drop_probability"], "drop_probability");

  std::optional<payment::Amount> per_member = 1000;
  if (const auto cfg = root["config"]) apply_config(cfg, s.config, per_member, false);
  finish_config(root["config"] ? root["config"] : root, s.config, per_member);

  const auto cast = root["cast"];
  if (!cast || !cast.IsSequence()) fail(root, "missing 'cast' list");
  std::set<std::string> names;
  for (const auto& c : cast) {
    check_keys(c, {"name", "id", "card", "detected"}, "cast entry");
    if (!c["name"] || !c["id"]) fail(c, "cast entries need 'name' and 'id'");
    CastMember m;
    m.name = as<std::string>(c["name"], "name");
    m.identifier = as<std::string>(c["id"], "id");
    if (c["card"]) m.card = as<payment::Amount>(c["card"], "card");
    if (c["detected"]) m.detected = as<bool>(c["detected"], "detected");
    if (!names.insert(m.name).second) fail(c, "duplicate cast name " + m.name);
    s.cast.push_back(std::move(m));
  }

  const auto script = root["script"];
  if (!script || !script.IsSequence()) fail(root, "missing 'script' list");
  for (const auto& item : script) {
    auto ev = parse_event(item);
    for (const auto& n : ev.names)
      if (!names.count(n)) throw ParseError("unknown cast member '" + n + "'", ev.line);
    s.script.push_back(std::move(ev));
  }
  return s;
}

protocol::SystemConfig parse_config(const std::string& yaml_text, protocol::SystemConfig base) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line) + 1);
  }
  if (!root.IsMap()) fail(root, "config file must be a mapping");
  std::optional<payment::Amount> per_member;
  apply_config(root, base, per_member, true);
  finish_config(root, base, per_member);
  return base;
}

protocol::SystemConfig load_config(const std::filesystem::path& path, protocol::SystemConfig base) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), std::move(base));
  } catch (const ParseError& e) {
    throw e.in(path.filename().string());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ParseError& e) {
    throw e.in(path.filename().string());
  }
}

std::size_t ScenarioReport::expectations() const {
  std::size_t n = 0;
  for (const auto& e : events) n += e.checked ? 1 : 0;
  return n;
}

std::size_t ScenarioReport::mismatches() const {
  std::size_t n = 0;
  for (const auto& e : events) n += e.mismatches.empty() ? 0 : 1;
  return n;
}

bool ScenarioReport::passed() const {
  return mismatches() == 0 && trace_identifier_hits == 0 && settlement_disclosure_hits == 0;
}

std::string ScenarioReport::to_text() const {
  std::ostringstream os;
  os << "report v1\n";
  os << "scenario " << name << "\n";
  os << "seed " << seed << "\n";
  for (const auto& e : events) {
    os << "event " << e.index << " " << event_name(e.kind);
    for (const auto& [k, v] : e.fields) os << " " << k << "=" << v;
    os << "\n";
    if (e.checked) os << "expect " << e.index << " " << (e.mismatches.empty() ? "ok" : "mismatch") << "\n";
    for (const auto& m : e.mismatches) os << "mismatch " << e.index << " " << m << "\n";
  }
  for (const auto& s : settlement_texts) {
    std::istringstream lines(s);
    for (std::string line; std::getline(lines, line);) os << "| " << line << "\n";
  }
  os << "frames " << frames << "\n";
  os << "trace_digest " << to_hex(trace_digest) << "\n";
  os << "disclosure trace_hits=" << trace_identifier_hits << " settlement_hits=" << settlement_disclosure_hits << "\n";
  os << "result " << (passed() ? "pass" : "fail") << "\n";
  return os.str();
}

std::string ScenarioReport::summary() const {
  std::ostringstream os;
  os << name << ": " << events.size() << " events, " << (expectations() - mismatches()) << "/" << expectations()
     << " expectations met, " << frames << " frames, trace " << to_hex(trace_digest).substr(0, 16) << ", "
     << (passed() ? "PASS" : "FAIL");
  return os.str();
}

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options, std::unique_ptr<Simulation>& sim) {
  auto config = scenario.config;
  if (options.seed) config.seed = *options.seed;
  sim = std::make_unique<Simulation>(config, scenario.verifier_id, scenario.drop_probability);
  for (const auto& c : scenario.cast) sim->add_user(c.name, c.identifier, c.card, c.detected);

  ScenarioReport report;
  report.name = scenario.name;
  report.seed = config.seed;
  std::size_t index = 0;
  for (const auto& ev : scenario.script) {
    EventRecord rec;
    rec.index = ++index;
    rec.kind = ev.kind;
    const auto& x = ev.expect;
    auto field = [&](std::string k, std::string v) { rec.fields.emplace_back(std::move(k), std::move(v)); };

    switch (ev.kind) {
      case EventKind::GroupSetup: {
        const auto out = sim->group_setup(ev.names);
        field("outcome", out.outcome);
        field("t", str(ev.names.size()));
        if (out.outcome == "ok") field("j", str(out.roster.j));
        expect_eq(rec, "outcome", x.outcome, out.outcome);
        expect_eq(rec, "j", x.j, out.roster.j);
        break;
      }
      case EventKind::Ticket: {
        sim->issue_ticket(ev.terms);
        field("at", str(sim->transport().now()));
        expect_eq(rec, "outcome", x.outcome, std::string("ok"));
        break;
      }
      case EventKind::Accredit:
      case EventKind::Replay: {
        const auto out = ev.kind == EventKind::Accredit ? sim->accredit(ev.names) : sim->replay();
        field("outcome", out.outcome);
        std::string verdict = "none", reason = "none";
        std::size_t size = 0;
        payment::Amount amount = 0;
        if (out.result) {
          verdict = std::string(protocol::verdict_name(out.result->verdict));
          reason = out.result->reason;
          size = out.result->group_size;
          amount = out.result->amount_due;
          field("verdict", verdict);
          field("group_size", str(size));
          field("amount", str(amount));
          field("reason", reason);
        }
        expect_eq(rec, "outcome", x.outcome, out.outcome);
        expect_eq(rec, "verdict", x.verdict, verdict);
        expect_eq(rec, "reason", x.reason, reason);
        expect_eq(rec, "group_size", x.group_size, size);
        expect_eq(rec, "amount", x.amount, amount);
        break;
      }
      case EventKind::Pay: {
        const auto s = sim->pay(ev.names);
        const std::string status = s.settled() ? "settled" : "declined";
        const std::string reason(payment::reason_name(s.reason));
        field("status", status);
        field("reason", reason);
        field("total", str(s.total));
        field("shares", str(s.shares.size()));
        report.settlement_texts.push_back(s.to_text());
        expect_eq(rec, "status", x.status, status);
        expect_eq(rec, "reason", x.reason, reason);
        expect_eq(rec, "amount", x.amount, s.total);
        expect_eq(rec, "shares", x.shares, s.shares.size());
        break;
      }
      case EventKind::Advance:
        sim->advance(ev.seconds);
        field("now", str(sim->transport().now()));
        break;
    }
    report.events.push_back(std::move(rec));
  }

  const auto& tr = sim->transport();
  report.frames = tr.trace().size();
  report.trace_digest = tr.trace_digest();
  report.trace_identifier_hits = identifier_hits(tr.trace_bytes(), sim->identifiers(), config.key_params.digits);
  const auto ids = sim->identifiers();
  const auto pseudonyms = sim->pseudonyms();
  for (const auto& s : sim->settlements()) report.settlement_disclosure_hits += settlement_hits(s.to_text(), ids, pseudonyms);
  return report;
}

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options) {
  std::unique_ptr<Simulation> sim;
  return run_scenario(scenario, options, sim);
}

ScenarioReport run_scenario(const std::filesystem::path& path, const RunOptions& options) {
  return run_scenario(load_scenario(path), options);
}

}  // namespace gsa::harness
