#pragma once

// Scenario files (YAML, `version: 1`) and the runner that replays them
// through a Simulation.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsa/harness/simulation.hpp"

namespace gsa::harness {

inline constexpr int kScenarioVersion = 1;

struct CastMember {
  std::string name;
  std::string identifier;
  std::optional<payment::Amount> card;
  bool detected = true;
};

enum class EventKind { GroupSetup, Ticket, Accredit, Replay, Pay, Advance };
std::string_view event_name(EventKind k);

/// Optional checks on one event's outcome.
struct Expectation {
  std::optional<std::string> outcome;
  std::optional<std::size_t> j;
  std::optional<std::string> verdict;
  std::optional<std::size_t> group_size;
  std::optional<payment::Amount> amount;
  std::optional<std::string> reason;
  std::optional<std::string> status;
  std::optional<std::size_t> shares;

  bool empty() const;
};

struct ScriptEvent {
  EventKind kind = EventKind::Advance;
  std::size_t line = 0;
  std::vector<std::string> names;  // group members, withholders or payers
  std::int64_t seconds = 0;
  std::string terms;
  Expectation expect;
};

struct Scenario {
  std::string name;
  std::string description;
  protocol::SystemConfig config;
  std::string verifier_id = "gate-1";
  double drop_probability = 0.0;
  std::vector<CastMember> cast;
  std::vector<ScriptEvent> script;
};

/// Throws ParseError (with the offending line where known).
Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::filesystem::path& path);

/// A standalone config file: the keys of a scenario's `config` block plus
/// `seed`. Present keys override `base`; the result is validated.
protocol::SystemConfig parse_config(const std::string& yaml_text, protocol::SystemConfig base);
protocol::SystemConfig load_config(const std::filesystem::path& path, protocol::SystemConfig base);

struct EventRecord {
  std::size_t index = 0;
  EventKind kind = EventKind::Advance;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> mismatches;
  bool checked = false;
};

struct ScenarioReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<EventRecord> events;
  std::vector<std::string> settlement_texts;
  std::size_t frames = 0;
  Digest trace_digest{};
  std::size_t trace_identifier_hits = 0;
  std::size_t settlement_disclosure_hits = 0;

  std::size_t expectations() const;
  std::size_t mismatches() const;
  /// All expectations met and both disclosure scans clean.
  bool passed() const;
  /// Line-oriented machine-readable report.
  std::string to_text() const;
  std::string summary() const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
};

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options = {});
ScenarioReport run_scenario(const std::filesystem::path& path, const RunOptions& options = {});

/// Runs the scenario and hands back the simulation for inspection.
ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options, std::unique_ptr<Simulation>& sim);

}  // namespace gsa::harness
