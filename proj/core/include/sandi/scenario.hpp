#pragma once

#include <map>
#include <string>
#include <vector>

#include "sandi/service.hpp"

namespace sandi {

/// A scripted multi-party run: named senders and receivers, a sequence of
/// epochs, and per-epoch actions. Parsed from a JSON run-spec:
///
/// {
///   "config": {"epoch_dur": 100, "E": 2, "val_period": 100,
///              "report_lock": 200, "B_vk": 1, "k": 2, "M": 100, "b": 0.5,
///              "mu": -8, "sigma": 1.1, "sc_init": 100},
///   "senders": ["alice"],
///   "receivers": ["r1"],
///   "epochs": [
///     {"actions": [
///       {"op": "issue", "sender": "alice", "receiver": "r1", "at": 10},
///       {"op": "send", "sender": "alice", "receiver": "r1",
///        "message": "hi", "at": 12},
///       {"op": "report", "receiver": "r1", "sender": "alice", "at": 20}
///     ]}
///   ]
/// }
///
/// Ops: issue (optional "deliver": false holds the tag), deliver, send,
/// report (optional "ignore_lock": true), report_replay (resubmits the last
/// submitted report), report_stale (submits the oldest delivered tag
/// directly, bypassing the receiver). Each action takes an optional
/// "expect": "ok" or "error:<status>"; mismatches fail the run.
struct Scenario {
  struct Action {
    std::string op;
    std::string sender;
    std::string receiver;
    std::string message;
    Timestamp at = 0;  // offset within the epoch
    bool deliver = true;
    bool ignore_lock = false;
    std::string expect = "ok";
  };
  struct Epoch {
    std::vector<Action> actions;
  };

  AsConfig config;
  std::vector<std::string> senders;
  std::vector<std::string> receivers;
  std::vector<Epoch> epochs;
};

Result<Scenario> parse_scenario(const std::string& json_text);
Result<Scenario> load_scenario_file(const std::string& path);

struct ScenarioResult {
  std::string transcript;          // one event per line
  int failed_expectations = 0;
  bool all_proofs_accepted = true;
  std::map<std::string, double> final_scores;
  std::map<std::string, std::vector<long long>> noisy_counts;  // per roll

  bool ok() const { return failed_expectations == 0 && all_proofs_accepted; }
};

/// Derives the stable 16-byte account id for a scenario participant name.
AccountId scenario_account_id(const std::string& name);

/// Runs the scenario against an embedded AS with a logical clock; fully
/// deterministic for a fixed seed.
ScenarioResult run_scenario(const Scenario& scenario, std::uint64_t seed);

/// Runs against an already-running AS (wall clock; sleeps between actions).
/// The remote server's config must match the scenario's.
ScenarioResult run_scenario_remote(const Scenario& scenario,
                                   std::uint64_t seed, AsHandle& handle);

}  // namespace sandi
