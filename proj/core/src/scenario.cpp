#include "sandi/scenario.hpp"

#include <sodium.h>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sandi/receiver.hpp"
#include "sandi/sender.hpp"

namespace sandi {

namespace {

using nlohmann::json;

std::string format_score(double sc) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", sc);
  return buf;
}

struct ChannelState {
  SigKeypair keys;
  std::vector<FullEndorsementTag> delivered;  // everything handed over
  std::vector<FullEndorsementTag> held;       // completed but not delivered
  std::optional<wire::Report> last_submitted;
};

class Runner {
 public:
  Runner(const Scenario& scenario, std::uint64_t seed, AsHandle& handle,
         bool realtime)
      : scenario_(scenario),
        rng_(seed),
        handle_(handle),
        realtime_(realtime) {}

  ScenarioResult run();

  Timestamp now = 0;
  std::function<void(Timestamp)> on_advance;  // drives the embedded clock

 private:
  void line(const std::string& text) {
    transcript_ << text << "\n";
  }

  void expectation(const Scenario::Action& action, Status got) {
    const std::string want = action.expect.empty() ? "ok" : action.expect;
    std::string got_str =
        got == Status::ok ? "ok" : std::string("error:") + to_string(got);
    if (want != got_str) {
      ++result_.failed_expectations;
      line("  expectation-failed want=" + want + " got=" + got_str);
    }
  }

  std::string stamp() const { return "t=" + std::to_string(now); }

  void advance_to(Timestamp t);

  void do_issue(const Scenario::Action& action);
  void do_deliver(const Scenario::Action& action);
  void do_send(const Scenario::Action& action);
  void do_report(const Scenario::Action& action);
  void do_report_replay(const Scenario::Action& action);
  void do_report_stale(const Scenario::Action& action);

  void roll_and_verify(EpochIndex epoch);

  ChannelState& channel(const std::string& sender, const std::string& recv);

  const Scenario& scenario_;
  SeededRandom rng_;
  AsHandle& handle_;
  bool realtime_;

  std::chrono::steady_clock::time_point wall_base_;
  Timestamp logical_base_ = 0;

  PublicParams params_;
  std::map<std::string, SenderClient> senders_;
  std::map<std::string, ReceiverClient> receivers_;
  std::map<std::pair<std::string, std::string>, ChannelState> channels_;

  std::ostringstream transcript_;
  ScenarioResult result_;
};

void Runner::advance_to(Timestamp t) {
  if (t < now) return;
  now = t;
  if (on_advance) {
    on_advance(now);
  }
  if (realtime_) {
    std::this_thread::sleep_until(
        wall_base_ + std::chrono::seconds(now - logical_base_));
  }
}

ChannelState& Runner::channel(const std::string& sender,
                              const std::string& recv) {
  auto key = std::make_pair(sender, recv);
  auto it = channels_.find(key);
  if (it == channels_.end()) {
    ChannelState st;
    st.keys = senders_.at(sender).new_channel_key();
    it = channels_.emplace(key, std::move(st)).first;
  }
  return it->second;
}

void Runner::do_issue(const Scenario::Action& action) {
  SenderClient& sender = senders_.at(action.sender);
  ChannelState& ch = channel(action.sender, action.receiver);
  const std::vector<std::uint8_t> addr(action.receiver.begin(),
                                       action.receiver.end());

  auto req = sender.begin_tag_request(ch.keys.vk, addr, now);
  if (!req) {
    line(stamp() + " issue sender=" + action.sender +
         " receiver=" + action.receiver +
         " error=" + to_string(req.status()));
    expectation(action, req.status());
    return;
  }
  auto tag = handle_.issue_tag(scenario_account_id(action.sender),
                               req.value().com_s, req.value().com_r);
  if (!tag) {
    line(stamp() + " issue sender=" + action.sender +
         " receiver=" + action.receiver +
         " error=" + to_string(tag.status()));
    expectation(action, tag.status());
    return;
  }
  auto full = sender.complete_tag(tag.value(), now);
  if (!full) {
    line(stamp() + " issue sender=" + action.sender +
         " receiver=" + action.receiver +
         " error=" + to_string(full.status()));
    expectation(action, full.status());
    return;
  }
  line(stamp() + " issue sender=" + action.sender +
       " receiver=" + action.receiver +
       " y=" + to_string(tag.value().reputation) + " ok");

  if (!action.deliver) {
    ch.held.push_back(std::move(full).value());
    expectation(action, Status::ok);
    return;
  }
  auto y = receivers_.at(action.receiver).receive_tag(full.value(), now);
  if (!y) {
    line(stamp() + " receive receiver=" + action.receiver +
         " error=" + to_string(y.status()));
    expectation(action, y.status());
    return;
  }
  ch.delivered.push_back(std::move(full).value());
  line(stamp() + " receive receiver=" + action.receiver + " ok");
  expectation(action, Status::ok);
}

void Runner::do_deliver(const Scenario::Action& action) {
  ChannelState& ch = channel(action.sender, action.receiver);
  if (ch.held.empty()) {
    line(stamp() + " deliver receiver=" + action.receiver + " error=empty");
    expectation(action, Status::empty_channel);
    return;
  }
  FullEndorsementTag full = ch.held.front();
  ch.held.erase(ch.held.begin());
  auto y = receivers_.at(action.receiver).receive_tag(full, now);
  if (!y) {
    line(stamp() + " deliver receiver=" + action.receiver +
         " error=" + to_string(y.status()));
    expectation(action, y.status());
    return;
  }
  ch.delivered.push_back(std::move(full));
  line(stamp() + " deliver receiver=" + action.receiver + " ok");
  expectation(action, Status::ok);
}

void Runner::do_send(const Scenario::Action& action) {
  SenderClient& sender = senders_.at(action.sender);
  ChannelState& ch = channel(action.sender, action.receiver);
  const std::vector<std::uint8_t> addr(action.receiver.begin(),
                                       action.receiver.end());
  const std::vector<std::uint8_t> msg(action.message.begin(),
                                      action.message.end());
  const Signature sig = sender.sign_channel_message(ch.keys.vk, addr, msg);
  const auto verdict = receivers_.at(action.receiver)
                           .verify_channel_message(ch.keys.vk, msg, sig, now);
  line(stamp() + " send sender=" + action.sender +
       " receiver=" + action.receiver +
       " sig=" + (verdict.signature_ok ? "ok" : "bad") +
       " endorsed=" + (verdict.endorsed ? "yes" : "no"));
  expectation(action,
              verdict.signature_ok ? Status::ok : Status::bad_signature);
}

void Runner::do_report(const Scenario::Action& action) {
  ChannelState& ch = channel(action.sender, action.receiver);
  auto rep = receivers_.at(action.receiver)
                 .report(ch.keys.vk, now, action.ignore_lock);
  if (!rep) {
    line(stamp() + " report receiver=" + action.receiver +
         " sender=" + action.sender + " error=" + to_string(rep.status()));
    expectation(action, rep.status());
    return;
  }
  auto submitted = handle_.submit_report(rep.value());
  if (!submitted) {
    line(stamp() + " report receiver=" + action.receiver +
         " sender=" + action.sender +
         " error=" + to_string(submitted.status()));
    expectation(action, submitted.status());
    return;
  }
  ch.last_submitted = rep.value();
  line(stamp() + " report receiver=" + action.receiver +
       " sender=" + action.sender + " ok");
  expectation(action, Status::ok);
}

void Runner::do_report_replay(const Scenario::Action& action) {
  ChannelState& ch = channel(action.sender, action.receiver);
  if (!ch.last_submitted) {
    line(stamp() + " report-replay error=nothing-submitted");
    expectation(action, Status::empty_channel);
    return;
  }
  auto submitted = handle_.submit_report(*ch.last_submitted);
  if (!submitted) {
    line(stamp() + " report-replay receiver=" + action.receiver +
         " sender=" + action.sender +
         " error=" + to_string(submitted.status()));
    expectation(action, submitted.status());
    return;
  }
  line(stamp() + " report-replay receiver=" + action.receiver +
       " sender=" + action.sender + " ok");
  expectation(action, Status::ok);
}

void Runner::do_report_stale(const Scenario::Action& action) {
  ChannelState& ch = channel(action.sender, action.receiver);
  if (ch.delivered.empty()) {
    line(stamp() + " report-stale error=nothing-delivered");
    expectation(action, Status::empty_channel);
    return;
  }
  const FullEndorsementTag& full = ch.delivered.front();
  auto submitted = handle_.submit_report(
      wire::Report{full.tag, full.proof, full.blind_token});
  if (!submitted) {
    line(stamp() + " report-stale receiver=" + action.receiver +
         " sender=" + action.sender +
         " error=" + to_string(submitted.status()));
    expectation(action, submitted.status());
    return;
  }
  line(stamp() + " report-stale receiver=" + action.receiver +
       " sender=" + action.sender + " ok");
  expectation(action, Status::ok);
}

void Runner::roll_and_verify(EpochIndex epoch) {
  auto rolled = handle_.roll_epoch(epoch);
  if (!rolled) {
    line(stamp() + " roll epoch=" + std::to_string(epoch) +
         " error=" + to_string(rolled.status()));
    ++result_.failed_expectations;
    return;
  }
  // Stable ordering: by participant name.
  for (const auto& name : scenario_.senders) {
    const AccountId id = scenario_account_id(name);
    for (const auto& entry : rolled.value().entries) {
      if (entry.id != id) continue;
      line(stamp() + " roll epoch=" + std::to_string(epoch) +
           " sender=" + name + " sc=" + format_score(entry.new_score) +
           " noisy=" + std::to_string(entry.noisy_count));
      result_.final_scores[name] = entry.new_score;
      result_.noisy_counts[name].push_back(entry.noisy_count);

      auto proof = handle_.proof_of_reports(id, epoch);
      if (!proof) {
        line(stamp() + " proof sender=" + name +
             " error=" + to_string(proof.status()));
        result_.all_proofs_accepted = false;
        continue;
      }
      const EpochIndex source = epoch - params_.expiry_epochs;
      bool verdict;
      if (proof.value().tokens.empty() && proof.value().noisy_count == 0) {
        verdict = true;  // nothing claimed, nothing to check
      } else {
        auto esk = senders_.at(name).epoch_secret(source);
        verdict = esk.ok() &&
                  SenderClient::verify_report_proof(proof.value().tokens,
                                                    proof.value().noisy_count,
                                                    esk.value());
      }
      line(stamp() + " proof sender=" + name +
           " epoch=" + std::to_string(epoch) +
           " claimed=" + std::to_string(proof.value().noisy_count) +
           " verdict=" + (verdict ? "accept" : "reject"));
      if (!verdict) {
        result_.all_proofs_accepted = false;
      }
    }
  }
}

ScenarioResult Runner::run() {
  auto params = handle_.params();
  if (!params) {
    result_.transcript = "params error=" + std::string(to_string(params.status())) + "\n";
    ++result_.failed_expectations;
    return result_;
  }
  params_ = params.value();

  EpochIndex base_epoch = 0;
  if (realtime_) {
    // Align with the next epoch boundary of the running server.
    const auto wall_now = std::chrono::system_clock::now();
    const Timestamp wall_secs =
        std::chrono::duration_cast<std::chrono::seconds>(
            wall_now.time_since_epoch())
            .count();
    base_epoch = params_.epoch_of(wall_secs) + 1;
    logical_base_ = params_.epoch_start(base_epoch);
    // Slack past each boundary so second-granularity server clocks have
    // definitely ticked over.
    wall_base_ = std::chrono::steady_clock::now() +
                 std::chrono::seconds(logical_base_ - wall_secs) +
                 std::chrono::milliseconds(100);
    now = logical_base_;
    std::this_thread::sleep_until(wall_base_);
  } else {
    now = 0;
    if (on_advance) {
      on_advance(now);
    }
  }

  for (const auto& name : scenario_.senders) {
    senders_.emplace(name, SenderClient(params_, rng_));
  }
  for (const auto& name : scenario_.receivers) {
    receivers_.emplace(
        name, ReceiverClient(params_, std::vector<std::uint8_t>(
                                          name.begin(), name.end())));
  }

  for (const auto& name : scenario_.senders) {
    auto reg = handle_.register_sender(scenario_account_id(name));
    line(stamp() + " register sender=" + name +
         (reg ? " ok" : std::string(" error=") + to_string(reg.status())));
    if (!reg) ++result_.failed_expectations;
  }

  for (std::size_t block = 0; block < scenario_.epochs.size(); ++block) {
    const EpochIndex epoch = base_epoch + static_cast<EpochIndex>(block);
    advance_to(params_.epoch_start(epoch));
    if (block > 0) {
      roll_and_verify(epoch - 1);
    }

    // Per-epoch key registration for every sender.
    for (const auto& name : scenario_.senders) {
      SenderClient& sender = senders_.at(name);
      const GroupElement& epk = sender.begin_epoch(now);
      auto reg = handle_.register_epoch_key(scenario_account_id(name), epk);
      line(stamp() + " epoch-key sender=" + name +
           " epoch=" + std::to_string(epoch) +
           (reg ? " ok" : std::string(" error=") + to_string(reg.status())));
      if (!reg) ++result_.failed_expectations;
    }

    for (const auto& action : scenario_.epochs[block].actions) {
      advance_to(params_.epoch_start(epoch) + action.at);
      if (action.op == "issue") {
        do_issue(action);
      } else if (action.op == "deliver") {
        do_deliver(action);
      } else if (action.op == "send") {
        do_send(action);
      } else if (action.op == "report") {
        do_report(action);
      } else if (action.op == "report_replay") {
        do_report_replay(action);
      } else if (action.op == "report_stale") {
        do_report_stale(action);
      } else {
        line(stamp() + " unknown-op " + action.op);
        ++result_.failed_expectations;
      }
    }
  }

  // Final rolls so the last blocks' reports reach the score.
  const EpochIndex last =
      base_epoch + static_cast<EpochIndex>(scenario_.epochs.size()) - 1;
  for (EpochIndex epoch = last; epoch <= last + params_.expiry_epochs;
       ++epoch) {
    advance_to(params_.epoch_start(epoch + 1));
    roll_and_verify(epoch);
  }

  for (const auto& name : scenario_.senders) {
    std::string noisy = "[";
    for (std::size_t i = 0; i < result_.noisy_counts[name].size(); ++i) {
      noisy += (i ? "," : "") + std::to_string(result_.noisy_counts[name][i]);
    }
    noisy += "]";
    line("final sender=" + name +
         " sc=" + format_score(result_.final_scores[name]) + " noisy=" +
         noisy + " proofs=" + (result_.all_proofs_accepted ? "accept" : "reject"));
  }
  result_.transcript = transcript_.str();
  return result_;
}

Result<Scenario> parse_scenario_json(const json& j) {
  Scenario sc;
  try {
    const auto& cfg = j.at("config");
    sc.config.epoch_dur = cfg.at("epoch_dur").get<Timestamp>();
    sc.config.expiry_epochs = cfg.at("E").get<int>();
    sc.config.val_period = cfg.at("val_period").get<Timestamp>();
    sc.config.report_lock = cfg.at("report_lock").get<Timestamp>();
    sc.config.max_keys = cfg.at("B_vk").get<int>();
    sc.config.score.tolerance = cfg.at("k").get<int>();
    sc.config.score.cap = cfg.at("M").get<int>();
    sc.config.score.recovery = cfg.at("b").get<double>();
    sc.config.noise.mu = cfg.at("mu").get<double>();
    sc.config.noise.noise_std = cfg.at("sigma").get<double>();
    sc.config.noise.sensitivity = sc.config.max_keys;
    sc.config.thresholds = default_thresholds(sc.config.score);
    sc.config.sc_init = cfg.value("sc_init",
                                  static_cast<double>(sc.config.score.cap));

    sc.senders = j.at("senders").get<std::vector<std::string>>();
    sc.receivers = j.at("receivers").get<std::vector<std::string>>();
    for (const auto& ep : j.at("epochs")) {
      Scenario::Epoch epoch;
      for (const auto& a : ep.at("actions")) {
        Scenario::Action action;
        action.op = a.at("op").get<std::string>();
        action.sender = a.value("sender", "");
        action.receiver = a.value("receiver", "");
        action.message = a.value("message", "");
        action.at = a.value("at", Timestamp{0});
        action.deliver = a.value("deliver", true);
        action.ignore_lock = a.value("ignore_lock", false);
        action.expect = a.value("expect", "ok");
        epoch.actions.push_back(std::move(action));
      }
      sc.epochs.push_back(std::move(epoch));
    }
  } catch (const json::exception& e) {
    return Error{Status::malformed, std::string("run-spec: ") + e.what()};
  }
  if (!sc.config.valid()) {
    return Error{Status::invalid_parameter, "run-spec config invalid"};
  }
  if (sc.epochs.empty() || sc.senders.empty() || sc.receivers.empty()) {
    return Error{Status::invalid_parameter, "run-spec needs parties and epochs"};
  }
  return sc;
}

}  // namespace

Result<Scenario> parse_scenario(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) {
    return Error{Status::malformed, "run-spec is not valid JSON"};
  }
  return parse_scenario_json(j);
}

Result<Scenario> load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return Error{Status::invalid_parameter, "cannot open run-spec: " + path};
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

AccountId scenario_account_id(const std::string& name) {
  std::array<std::uint8_t, 32> digest;
  crypto_hash_sha256(digest.data(),
                     reinterpret_cast<const std::uint8_t*>(name.data()),
                     name.size());
  AccountId id;
  std::copy_n(digest.begin(), id.size(), id.begin());
  return id;
}

ScenarioResult run_scenario(const Scenario& scenario, std::uint64_t seed) {
  SeededRandom server_rng(seed ^ 0x5eed5eed5eed5eedULL);
  AccountabilityServer server(scenario.config, server_rng);

  // Shared logical clock between the driver and the embedded AS.
  auto clock = std::make_shared<Timestamp>(0);
  InProcessAs handle(server, [clock] { return *clock; }, server_rng);

  Runner runner(scenario, seed, handle, false);
  runner.on_advance = [clock](Timestamp t) { *clock = t; };
  return runner.run();
}

ScenarioResult run_scenario_remote(const Scenario& scenario,
                                   std::uint64_t seed, AsHandle& handle) {
  Runner runner(scenario, seed, handle, true);
  return runner.run();
}

}  // namespace sandi
