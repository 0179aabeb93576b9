#include "sandi/sim/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sandi::sim {

namespace {

using nlohmann::json;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

Result<Instance> parse_instance(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) {
    return Error{Status::malformed, "instance is not valid JSON"};
  }
  Instance inst;
  try {
    for (const auto& a : j.at("archetypes")) {
      ScriptArchetype arch;
      const auto reward = a.at("exp_reward").get<std::vector<double>>();
      const auto report = a.at("exp_report").get<std::vector<double>>();
      if (reward.size() != kReputationLevels ||
          report.size() != kReputationLevels) {
        return Error{Status::malformed, "archetype vectors must have 4 entries"};
      }
      std::copy(reward.begin(), reward.end(), arch.exp_reward.begin());
      std::copy(report.begin(), report.end(), arch.exp_report.begin());
      inst.env.archetypes.push_back(arch);
    }
    const auto& score = j.at("score");
    inst.env.score.tolerance = score.at("k").get<int>();
    inst.env.score.cap = score.at("M").get<int>();
    inst.env.score.recovery = score.at("b").get<double>();
    inst.env.thresholds = default_thresholds(inst.env.score);
    if (j.contains("thresholds")) {
      const auto cuts = j.at("thresholds").get<std::vector<double>>();
      if (cuts.size() != 3) {
        return Error{Status::malformed, "thresholds must have 3 cut points"};
      }
      std::copy(cuts.begin(), cuts.end(), inst.env.thresholds.cuts.begin());
    }
    inst.env.noise = j.at("noise").get<std::vector<long long>>();
    inst.env.horizon = j.at("horizon").get<int>();
    inst.env.report_budget = j.at("budget").get<long long>();
    inst.sc0 = j.at("sc0").get<double>();
    if (j.contains("availability")) {
      inst.env.availability =
          j.at("availability").get<std::vector<std::vector<int>>>();
    }
    inst.env.delay_epochs = j.value("delay", 0);
    if (j.contains("flush_noise")) {
      inst.env.flush_noise = j.at("flush_noise").get<std::vector<long long>>();
    }
  } catch (const json::exception& e) {
    return Error{Status::malformed, std::string("instance: ") + e.what()};
  }
  if (!inst.env.valid()) {
    return Error{Status::invalid_parameter, "instance violates constraints"};
  }
  if (inst.sc0 > static_cast<double>(inst.env.score.cap)) {
    return Error{Status::invalid_parameter, "sc0 exceeds the score cap"};
  }
  return inst;
}

Result<Instance> load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return Error{Status::invalid_parameter, "cannot open instance: " + path};
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

std::string instance_to_json(const Instance& instance) {
  json j;
  for (const auto& a : instance.env.archetypes) {
    json arch;
    arch["exp_reward"] =
        std::vector<double>(a.exp_reward.begin(), a.exp_reward.end());
    arch["exp_report"] =
        std::vector<double>(a.exp_report.begin(), a.exp_report.end());
    j["archetypes"].push_back(arch);
  }
  j["score"] = {{"k", instance.env.score.tolerance},
                {"M", instance.env.score.cap},
                {"b", instance.env.score.recovery}};
  j["thresholds"] = std::vector<double>(instance.env.thresholds.cuts.begin(),
                                        instance.env.thresholds.cuts.end());
  j["noise"] = instance.env.noise;
  j["horizon"] = instance.env.horizon;
  j["budget"] = instance.env.report_budget;
  j["sc0"] = instance.sc0;
  if (!instance.env.availability.empty()) {
    j["availability"] = instance.env.availability;
  }
  if (instance.env.delay_epochs > 0) {
    j["delay"] = instance.env.delay_epochs;
    j["flush_noise"] = instance.env.flush_noise;
  }
  return j.dump(2);
}

Instance random_tiny_instance(RandomSource& rng, bool violate_growth) {
  auto pick = [&](long long lo, long long hi) {
    return lo + static_cast<long long>(rng.next_u64() %
                                       static_cast<std::uint64_t>(hi - lo + 1));
  };

  for (;;) {
    Instance inst;
    const int n_arch = violate_growth ? static_cast<int>(pick(2, 3))
                                      : static_cast<int>(pick(1, 3));
    for (int a = 0; a < n_arch; ++a) {
      ScriptArchetype arch;
      double reward = round2(0.1 + rng.next_unit() * 1.5);
      double report = round2(0.3 + rng.next_unit() * 0.7);
      for (int lvl = 0; lvl < kReputationLevels; ++lvl) {
        const auto idx = static_cast<std::size_t>(lvl);
        arch.exp_reward[idx] = reward;
        arch.exp_report[idx] = report;
        reward = round2(reward + rng.next_unit() * 0.5);
        report = round2(std::max(0.05, report - rng.next_unit() * 0.2));
      }
      // Recheck ordering after rounding.
      for (int lvl = 1; lvl < kReputationLevels; ++lvl) {
        const auto idx = static_cast<std::size_t>(lvl);
        arch.exp_reward[idx] =
            std::max(arch.exp_reward[idx], arch.exp_reward[idx - 1]);
        arch.exp_report[idx] =
            std::min(arch.exp_report[idx], arch.exp_report[idx - 1]);
      }
      inst.env.archetypes.push_back(arch);
    }

    inst.env.score.tolerance = static_cast<int>(pick(1, 3));
    inst.env.score.cap = static_cast<int>(pick(4, 8));
    inst.env.score.recovery = pick(0, 1) == 0 ? 0.5 : 1.0;
    inst.env.thresholds = default_thresholds(inst.env.score);
    inst.env.horizon = static_cast<int>(pick(0, 3));
    inst.env.report_budget = pick(0, 5);
    for (int e = 0; e <= inst.env.horizon; ++e) {
      inst.env.noise.push_back(-pick(1, 2));
    }
    const double cap = static_cast<double>(inst.env.score.cap);
    switch (pick(0, 2)) {
      case 0:
        inst.sc0 = cap;
        break;
      case 1:
        inst.sc0 = cap - 1.0;
        break;
      default:
        inst.sc0 = std::floor(cap / 2.0);
        break;
    }

    if (violate_growth && inst.env.horizon >= 1) {
      // The most rewarding archetype exists only in the earliest epoch.
      std::size_t best = 0;
      for (std::size_t a = 1; a < inst.env.archetypes.size(); ++a) {
        if (rew_tilde(inst.env.archetypes[a], ReputationLevel::very_high) >
            rew_tilde(inst.env.archetypes[best], ReputationLevel::very_high)) {
          best = a;
        }
      }
      std::vector<int> without;
      for (std::size_t a = 0; a < inst.env.archetypes.size(); ++a) {
        if (a != best) without.push_back(static_cast<int>(a));
      }
      if (without.empty()) {
        continue;
      }
      std::vector<int> all(inst.env.archetypes.size());
      for (std::size_t a = 0; a < all.size(); ++a) all[a] = static_cast<int>(a);
      inst.env.availability.assign(
          static_cast<std::size_t>(inst.env.horizon + 1), without);
      inst.env.availability[static_cast<std::size_t>(inst.env.horizon)] = all;
    }

    if (!inst.env.valid()) {
      continue;
    }
    if (violate_growth != !inst.env.satisfies_growth()) {
      continue;
    }
    return inst;
  }
}

}  // namespace sandi::sim
