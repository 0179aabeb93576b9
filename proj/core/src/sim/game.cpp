#include "sandi/sim/game.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sandi::sim {

namespace {

constexpr double kTolerance = 1e-9;
constexpr std::size_t kMemoLimit = 2'000'000;

ReputationLevel level_of(double sc, const ReputationThresholds& thresholds) {
  return reputation(sc, thresholds);
}

/// Noise applied at the end of epoch m; negative m addresses flush slots.
long long noise_at_epoch_end(const GameEnv& env, int m) {
  if (m >= 0) {
    return env.noise[static_cast<std::size_t>(m)];
  }
  return env.flush_noise[static_cast<std::size_t>(-m - 1)];
}

/// Noise that will be paired with the count executed in epoch e.
long long noise_for_count(const GameEnv& env, int e) {
  return noise_at_epoch_end(env, e - env.delay_epochs);
}

/// Reports beyond the (negative) noise are what the AS registers; the rest
/// are dropped before being counted, so the budget consumed at an epoch end
/// is the clamped noisy count.
long long budget_consumed(long long applied, long long noise) {
  return std::max<long long>(applied + noise, 0);
}

/// Budget remaining when the count executed in epoch e is applied, given the
/// in-flight pipeline (front = applied next). Everything involved is already
/// fixed, so this is exact, not an estimate.
long long budget_at_application(const GameEnv& env, int e, long long r,
                                const std::vector<long long>& pending) {
  long long out = r;
  for (int j = 0; j < env.delay_epochs; ++j) {
    out -= budget_consumed(pending[static_cast<std::size_t>(j)],
                           noise_at_epoch_end(env, e - j));
  }
  return out;
}

struct DpState {
  std::map<std::vector<long long>, double> memo;
  const GameEnv* env;

  double solve(double sc, int e, long long r, long long x,
               std::vector<long long>& pending) {
    std::vector<long long> key;
    key.reserve(pending.size() + 4);
    key.push_back(static_cast<long long>(std::bit_cast<std::uint64_t>(sc)));
    key.push_back(e);
    key.push_back(r);
    key.push_back(x);
    key.insert(key.end(), pending.begin(), pending.end());
    if (auto it = memo.find(key); it != memo.end()) {
      return it->second;
    }
    if (memo.size() > kMemoLimit) {
      throw std::runtime_error("game state space exceeds desk-scale bound");
    }
    if (r <= 0) {
      // Budget exhausted: the game is over, no more tags or rewards.
      memo[key] = 0.0;
      return 0.0;
    }

    double wait_value = 0.0;
    if (e > 0) {
      const long long applied =
          env->delay_epochs == 0 ? x : pending.front();
      const long long z = applied + noise_at_epoch_end(*env, e);
      std::vector<long long> next_pending;
      if (env->delay_epochs > 0) {
        next_pending.assign(pending.begin() + 1, pending.end());
        next_pending.push_back(x);
      }
      wait_value =
          solve(upd(sc, z, env->score), e - 1,
                r - budget_consumed(applied, noise_at_epoch_end(*env, e)), 0,
                next_pending);
    }

    double exec_value = -1.0;
    const long long gate = budget_at_application(*env, e, r, pending);
    if (x + 1 + noise_for_count(*env, e) <= gate) {
      const double ratio =
          env->best_ratio(e, level_of(sc, env->thresholds));
      exec_value = ratio + solve(sc, e, r, x + 1, pending);
    }

    const double value = std::max(wait_value, exec_value);
    memo[key] = value;
    return value;
  }
};

/// Expected total reward from executing scripts of one archetype until a
/// report lands, summed numerically (the oracle route; no ratio shortcut).
double per_report_value(const ScriptArchetype& a, ReputationLevel level) {
  const double reward = a.exp_reward[static_cast<std::size_t>(level)];
  const double p = a.exp_report[static_cast<std::size_t>(level)];
  double total = 0.0;
  double survive = 1.0;  // (1 - p)^(i-1)
  for (int i = 1; i <= 10'000'000; ++i) {
    const double term = static_cast<double>(i) * reward * p * survive;
    total += term;
    survive *= 1.0 - p;
    if (term < 1e-15 && i > 8) {
      break;
    }
  }
  return total;
}

struct BruteState {
  std::map<std::vector<long long>, double> memo;
  const GameEnv* env;

  double solve(double sc, int e, long long r, long long x,
               std::vector<long long>& pending) {
    std::vector<long long> key;
    key.reserve(pending.size() + 4);
    key.push_back(static_cast<long long>(std::bit_cast<std::uint64_t>(sc)));
    key.push_back(e);
    key.push_back(r);
    key.push_back(x);
    key.insert(key.end(), pending.begin(), pending.end());
    if (auto it = memo.find(key); it != memo.end()) {
      return it->second;
    }
    if (r <= 0) {
      memo[key] = 0.0;
      return 0.0;
    }

    double best = 0.0;
    if (e > 0) {
      const long long applied =
          env->delay_epochs == 0 ? x : pending.front();
      const long long z = applied + noise_at_epoch_end(*env, e);
      std::vector<long long> next_pending;
      if (env->delay_epochs > 0) {
        next_pending.assign(pending.begin() + 1, pending.end());
        next_pending.push_back(x);
      }
      best = solve(upd(sc, z, env->score), e - 1,
                   r - budget_consumed(applied, noise_at_epoch_end(*env, e)),
                   0, next_pending);
    }

    const long long gate = budget_at_application(*env, e, r, pending);
    if (x + 1 + noise_for_count(*env, e) <= gate) {
      const ReputationLevel level = level_of(sc, env->thresholds);
      const double continuation = solve(sc, e, r, x + 1, pending);
      for (int id : env->available(e)) {
        const double value =
            per_report_value(env->archetypes[static_cast<std::size_t>(id)],
                             level) +
            continuation;
        best = std::max(best, value);
      }
    }

    memo[key] = best;
    return best;
  }
};

}  // namespace

bool ScriptArchetype::valid() const {
  for (int i = 0; i < kReputationLevels; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (exp_reward[idx] < 0.0) return false;
    if (exp_report[idx] <= 0.0 || exp_report[idx] > 1.0) return false;
    if (i > 0) {
      if (exp_reward[idx] < exp_reward[idx - 1]) return false;   // increasing
      if (exp_report[idx] > exp_report[idx - 1]) return false;   // decreasing
    }
  }
  return true;
}

bool GameEnv::valid() const {
  if (archetypes.empty() || horizon < 0 || report_budget < 0) return false;
  for (const auto& a : archetypes) {
    if (!a.valid()) return false;
  }
  if (noise.size() != static_cast<std::size_t>(horizon + 1)) return false;
  for (long long n : noise) {
    if (n > -1) return false;
  }
  if (!availability.empty()) {
    if (availability.size() != static_cast<std::size_t>(horizon + 1)) {
      return false;
    }
    for (const auto& ids : availability) {
      if (ids.empty()) return false;
      for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= archetypes.size()) {
          return false;
        }
      }
    }
  }
  if (delay_epochs < 0) return false;
  if (flush_noise.size() != static_cast<std::size_t>(delay_epochs)) {
    return false;
  }
  for (long long n : flush_noise) {
    if (n > -1) return false;
  }
  return score.valid() && thresholds.valid();
}

std::vector<int> GameEnv::available(int e) const {
  if (availability.empty()) {
    std::vector<int> all(archetypes.size());
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
      all[i] = static_cast<int>(i);
    }
    return all;
  }
  return availability[static_cast<std::size_t>(e)];
}

double GameEnv::best_ratio(int e, ReputationLevel level) const {
  double best = 0.0;
  for (int id : available(e)) {
    best = std::max(best,
                    rew_tilde(archetypes[static_cast<std::size_t>(id)], level));
  }
  return best;
}

bool GameEnv::satisfies_growth() const {
  for (int lvl = 0; lvl < kReputationLevels; ++lvl) {
    const auto level = static_cast<ReputationLevel>(lvl);
    for (int e = horizon; e >= 1; --e) {
      // Later epochs (smaller e) must offer at least as good a best ratio.
      if (best_ratio(e - 1, level) < best_ratio(e, level) - kTolerance) {
        return false;
      }
    }
  }
  return true;
}

double rew_tilde(const ScriptArchetype& archetype, ReputationLevel level) {
  const auto idx = static_cast<std::size_t>(level);
  return archetype.exp_reward[idx] / archetype.exp_report[idx];
}

double optimal_value(const GameEnv& env, double sc0) {
  if (!env.valid()) {
    throw std::invalid_argument("invalid game environment");
  }
  DpState dp;
  dp.env = &env;
  std::vector<long long> pending(static_cast<std::size_t>(env.delay_epochs),
                                 0);
  return dp.solve(sc0, env.horizon, env.report_budget, 0, pending);
}

double evaluate_strategy(const StrategyProfile& profile, const GameEnv& env,
                         double sc0) {
  if (!env.valid()) {
    throw std::invalid_argument("invalid game environment");
  }
  if (profile.targets.size() != static_cast<std::size_t>(env.horizon + 1)) {
    throw std::invalid_argument("profile length must equal horizon + 1");
  }

  double sc = sc0;
  long long r = env.report_budget;
  std::vector<long long> pending(static_cast<std::size_t>(env.delay_epochs),
                                 0);
  double total = 0.0;

  for (int e = env.horizon; e >= 0; --e) {
    if (r <= 0) {
      break;  // budget exhausted: the game is over
    }
    const long long target =
        profile.targets[static_cast<std::size_t>(env.horizon - e)];
    const long long gate = budget_at_application(env, e, r, pending);
    const long long feasible =
        std::max<long long>(0, gate - noise_for_count(env, e));
    const long long executed = std::min(target, feasible);
    total += static_cast<double>(executed) *
             env.best_ratio(e, reputation(sc, env.thresholds));

    const long long applied =
        env.delay_epochs == 0 ? executed : pending.front();
    const long long z = applied + noise_at_epoch_end(env, e);
    sc = upd(sc, z, env.score);
    r -= budget_consumed(applied, noise_at_epoch_end(env, e));
    if (env.delay_epochs > 0) {
      pending.erase(pending.begin());
      pending.push_back(executed);
    }
  }
  return total;
}

double brute_force_optimum(const GameEnv& env, double sc0) {
  if (!env.valid()) {
    throw std::invalid_argument("invalid game environment");
  }
  long long min_noise = 0;
  for (long long n : env.noise) min_noise = std::min(min_noise, n);
  if (env.horizon > 3 || env.report_budget > 5 || env.archetypes.size() > 3 ||
      env.report_budget - min_noise > 16) {
    throw std::invalid_argument("instance too large for brute force");
  }
  BruteState brute;
  brute.env = &env;
  std::vector<long long> pending(static_cast<std::size_t>(env.delay_epochs),
                                 0);
  return brute.solve(sc0, env.horizon, env.report_budget, 0, pending);
}

std::vector<StrategyProfile> enumerate_profiles(const GameEnv& env,
                                                std::optional<long long> cap) {
  long long limit;
  if (cap) {
    limit = *cap;
  } else {
    long long min_noise = 0;
    for (long long n : env.noise) min_noise = std::min(min_noise, n);
    for (long long n : env.flush_noise) min_noise = std::min(min_noise, n);
    limit = env.report_budget - min_noise;
  }
  const std::size_t len = static_cast<std::size_t>(env.horizon + 1);

  std::vector<StrategyProfile> out;
  std::vector<long long> current(len, 0);
  for (;;) {
    out.push_back(StrategyProfile{current});
    std::size_t pos = 0;
    while (pos < len) {
      if (++current[pos] <= limit) break;
      current[pos] = 0;
      ++pos;
    }
    if (pos == len) break;
  }
  return out;
}

TheoremReport check_theorem1(const GameEnv& env, double sc0) {
  TheoremReport report;
  report.reference_value = brute_force_optimum(env, sc0);

  for (const auto& profile : enumerate_profiles(env)) {
    const double value = evaluate_strategy(profile, env, sc0);
    if (value > report.reference_value + kTolerance) {
      // A normalized profile beating the exhaustive optimum means one of the
      // two computations is wrong; report failure.
      report.holds = false;
      report.witness = profile;
      report.witness_value = value;
      return report;
    }
    if (std::abs(value - report.reference_value) <= kTolerance &&
        !report.holds) {
      report.holds = true;
      report.witness = profile;
      report.witness_value = value;
    }
  }
  return report;
}

TheoremReport check_theorem2(const GameEnv& env, double sc0) {
  TheoremReport report;
  report.reference_value = brute_force_optimum(env, sc0);

  for (const auto& profile : enumerate_profiles(env)) {
    const double value = evaluate_strategy(profile, env, sc0);
    if (std::abs(value - report.reference_value) > kTolerance) {
      continue;
    }
    bool bounded = true;
    for (int e = env.horizon; e >= 1; --e) {
      const long long x =
          profile.targets[static_cast<std::size_t>(env.horizon - e)];
      const long long z = x + noise_for_count(env, e);
      if (z < 0 || z > env.score.tolerance) {
        bounded = false;
        break;
      }
    }
    if (bounded) {
      report.holds = true;
      report.witness = profile;
      report.witness_value = value;
      return report;
    }
  }
  return report;
}

}  // namespace sandi::sim
