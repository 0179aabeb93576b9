#pragma once

#include <optional>
#include <vector>

#include "sandi/random.hpp"
#include "sandi/score.hpp"

namespace sandi::sim {

/// A script archetype: per reputation level, the expected reward E[q*Rew]
/// and the expected report probability E[p]. Receivers' rationality requires
/// exp_reward non-decreasing and exp_report non-increasing in the level,
/// with exp_report in (0, 1]. The archetype stands for unboundedly many
/// interchangeable scripts (ample script space).
struct ScriptArchetype {
  std::array<double, kReputationLevels> exp_reward{};
  std::array<double, kReputationLevels> exp_report{};

  bool valid() const;
};

/// The memoryless sender game. Epochs count down from horizon to 0; the
/// noise value applied at the end of epoch e is noise[e]. An optional
/// availability window restricts which archetypes exist in each epoch
/// (newest-first indexing as with noise); an empty availability means every
/// archetype is always available.
///
/// delay_epochs > 0 selects the delayed-reporting variant: the count from
/// epoch e is applied at the end of epoch e - delay_epochs, and counts still
/// in flight when the game ends are applied in `flush_noise` slots.
struct GameEnv {
  std::vector<ScriptArchetype> archetypes;
  ScoreParams score;
  ReputationThresholds thresholds;
  std::vector<long long> noise;  // index e in [0, horizon]; all <= -1
  int horizon = 0;               // e_max
  long long report_budget = 0;   // r_max
  std::vector<std::vector<int>> availability;  // per epoch e, archetype ids
  int delay_epochs = 0;                        // E
  std::vector<long long> flush_noise;          // length delay_epochs

  bool valid() const;

  /// Archetype ids available in epoch e.
  std::vector<int> available(int e) const;

  /// max over available archetypes of rew_tilde at the given level.
  double best_ratio(int e, ReputationLevel level) const;

  /// Growth assumption: for every reputation level, the per-epoch best ratio
  /// is non-decreasing in time (i.e. as e decreases).
  bool satisfies_growth() const;
};

/// Rew~ = E[q*Rew] / E[p] at the given reputation level.
double rew_tilde(const ScriptArchetype& archetype, ReputationLevel level);

/// Per-epoch report targets, newest epoch first: (X_e, ..., X_0).
struct StrategyProfile {
  std::vector<long long> targets;
};

/// Exact optimal game value from state (sc, e = horizon, r = budget, x = 0),
/// by memoized recursion: each move either waits (ending the epoch, scoring
/// x + N_e, budget -= x + N_e) or absorbs one more report executing a
/// best-ratio script (allowed while the resulting epoch count X keeps
/// X + N_e <= r). Throws on state-space blowup.
double optimal_value(const GameEnv& env, double sc0);

/// Expected total reward of a normalized strategy; per epoch the target is
/// truncated to the feasible maximum (X + N_e <= budget).
double evaluate_strategy(const StrategyProfile& profile, const GameEnv& env,
                         double sc0);

/// Independent oracle: exhaustive tree search over all per-state decisions
/// (stop or execute any available archetype), per-report values evaluated by
/// numeric series summation instead of the ratio shortcut. No memoization.
/// Only viable for tiny instances.
double brute_force_optimum(const GameEnv& env, double sc0);

struct TheoremReport {
  bool holds = false;
  double reference_value = 0.0;  // brute-force optimum
  double witness_value = 0.0;
  StrategyProfile witness;
};

/// Theorem 1 consequence: the brute-force optimum is attained by some
/// normalized profile (entries searched up to r_max - min N_i).
TheoremReport check_theorem1(const GameEnv& env, double sc0);

/// Theorem 2 consequence: some optimal normalized profile keeps
/// 0 <= X_i + N_i <= k for every epoch i >= 1 (the last epoch is free).
/// Only meaningful when the growth assumption holds.
TheoremReport check_theorem2(const GameEnv& env, double sc0);

/// All profiles with entries in [0, cap]; cap defaults to
/// r_max - min(noise).
std::vector<StrategyProfile> enumerate_profiles(const GameEnv& env,
                                                std::optional<long long> cap =
                                                    std::nullopt);

}  // namespace sandi::sim
