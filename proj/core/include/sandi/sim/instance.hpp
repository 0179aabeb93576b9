#pragma once

#include <string>

#include "sandi/types.hpp"
#include "sandi/sim/game.hpp"

namespace sandi::sim {

/// A game instance: environment plus starting score. Textual (JSON) format:
///
/// {
///   "archetypes": [
///     {"exp_reward": [0.2, 0.5, 0.9, 1.0],
///      "exp_report": [0.9, 0.7, 0.5, 0.5]}
///   ],
///   "score": {"k": 1, "M": 5, "b": 0.5},
///   "noise": [-1, -2, -1],
///   "horizon": 2,
///   "budget": 4,
///   "sc0": 5,
///   "thresholds": [0, 1.67, 3.34],        // optional
///   "availability": [[0], [0], [0]],      // optional
///   "delay": 1, "flush_noise": [-1]       // optional
/// }
struct Instance {
  GameEnv env;
  double sc0 = 0.0;
};

Result<Instance> parse_instance(const std::string& json_text);
Result<Instance> load_instance_file(const std::string& path);
std::string instance_to_json(const Instance& instance);

/// Random tiny instance within the brute-force limits (horizon <= 3,
/// budget <= 5, at most 3 archetypes). When violate_growth is set, an
/// availability window removes the best archetype in later epochs so the
/// growth assumption fails (a negative control for the theorem-2 check).
Instance random_tiny_instance(RandomSource& rng, bool violate_growth = false);

}  // namespace sandi::sim
