#pragma once

#include <array>
#include <cstdint>

namespace sandi {

/// Parameters of the score function: tolerance level k, cap M, recovery
/// rate b. For bit-reproducible results, b should be exactly representable
/// in binary (0.5, 0.25, ...).
struct ScoreParams {
  int tolerance = 1;    // k >= 1
  int cap = 100;        // M >= 1
  double recovery = 0.5;  // b in (0, 1]

  bool valid() const {
    return tolerance >= 1 && cap >= 1 && recovery > 0.0 && recovery <= 1.0;
  }
};

/// Score update. Piecewise:
///   x >= k            -> sc - x + k
///   x < k and sc >= 0 -> min(sc + b, M)
///   x < k and sc < 0  -> min(sc - x + k, 0)
/// x may be negative (noisy report counts). The result never exceeds M.
double upd(double sc, long long x, const ScoreParams& params);

enum class ReputationLevel : std::uint8_t {
  low = 0,
  medium = 1,
  high = 2,
  very_high = 3,
};

inline constexpr int kReputationLevels = 4;

const char* to_string(ReputationLevel level);

/// Three strictly increasing cut points partitioning (-inf, M] into the four
/// reputation levels.
struct ReputationThresholds {
  std::array<double, 3> cuts{0.0, 100.0 / 3.0, 200.0 / 3.0};

  bool valid() const { return cuts[0] < cuts[1] && cuts[1] < cuts[2]; }
};

ReputationThresholds default_thresholds(const ScoreParams& params);

/// Order-preserving coarsening of the score.
ReputationLevel reputation(double sc, const ReputationThresholds& thresholds);

}  // namespace sandi
