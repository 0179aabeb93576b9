#include "sandi/score.hpp"

#include <algorithm>
#include <stdexcept>

namespace sandi {

double upd(double sc, long long x, const ScoreParams& params) {
  if (!params.valid()) {
    throw std::invalid_argument("invalid score parameters");
  }
  const double k = static_cast<double>(params.tolerance);
  const double m = static_cast<double>(params.cap);
  const double xd = static_cast<double>(x);

  if (xd >= k) {
    return sc - xd + k;
  }
  if (sc >= 0.0) {
    return std::min(sc + params.recovery, m);
  }
  return std::min(sc - xd + k, 0.0);
}

const char* to_string(ReputationLevel level) {
  switch (level) {
    case ReputationLevel::low:
      return "low";
    case ReputationLevel::medium:
      return "medium";
    case ReputationLevel::high:
      return "high";
    case ReputationLevel::very_high:
      return "very_high";
  }
  return "?";
}

ReputationThresholds default_thresholds(const ScoreParams& params) {
  const double m = static_cast<double>(params.cap);
  return ReputationThresholds{{0.0, m / 3.0, 2.0 * m / 3.0}};
}

ReputationLevel reputation(double sc, const ReputationThresholds& thresholds) {
  if (!thresholds.valid()) {
    throw std::invalid_argument("thresholds must be strictly increasing");
  }
  if (sc < thresholds.cuts[0]) {
    return ReputationLevel::low;
  }
  if (sc < thresholds.cuts[1]) {
    return ReputationLevel::medium;
  }
  if (sc < thresholds.cuts[2]) {
    return ReputationLevel::high;
  }
  return ReputationLevel::very_high;
}

}  // namespace sandi
