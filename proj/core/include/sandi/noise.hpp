#pragma once

#include <optional>
#include <utility>

#include "sandi/random.hpp"

namespace sandi {

/// Reporter-privacy noise distribution: Gaussian with mean mu and standard
/// deviation noise_std, truncated to (-inf, -1/2] and rounded to the nearest
/// integer, so every sample is an integer <= -1. sensitivity is the channel
/// cap B_vk the parameters were calibrated for.
struct NoiseParams {
  double mu = -8.0;        // < -1
  double noise_std = 1.1;  // > 0
  int sensitivity = 1;     // B_vk >= 1

  bool valid() const {
    return mu < -1.0 && noise_std > 0.0 && sensitivity >= 1;
  }
};

/// Always <= -1.
long long sample_noise(const NoiseParams& params, RandomSource& rng);

/// Deterministic noise used when catching up epochs with no activity
/// (x = 0, N = mu).
long long catchup_noise(const NoiseParams& params);

/// Rescales a sensitivity-1 calibration (mu, noise_std) to sensitivity B_vk:
///   mu'  = -1/2 + B_vk * (1/2 + mu)
///   std' = B_vk * noise_std
/// Throws std::invalid_argument for B_vk < 1.
std::pair<double, double> scale_params(double mu, double noise_std, int b_vk);

/// Calibrated (mu, sigma) pairs for (epsilon = 4, delta = 2^-16) at various
/// sensitivities and composition counts; empty when no calibration exists
/// for the requested pair.
std::optional<NoiseParams> lookup_params(int b_vk, int compositions);

/// Probability mass of the truncated-rounded distribution at integer n
/// (n <= -1), i.e. the normalized Gaussian mass of [n - 1/2, n + 1/2]
/// clipped to (-inf, -1/2]. Quadrature oracle used by goodness-of-fit tests.
double noise_mass(const NoiseParams& params, long long n);

}  // namespace sandi
