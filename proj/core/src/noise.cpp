#include "sandi/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sandi {

namespace {

constexpr long long kRejectionCap = 1000000;

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double gaussian(const NoiseParams& params, RandomSource& rng) {
  // Box-Muller; next_unit() never returns 0 or 1.
  const double u1 = rng.next_unit();
  const double u2 = rng.next_unit();
  const double z =
      std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return params.mu + params.noise_std * z;
}

}  // namespace

long long sample_noise(const NoiseParams& params, RandomSource& rng) {
  if (!params.valid()) {
    throw std::invalid_argument("invalid noise parameters");
  }
  for (long long i = 0; i < kRejectionCap; ++i) {
    const double draw = gaussian(params, rng);
    if (draw > -0.5) {
      continue;
    }
    // Ties away from zero; draw <= -0.5 so the result is <= -1.
    return std::llround(draw);
  }
  throw std::runtime_error("noise rejection loop exceeded bound");
}

long long catchup_noise(const NoiseParams& params) {
  if (!params.valid()) {
    throw std::invalid_argument("invalid noise parameters");
  }
  return std::llround(params.mu);
}

std::pair<double, double> scale_params(double mu, double noise_std,
                                       int b_vk) {
  if (b_vk < 1) {
    throw std::invalid_argument("sensitivity must be >= 1");
  }
  const double bv = static_cast<double>(b_vk);
  return {-0.5 + bv * (0.5 + mu), bv * noise_std};
}

std::optional<NoiseParams> lookup_params(int b_vk, int compositions) {
  struct Row {
    int b_vk;
    int compositions;
    double mu;
    double sigma;
  };
  static constexpr Row kTable[] = {
      {1, 1, -8.0, 1.1},  {1, 10, -18.0, 3.5}, {1, 20, -30.0, 5.0},
      {1, 40, -40.0, 7.0}, {1, 100, -50.0, 11.0}, {3, 1, -23.0, 3.3},
      {3, 10, -40.0, 10.0}, {5, 1, -38.0, 5.5},
  };
  for (const Row& row : kTable) {
    if (row.b_vk == b_vk && row.compositions == compositions) {
      return NoiseParams{row.mu, row.sigma, row.b_vk};
    }
  }
  return std::nullopt;
}

double noise_mass(const NoiseParams& params, long long n) {
  if (n > -1) {
    return 0.0;
  }
  const double lo = static_cast<double>(n) - 0.5;
  const double hi = std::min(static_cast<double>(n) + 0.5, -0.5);
  const auto cdf = [&](double x) {
    return std_normal_cdf((x - params.mu) / params.noise_std);
  };
  const double total = cdf(-0.5);
  if (total <= 0.0) {
    return 0.0;
  }
  return (cdf(hi) - cdf(lo)) / total;
}

}  // namespace sandi
