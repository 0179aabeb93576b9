#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sandi {

/// Source of random bytes. All randomized operations in this library take a
/// RandomSource so that callers can substitute a deterministic generator for
/// reproducible runs.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();

  /// Uniform double in the open interval (0, 1).
  double next_unit();
};

/// Operating-system CSPRNG. Thread safe.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;

  static SystemRandom& instance();
};

/// Deterministic stream generator expanded from a 64-bit seed. Not thread
/// safe; intended for replayable simulations and tests.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed);

  void fill(std::span<std::uint8_t> out) override;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_;
  std::array<std::uint8_t, 64> block_;
  std::uint64_t counter_ = 0;
  std::size_t pos_ = 0;
};

}  // namespace sandi
