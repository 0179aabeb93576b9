#include "sandi/random.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace sandi {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) {
    throw std::runtime_error("libsodium initialization failed");
  }
}

}  // namespace

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> buf;
  fill(buf);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v = (v << 8) | buf[static_cast<std::size_t>(i)];
  }
  return v;
}

double RandomSource::next_unit() {
  // 53 random mantissa bits, offset by half an ulp so 0 and 1 are excluded.
  const std::uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  ensure_sodium();
  randombytes_buf(out.data(), out.size());
}

SystemRandom& SystemRandom::instance() {
  static SystemRandom rng;
  return rng;
}

SeededRandom::SeededRandom(std::uint64_t seed) {
  ensure_sodium();
  std::array<std::uint8_t, 16> material{};
  static constexpr char kTag[] = "sandi/rs";
  std::memcpy(material.data(), kTag, 8);
  for (int i = 0; i < 8; ++i) {
    material[static_cast<std::size_t>(8 + i)] =
        static_cast<std::uint8_t>(seed >> (8 * i));
  }
  crypto_hash_sha256(key_.data(), material.data(), material.size());
  refill();
}

void SeededRandom::refill() {
  std::array<std::uint8_t, 8> nonce{};
  std::array<std::uint8_t, 64> zeros{};
  crypto_stream_chacha20_xor_ic(block_.data(), zeros.data(), zeros.size(),
                                nonce.data(), counter_, key_.data());
  counter_ += block_.size() / 64;
  pos_ = 0;
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == block_.size()) {
      refill();
    }
    const std::size_t n = std::min(out.size() - done, block_.size() - pos_);
    std::memcpy(out.data() + done, block_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

}  // namespace sandi
