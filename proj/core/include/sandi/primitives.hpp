#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sandi/random.hpp"

namespace sandi {

inline constexpr std::size_t kCommitmentBytes = 32;
inline constexpr std::size_t kOpeningBytes = 32;
inline constexpr std::size_t kSignatureBytes = 64;
inline constexpr std::size_t kVerifyKeyBytes = 32;
inline constexpr std::size_t kSymKeyBytes = 32;
inline constexpr std::size_t kSymIvBytes = 16;
inline constexpr std::size_t kSymTagBytes = 16;

// Keyed-MAC commitment: com = HMAC-SHA256(op, message), op a fresh 32-byte key.

struct Commitment {
  std::array<std::uint8_t, kCommitmentBytes> bytes{};

  bool operator==(const Commitment& o) const { return bytes == o.bytes; }
  auto operator<=>(const Commitment& o) const { return bytes <=> o.bytes; }
};

struct CommitmentOpening {
  std::array<std::uint8_t, kOpeningBytes> bytes{};
};

std::pair<Commitment, CommitmentOpening> commit(
    std::span<const std::uint8_t> message, RandomSource& rng);

/// Constant-time digest comparison.
bool open(const Commitment& com, const CommitmentOpening& op,
          std::span<const std::uint8_t> message);

// Detached signatures (Ed25519): 32-byte verification keys, 64-byte signatures.

struct SigningKey {
  std::array<std::uint8_t, 64> bytes{};
};

struct VerifyKey {
  std::array<std::uint8_t, kVerifyKeyBytes> bytes{};

  bool operator==(const VerifyKey& o) const { return bytes == o.bytes; }
  auto operator<=>(const VerifyKey& o) const { return bytes <=> o.bytes; }
};

struct SigKeypair {
  SigningKey sgk;
  VerifyKey vk;
};

struct Signature {
  std::array<std::uint8_t, kSignatureBytes> bytes{};

  bool operator==(const Signature& o) const { return bytes == o.bytes; }
};

SigKeypair sig_keygen(RandomSource& rng);

Signature sign(const SigningKey& sgk, std::span<const std::uint8_t> message);

bool verify(const VerifyKey& vk, const Signature& sig,
            std::span<const std::uint8_t> message);

// Authenticated symmetric encryption. Ciphertext layout is
// IV(16) || body(|pt|) || tag(16); equal-length plaintexts yield equal-length
// ciphertexts.

struct SymKey {
  std::array<std::uint8_t, kSymKeyBytes> bytes{};
};

SymKey sym_keygen(RandomSource& rng);

std::vector<std::uint8_t> sym_encrypt(const SymKey& key,
                                      std::span<const std::uint8_t> plaintext,
                                      RandomSource& rng);

/// Empty result on authentication failure or malformed ciphertext.
std::optional<std::vector<std::uint8_t>> sym_decrypt(
    const SymKey& key, std::span<const std::uint8_t> ciphertext);

inline constexpr std::size_t sym_ciphertext_len(std::size_t plaintext_len) {
  return kSymIvBytes + plaintext_len + kSymTagBytes;
}

}  // namespace sandi
