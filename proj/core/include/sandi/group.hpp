#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sandi/random.hpp"

namespace sandi {

inline constexpr std::size_t kScalarBytes = 32;
inline constexpr std::size_t kElementBytes = 32;

/// Identifier of the prime-order group in use. The only suite implemented is
/// ristretto255 (order q = 2^252 + 27742317777372353535851937790883648493).
inline constexpr std::uint8_t kSuiteRistretto255 = 0x01;

/// Group order q, 32-byte little-endian.
std::span<const std::uint8_t, kScalarBytes> group_order_le();

/// Integer mod q, canonical 32-byte little-endian encoding.
class Scalar {
 public:
  Scalar() : bytes_{} {}

  /// Rejects non-canonical encodings (value >= q).
  static std::optional<Scalar> from_bytes(
      std::span<const std::uint8_t, kScalarBytes> in);

  /// Wide reduction of 64 bytes mod q.
  static Scalar reduce_wide(std::span<const std::uint8_t, 64> in);

  static Scalar from_u64(std::uint64_t v);

  /// Uniform in Z_q^* (never zero).
  static Scalar random_nonzero(RandomSource& rng);

  std::span<const std::uint8_t, kScalarBytes> bytes() const { return bytes_; }

  bool is_zero() const;

  Scalar add(const Scalar& other) const;
  Scalar sub(const Scalar& other) const;
  Scalar mul(const Scalar& other) const;
  Scalar negate() const;

  /// Multiplicative inverse; empty for zero.
  std::optional<Scalar> invert() const;

  bool operator==(const Scalar& other) const;

 private:
  std::array<std::uint8_t, kScalarBytes> bytes_;
};

/// Element of the prime-order group, canonical 32-byte encoding.
class GroupElement {
 public:
  GroupElement() : bytes_{} {}

  /// Rejects non-canonical or invalid encodings.
  static std::optional<GroupElement> from_bytes(
      std::span<const std::uint8_t, kElementBytes> in);

  static GroupElement base();
  static GroupElement identity();

  std::span<const std::uint8_t, kElementBytes> bytes() const { return bytes_; }

  bool is_identity() const;

  GroupElement add(const GroupElement& other) const;
  GroupElement sub(const GroupElement& other) const;

  /// Scalar multiplication. Empty when the scalar is zero or the result is
  /// the identity (which cannot occur for honest protocol inputs).
  std::optional<GroupElement> mul(const Scalar& k) const;

  /// k * base point; empty for k = 0.
  static std::optional<GroupElement> mul_base(const Scalar& k);

  bool operator==(const GroupElement& other) const;
  bool operator!=(const GroupElement& other) const { return !(*this == other); }

 private:
  static GroupElement from_raw(const std::array<std::uint8_t, kElementBytes>& b) {
    GroupElement e;
    e.bytes_ = b;
    return e;
  }

  std::array<std::uint8_t, kElementBytes> bytes_;
};

/// pp = (q, G). The suite id pins q; G is the generator used by the protocol.
struct GroupParams {
  std::uint8_t suite_id = kSuiteRistretto255;
  GroupElement generator = GroupElement::base();

  bool operator==(const GroupParams& other) const {
    return suite_id == other.suite_id && generator == other.generator;
  }
};

/// Chaum-Pedersen proof that log_{P1} Q1 = log_{P2} Q2.
struct DleqProof {
  Scalar c;
  Scalar s;
};

/// Deterministic map from arbitrary bytes to a group element, via a
/// domain-separated 64-byte hash expansion and the group's uniform
/// encode-to-element map.
GroupElement hash_to_group(std::span<const std::uint8_t> input);

/// Statement (P1, Q1, P2, Q2) with Q1 = sk*P1 and Q2 = sk*P2. The caller is
/// responsible for the statement being true; a false statement yields a
/// non-verifying proof.
DleqProof nizk_dleq_prove(const GroupParams& params, const GroupElement& p1,
                          const GroupElement& q1, const GroupElement& p2,
                          const GroupElement& q2, const Scalar& sk,
                          RandomSource& rng);

bool nizk_dleq_verify(const GroupParams& params, const GroupElement& p1,
                      const GroupElement& q1, const GroupElement& p2,
                      const GroupElement& q2, const DleqProof& proof);

/// Batched form: proves log_G epk = log_{ys[i]} rs[i] for all i, via a random
/// linear combination with transcript-derived coefficients.
DleqProof nizk_dleq_prove_batched(const GroupParams& params,
                                  const GroupElement& epk,
                                  std::span<const GroupElement> ys,
                                  std::span<const GroupElement> rs,
                                  const Scalar& sk, RandomSource& rng);

bool nizk_dleq_verify_batched(const GroupParams& params,
                              const GroupElement& epk,
                              std::span<const GroupElement> ys,
                              std::span<const GroupElement> rs,
                              const DleqProof& proof);

// Privacy Pass blind-token algorithms (the sender issues, the AS redeems).

struct PpKeypair {
  Scalar esk;
  GroupElement epk;
};

/// esk uniform in Z_q^*, epk = esk*G.
PpKeypair pp_keygen(const GroupParams& params, RandomSource& rng);

struct PpBlinding {
  Scalar r;
  GroupElement q;  // r * Hash(nonce)
};

/// Q = r*Hash(nonce) with fresh r in Z_q^*.
PpBlinding pp_blind(std::span<const std::uint8_t> nonce, RandomSource& rng);

/// (1/r) * R. Empty when r = 0.
std::optional<GroupElement> pp_unblind(const GroupElement& r_elem,
                                       const Scalar& r);

/// Accept iff sigma = esk*Hash(nonce).
bool pp_verify(std::span<const std::uint8_t> nonce, const GroupElement& sigma,
               const Scalar& esk);

}  // namespace sandi
