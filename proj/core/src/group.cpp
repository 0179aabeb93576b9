#include "sandi/group.hpp"

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

// q = 2^252 + 27742317777372353535851937790883648493, little-endian.
constexpr std::array<std::uint8_t, 32> kOrderLe = {
    0xed, 0xd3, 0xf5, 0x5c, 0x1a, 0x63, 0x12, 0x58, 0xd6, 0x9c, 0xf7,
    0xa2, 0xde, 0xf9, 0xde, 0x14, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10};

bool scalar_is_canonical(std::span<const std::uint8_t, 32> in) {
  // Little-endian comparison against q, constant trip count.
  int borrow = 0;
  for (int i = 31; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    if (in[idx] < kOrderLe[idx]) {
      borrow = 1;
      break;
    }
    if (in[idx] > kOrderLe[idx]) {
      borrow = 0;
      break;
    }
  }
  return borrow == 1;
}

class TranscriptHash {
 public:
  TranscriptHash() { crypto_hash_sha256_init(&state_); }

  void update(std::span<const std::uint8_t> data) {
    crypto_hash_sha256_update(&state_, data.data(), data.size());
  }

  void update_str(const char* s) {
    update({reinterpret_cast<const std::uint8_t*>(s), std::strlen(s)});
  }

  std::array<std::uint8_t, 32> finish() {
    std::array<std::uint8_t, 32> out;
    crypto_hash_sha256_final(&state_, out.data());
    return out;
  }

 private:
  crypto_hash_sha256_state state_;
};

// 32-byte digest zero-extended and reduced mod q.
Scalar scalar_from_digest(const std::array<std::uint8_t, 32>& digest) {
  std::array<std::uint8_t, 64> wide{};
  std::memcpy(wide.data(), digest.data(), digest.size());
  return Scalar::reduce_wide(wide);
}

Scalar dleq_challenge(const GroupElement& p1, const GroupElement& q1,
                      const GroupElement& p2, const GroupElement& q2,
                      const GroupElement& a, const GroupElement& b) {
  TranscriptHash h;
  h.update_str("sandi/dleq/v1");
  h.update(group_order_le());
  h.update(p1.bytes());
  h.update(q1.bytes());
  h.update(p2.bytes());
  h.update(q2.bytes());
  h.update(a.bytes());
  h.update(b.bytes());
  return scalar_from_digest(h.finish());
}

// Coefficients for the random-linear-combination batching, derived from the
// transcript so neither party controls them.
std::vector<Scalar> batch_coefficients(const GroupElement& epk,
                                       std::span<const GroupElement> ys,
                                       std::span<const GroupElement> rs) {
  TranscriptHash h;
  h.update_str("sandi/dleq-batch/v1");
  h.update(group_order_le());
  h.update(GroupElement::base().bytes());
  h.update(epk.bytes());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    h.update(ys[i].bytes());
    h.update(rs[i].bytes());
  }
  const auto seed = h.finish();

  std::vector<Scalar> out;
  out.reserve(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    TranscriptHash hi;
    hi.update(seed);
    std::array<std::uint8_t, 8> le{};
    for (int j = 0; j < 8; ++j) {
      le[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(i >> (8 * j));
    }
    hi.update(le);
    out.push_back(scalar_from_digest(hi.finish()));
  }
  return out;
}

// Sum of d_i * P_i. Zero coefficients contribute nothing.
std::optional<GroupElement> linear_combination(std::span<const Scalar> ds,
                                               std::span<const GroupElement> ps) {
  GroupElement acc = GroupElement::identity();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ds[i].is_zero()) {
      continue;
    }
    auto term = ps[i].mul(ds[i]);
    if (!term) {
      return std::nullopt;
    }
    acc = acc.add(*term);
  }
  if (acc.is_identity()) {
    return std::nullopt;
  }
  return acc;
}

}  // namespace

std::span<const std::uint8_t, kScalarBytes> group_order_le() {
  return kOrderLe;
}

std::optional<Scalar> Scalar::from_bytes(
    std::span<const std::uint8_t, kScalarBytes> in) {
  if (!scalar_is_canonical(in)) {
    return std::nullopt;
  }
  Scalar s;
  std::memcpy(s.bytes_.data(), in.data(), kScalarBytes);
  return s;
}

Scalar Scalar::reduce_wide(std::span<const std::uint8_t, 64> in) {
  ensure_sodium();
  Scalar s;
  crypto_core_ristretto255_scalar_reduce(s.bytes_.data(), in.data());
  return s;
}

Scalar Scalar::from_u64(std::uint64_t v) {
  std::array<std::uint8_t, 64> wide{};
  for (int i = 0; i < 8; ++i) {
    wide[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  return reduce_wide(wide);
}

Scalar Scalar::random_nonzero(RandomSource& rng) {
  std::array<std::uint8_t, 64> wide;
  for (;;) {
    rng.fill(wide);
    Scalar s = reduce_wide(wide);
    if (!s.is_zero()) {
      return s;
    }
  }
}

bool Scalar::is_zero() const {
  ensure_sodium();
  return sodium_is_zero(bytes_.data(), bytes_.size()) == 1;
}

Scalar Scalar::add(const Scalar& other) const {
  ensure_sodium();
  Scalar out;
  crypto_core_ristretto255_scalar_add(out.bytes_.data(), bytes_.data(),
                                      other.bytes_.data());
  return out;
}

Scalar Scalar::sub(const Scalar& other) const {
  ensure_sodium();
  Scalar out;
  crypto_core_ristretto255_scalar_sub(out.bytes_.data(), bytes_.data(),
                                      other.bytes_.data());
  return out;
}

Scalar Scalar::mul(const Scalar& other) const {
  ensure_sodium();
  Scalar out;
  crypto_core_ristretto255_scalar_mul(out.bytes_.data(), bytes_.data(),
                                      other.bytes_.data());
  return out;
}

Scalar Scalar::negate() const {
  ensure_sodium();
  Scalar out;
  crypto_core_ristretto255_scalar_negate(out.bytes_.data(), bytes_.data());
  return out;
}

std::optional<Scalar> Scalar::invert() const {
  ensure_sodium();
  Scalar out;
  if (crypto_core_ristretto255_scalar_invert(out.bytes_.data(),
                                             bytes_.data()) != 0) {
    return std::nullopt;
  }
  return out;
}

bool Scalar::operator==(const Scalar& other) const {
  return sodium_memcmp(bytes_.data(), other.bytes_.data(), kScalarBytes) == 0;
}

std::optional<GroupElement> GroupElement::from_bytes(
    std::span<const std::uint8_t, kElementBytes> in) {
  ensure_sodium();
  if (crypto_core_ristretto255_is_valid_point(in.data()) != 1) {
    return std::nullopt;
  }
  std::array<std::uint8_t, kElementBytes> b;
  std::memcpy(b.data(), in.data(), kElementBytes);
  return from_raw(b);
}

GroupElement GroupElement::base() {
  ensure_sodium();
  // base = 1 * B
  std::array<std::uint8_t, kScalarBytes> one{};
  one[0] = 1;
  std::array<std::uint8_t, kElementBytes> b{};
  crypto_scalarmult_ristretto255_base(b.data(), one.data());
  return from_raw(b);
}

GroupElement GroupElement::identity() {
  return GroupElement{};  // all-zero encoding
}

bool GroupElement::is_identity() const {
  return sodium_is_zero(bytes_.data(), bytes_.size()) == 1;
}

GroupElement GroupElement::add(const GroupElement& other) const {
  ensure_sodium();
  std::array<std::uint8_t, kElementBytes> b{};
  crypto_core_ristretto255_add(b.data(), bytes_.data(), other.bytes_.data());
  return from_raw(b);
}

GroupElement GroupElement::sub(const GroupElement& other) const {
  ensure_sodium();
  std::array<std::uint8_t, kElementBytes> b{};
  crypto_core_ristretto255_sub(b.data(), bytes_.data(), other.bytes_.data());
  return from_raw(b);
}

std::optional<GroupElement> GroupElement::mul(const Scalar& k) const {
  ensure_sodium();
  std::array<std::uint8_t, kElementBytes> b{};
  if (crypto_scalarmult_ristretto255(b.data(), k.bytes().data(),
                                     bytes_.data()) != 0) {
    return std::nullopt;
  }
  return from_raw(b);
}

std::optional<GroupElement> GroupElement::mul_base(const Scalar& k) {
  ensure_sodium();
  std::array<std::uint8_t, kElementBytes> b{};
  if (crypto_scalarmult_ristretto255_base(b.data(), k.bytes().data()) != 0) {
    return std::nullopt;
  }
  return from_raw(b);
}

bool GroupElement::operator==(const GroupElement& other) const {
  return sodium_memcmp(bytes_.data(), other.bytes_.data(), kElementBytes) == 0;
}

GroupElement hash_to_group(std::span<const std::uint8_t> input) {
  ensure_sodium();
  crypto_hash_sha512_state st;
  crypto_hash_sha512_init(&st);
  static constexpr char kDomain[] = "sandi/h2g/v1";
  crypto_hash_sha512_update(
      &st, reinterpret_cast<const std::uint8_t*>(kDomain), sizeof(kDomain) - 1);
  crypto_hash_sha512_update(&st, input.data(), input.size());
  std::array<std::uint8_t, 64> wide;
  crypto_hash_sha512_final(&st, wide.data());

  std::array<std::uint8_t, kElementBytes> b{};
  crypto_core_ristretto255_from_hash(b.data(), wide.data());
  auto out = GroupElement::from_bytes(b);
  if (!out) {
    throw std::logic_error("hash_to_group produced invalid element");
  }
  return *out;
}

DleqProof nizk_dleq_prove(const GroupParams&, const GroupElement& p1,
                          const GroupElement& q1, const GroupElement& p2,
                          const GroupElement& q2, const Scalar& sk,
                          RandomSource& rng) {
  for (;;) {
    const Scalar k = Scalar::random_nonzero(rng);
    const auto a = p1.mul(k);
    const auto b = p2.mul(k);
    if (!a || !b) {
      // Degenerate statement point; retry with fresh k cannot help for an
      // identity base, but honest statements never hit this.
      continue;
    }
    const Scalar c = dleq_challenge(p1, q1, p2, q2, *a, *b);
    const Scalar s = k.sub(c.mul(sk));
    return DleqProof{c, s};
  }
}

bool nizk_dleq_verify(const GroupParams&, const GroupElement& p1,
                      const GroupElement& q1, const GroupElement& p2,
                      const GroupElement& q2, const DleqProof& proof) {
  // A' = s*P1 + c*Q1, B' = s*P2 + c*Q2. Scalar multiples that fail (zero
  // scalar or identity result) are treated as contributing the identity.
  auto term = [](const GroupElement& p, const Scalar& k) -> GroupElement {
    if (k.is_zero()) {
      return GroupElement::identity();
    }
    auto r = p.mul(k);
    return r ? *r : GroupElement::identity();
  };
  const GroupElement a = term(p1, proof.s).add(term(q1, proof.c));
  const GroupElement b = term(p2, proof.s).add(term(q2, proof.c));
  const Scalar expect = dleq_challenge(p1, q1, p2, q2, a, b);
  return expect == proof.c;
}

DleqProof nizk_dleq_prove_batched(const GroupParams& params,
                                  const GroupElement& epk,
                                  std::span<const GroupElement> ys,
                                  std::span<const GroupElement> rs,
                                  const Scalar& sk, RandomSource& rng) {
  if (ys.size() != rs.size() || ys.empty()) {
    throw std::invalid_argument("batched DLEQ: mismatched statement");
  }
  const auto ds = batch_coefficients(epk, ys, rs);
  const auto p2 = linear_combination(ds, ys);
  const auto q2 = linear_combination(ds, rs);
  if (!p2 || !q2) {
    throw std::invalid_argument("batched DLEQ: degenerate combination");
  }
  return nizk_dleq_prove(params, GroupElement::base(), epk, *p2, *q2, sk, rng);
}

bool nizk_dleq_verify_batched(const GroupParams& params,
                              const GroupElement& epk,
                              std::span<const GroupElement> ys,
                              std::span<const GroupElement> rs,
                              const DleqProof& proof) {
  if (ys.size() != rs.size() || ys.empty()) {
    return false;
  }
  const auto ds = batch_coefficients(epk, ys, rs);
  const auto p2 = linear_combination(ds, ys);
  const auto q2 = linear_combination(ds, rs);
  if (!p2 || !q2) {
    return false;
  }
  return nizk_dleq_verify(params, GroupElement::base(), epk, *p2, *q2, proof);
}

PpKeypair pp_keygen(const GroupParams& params, RandomSource& rng) {
  for (;;) {
    const Scalar esk = Scalar::random_nonzero(rng);
    const auto epk = params.generator.mul(esk);
    if (epk) {
      return PpKeypair{esk, *epk};
    }
  }
}

PpBlinding pp_blind(std::span<const std::uint8_t> nonce, RandomSource& rng) {
  const GroupElement h = hash_to_group(nonce);
  for (;;) {
    const Scalar r = Scalar::random_nonzero(rng);
    const auto q = h.mul(r);
    if (q) {
      return PpBlinding{r, *q};
    }
  }
}

std::optional<GroupElement> pp_unblind(const GroupElement& r_elem,
                                       const Scalar& r) {
  const auto inv = r.invert();
  if (!inv) {
    return std::nullopt;
  }
  return r_elem.mul(*inv);
}

bool pp_verify(std::span<const std::uint8_t> nonce, const GroupElement& sigma,
               const Scalar& esk) {
  const auto expect = hash_to_group(nonce).mul(esk);
  return expect && *expect == sigma;
}

}  // namespace sandi
