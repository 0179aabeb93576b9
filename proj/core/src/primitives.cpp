#include "sandi/primitives.hpp"

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

std::array<std::uint8_t, 32> hmac256(std::span<const std::uint8_t> key,
                                     std::span<const std::uint8_t> data) {
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  std::array<std::uint8_t, 32> out;
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

// Independent subkeys for the encrypt-then-MAC construction.
void derive_subkeys(const SymKey& key, std::array<std::uint8_t, 32>& enc,
                    std::array<std::uint8_t, 32>& mac) {
  static constexpr std::uint8_t kEncLabel[] = {'s', 'a', 'n', 'd', 'i',
                                               '/', 'e', 'n', 'c'};
  static constexpr std::uint8_t kMacLabel[] = {'s', 'a', 'n', 'd', 'i',
                                               '/', 'm', 'a', 'c'};
  enc = hmac256(key.bytes, kEncLabel);
  mac = hmac256(key.bytes, kMacLabel);
}

void keystream_xor(const std::array<std::uint8_t, 32>& enc_key,
                   std::span<const std::uint8_t, kSymIvBytes> iv,
                   std::span<const std::uint8_t> in, std::uint8_t* out) {
  std::array<std::uint8_t, 24> nonce{};
  std::memcpy(nonce.data(), iv.data(), kSymIvBytes);
  crypto_stream_xchacha20_xor(out, in.data(), in.size(), nonce.data(),
                              enc_key.data());
}

std::array<std::uint8_t, kSymTagBytes> compute_tag(
    const std::array<std::uint8_t, 32>& mac_key,
    std::span<const std::uint8_t> iv_and_body) {
  const auto full = hmac256(mac_key, iv_and_body);
  std::array<std::uint8_t, kSymTagBytes> tag;
  std::memcpy(tag.data(), full.data(), kSymTagBytes);
  return tag;
}

}  // namespace

std::pair<Commitment, CommitmentOpening> commit(
    std::span<const std::uint8_t> message, RandomSource& rng) {
  ensure_sodium();
  CommitmentOpening op;
  rng.fill(op.bytes);
  Commitment com;
  com.bytes = hmac256(op.bytes, message);
  return {com, op};
}

bool open(const Commitment& com, const CommitmentOpening& op,
          std::span<const std::uint8_t> message) {
  ensure_sodium();
  const auto expect = hmac256(op.bytes, message);
  return sodium_memcmp(expect.data(), com.bytes.data(), kCommitmentBytes) == 0;
}

SigKeypair sig_keygen(RandomSource& rng) {
  ensure_sodium();
  std::array<std::uint8_t, 32> seed;
  rng.fill(seed);
  SigKeypair kp;
  crypto_sign_seed_keypair(kp.vk.bytes.data(), kp.sgk.bytes.data(),
                           seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

Signature sign(const SigningKey& sgk, std::span<const std::uint8_t> message) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(),
                       message.size(), sgk.bytes.data());
  return sig;
}

bool verify(const VerifyKey& vk, const Signature& sig,
            std::span<const std::uint8_t> message) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(),
                                     message.size(), vk.bytes.data()) == 0;
}

SymKey sym_keygen(RandomSource& rng) {
  SymKey key;
  rng.fill(key.bytes);
  return key;
}

std::vector<std::uint8_t> sym_encrypt(const SymKey& key,
                                      std::span<const std::uint8_t> plaintext,
                                      RandomSource& rng) {
  ensure_sodium();
  std::array<std::uint8_t, 32> enc_key, mac_key;
  derive_subkeys(key, enc_key, mac_key);

  std::vector<std::uint8_t> ct(sym_ciphertext_len(plaintext.size()));
  rng.fill(std::span<std::uint8_t>(ct.data(), kSymIvBytes));
  keystream_xor(enc_key,
                std::span<const std::uint8_t, kSymIvBytes>(ct.data(),
                                                           kSymIvBytes),
                plaintext, ct.data() + kSymIvBytes);
  const auto tag = compute_tag(
      mac_key, {ct.data(), kSymIvBytes + plaintext.size()});
  std::memcpy(ct.data() + kSymIvBytes + plaintext.size(), tag.data(),
              kSymTagBytes);
  return ct;
}

std::optional<std::vector<std::uint8_t>> sym_decrypt(
    const SymKey& key, std::span<const std::uint8_t> ciphertext) {
  ensure_sodium();
  if (ciphertext.size() < kSymIvBytes + kSymTagBytes) {
    return std::nullopt;
  }
  std::array<std::uint8_t, 32> enc_key, mac_key;
  derive_subkeys(key, enc_key, mac_key);

  const std::size_t body_len = ciphertext.size() - kSymIvBytes - kSymTagBytes;
  const auto expect =
      compute_tag(mac_key, ciphertext.first(kSymIvBytes + body_len));
  if (sodium_memcmp(expect.data(),
                    ciphertext.data() + kSymIvBytes + body_len,
                    kSymTagBytes) != 0) {
    return std::nullopt;
  }

  std::vector<std::uint8_t> pt(body_len);
  keystream_xor(enc_key,
                std::span<const std::uint8_t, kSymIvBytes>(ciphertext.data(),
                                                           kSymIvBytes),
                ciphertext.subspan(kSymIvBytes, body_len), pt.data());
  return pt;
}

}  // namespace sandi
