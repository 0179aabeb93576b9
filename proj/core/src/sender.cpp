#include "sandi/sender.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "sandi/wire.hpp"

namespace sandi {

SenderClient::SenderClient(PublicParams params, RandomSource& rng)
    : params_(std::move(params)), rng_(rng) {
  if (!params_.valid()) {
    throw std::invalid_argument("invalid public parameters");
  }
}

const GroupElement& SenderClient::begin_epoch(Timestamp now) {
  const EpochIndex epoch = params_.epoch_of(now);
  auto [it, inserted] = epoch_keys_.try_emplace(epoch);
  if (inserted) {
    it->second = pp_keygen(params_.group, rng_);
  }
  return it->second.epk;
}

bool SenderClient::has_epoch_key(EpochIndex epoch) const {
  return epoch_keys_.contains(epoch);
}

Result<Scalar> SenderClient::epoch_secret(EpochIndex epoch) const {
  auto it = epoch_keys_.find(epoch);
  if (it == epoch_keys_.end()) {
    return Error{Status::unknown_epoch, "no key for epoch"};
  }
  return it->second.esk;
}

SigKeypair SenderClient::new_channel_key() {
  SigKeypair kp = sig_keygen(rng_);
  channel_keys_[kp.vk] = kp.sgk;
  return kp;
}

Result<SenderClient::TagRequest> SenderClient::begin_tag_request(
    const VerifyKey& vk, std::span<const std::uint8_t> h_r, Timestamp now) {
  prune_pending(now);
  auto key_it = channel_keys_.find(vk);
  if (key_it == channel_keys_.end()) {
    return Error{Status::unknown_channel, "unknown verification key"};
  }
  // A signing keypair is bound to exactly one sender address.
  std::vector<std::uint8_t> addr(h_r.begin(), h_r.end());
  auto [addr_it, inserted] = key_address_.try_emplace(vk, addr);
  if (!inserted && addr_it->second != addr) {
    return Error{Status::key_mismatch,
                 "verification key already bound to another address"};
  }

  auto [com_s, op_s] = commit(vk.bytes, rng_);
  auto [com_r, op_r] = commit(h_r, rng_);
  pending_[PendingKey{com_s, com_r}] =
      PendingRequest{op_s, op_r, vk, now};
  return TagRequest{com_s, com_r};
}

Result<FullEndorsementTag> SenderClient::complete_tag(
    const EndorsementTag& tag, Timestamp now) {
  auto it = pending_.find(PendingKey{tag.com_s, tag.com_r});
  if (it == pending_.end()) {
    return Error{Status::commitment_mismatch,
                 "no pending request for these commitments"};
  }
  if (std::llabs(now - tag.tau) > kTagFreshness) {
    return Error{Status::stale_timestamp, "tag timestamp not current"};
  }
  if (!verify(params_.as_key, tag.sig, wire::tag_signed_bytes(tag))) {
    return Error{Status::bad_signature, "AS signature invalid"};
  }
  const EpochIndex epoch = params_.epoch_of(tag.tau);
  auto key_it = epoch_keys_.find(epoch);
  if (key_it == epoch_keys_.end()) {
    return Error{Status::unknown_epoch, "no epoch key for tag epoch"};
  }
  const Scalar& esk = key_it->second.esk;

  const auto expect_x = tag.fresh_generator.mul(esk);
  if (!expect_x || *expect_x != tag.tag_key) {
    return Error{Status::key_mismatch, "X does not match esk * G'"};
  }
  const auto blind_token = tag.blinded_query.mul(esk);
  if (!blind_token) {
    return Error{Status::malformed, "degenerate blinded query"};
  }

  FullEndorsementTag full;
  full.op_s = it->second.op_s;
  full.op_r = it->second.op_r;
  full.vk = it->second.vk;
  full.tag = tag;
  full.blind_token = *blind_token;
  full.proof =
      nizk_dleq_prove(tag.pp, tag.fresh_generator, tag.tag_key,
                      tag.blinded_query, *blind_token, esk, rng_);
  pending_.erase(it);
  return full;
}

Signature SenderClient::sign_channel_message(
    const VerifyKey& vk, std::span<const std::uint8_t> h_r,
    std::span<const std::uint8_t> message) {
  auto it = channel_keys_.find(vk);
  if (it == channel_keys_.end()) {
    throw std::invalid_argument("unknown verification key");
  }
  std::vector<std::uint8_t> bound(h_r.begin(), h_r.end());
  bound.insert(bound.end(), message.begin(), message.end());
  return sign(it->second, bound);
}

bool SenderClient::verify_report_proof(std::span<const SenderToken> tokens,
                                       long long claimed_x,
                                       const Scalar& esk) {
  if (claimed_x < 0 ||
      tokens.size() != static_cast<std::size_t>(claimed_x)) {
    return false;
  }
  std::set<std::array<std::uint8_t, kNonceBytes>> seen;
  for (const auto& token : tokens) {
    if (!seen.insert(token.nonce).second) {
      return false;
    }
    if (!pp_verify(token.nonce, token.sigma, esk)) {
      return false;
    }
  }
  return true;
}

void SenderClient::prune_pending(Timestamp now) {
  std::erase_if(pending_, [&](const auto& kv) {
    return kv.second.created + kPendingTtl < now;
  });
}

}  // namespace sandi
