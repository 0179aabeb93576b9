#include "sandi/receiver.hpp"

namespace sandi {

ReceiverClient::ReceiverClient(PublicParams params,
                               std::vector<std::uint8_t> address)
    : params_(std::move(params)), address_(std::move(address)) {
  if (!params_.valid()) {
    throw std::invalid_argument("invalid public parameters");
  }
}

Result<ReputationLevel> ReceiverClient::receive_tag(
    const FullEndorsementTag& full, Timestamp now) {
  const EndorsementTag& tag = full.tag;
  if (now > tag.tau + params_.val_period) {
    return Error{Status::expired, "tag expired for receiving"};
  }
  if (!open(tag.com_s, full.op_s, full.vk.bytes)) {
    return Error{Status::commitment_mismatch, "sender key commitment"};
  }
  if (!open(tag.com_r, full.op_r, address_)) {
    return Error{Status::commitment_mismatch, "receiver address commitment"};
  }
  if (!verify(params_.as_key, tag.sig, wire::tag_signed_bytes(tag))) {
    return Error{Status::bad_signature, "AS signature invalid"};
  }
  if (!nizk_dleq_verify(tag.pp, tag.fresh_generator, tag.tag_key,
                        tag.blinded_query, full.blind_token, full.proof)) {
    return Error{Status::bad_proof, "blind token proof invalid"};
  }

  auto [it, inserted] = channels_.try_emplace(full.vk);
  if (inserted) {
    it->second.tau_rep = now;
  }
  it->second.tags.push_back(
      wire::Report{tag, full.proof, full.blind_token});
  return tag.reputation;
}

Result<wire::Report> ReceiverClient::report(const VerifyKey& vk, Timestamp now,
                                            bool ignore_lock) {
  auto it = channels_.find(vk);
  if (it == channels_.end()) {
    return Error{Status::unknown_channel, "no such endorsed channel"};
  }
  ChannelEntry& entry = it->second;
  if (!ignore_lock && now < entry.tau_rep) {
    return Error{Status::report_locked, "report lock active"};
  }
  // Expired heads are garbage, never reportable.
  while (!entry.tags.empty() &&
         report_expiry(entry.tags.front().tag) < now) {
    entry.tags.pop_front();
  }
  if (entry.tags.empty()) {
    return Error{Status::empty_channel, "no reportable tag"};
  }
  entry.tau_rep = now + params_.report_lock;
  return entry.tags.front();  // read, not popped
}

std::size_t ReceiverClient::garbage_collect(Timestamp now) {
  std::size_t removed = 0;
  for (auto it = channels_.begin(); it != channels_.end();) {
    ChannelEntry& entry = it->second;
    while (!entry.tags.empty() &&
           report_expiry(entry.tags.front().tag) < now) {
      entry.tags.pop_front();
      ++removed;
    }
    if (entry.tags.empty() && entry.tau_rep <= now) {
      it = channels_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

ReceiverClient::MessageVerdict ReceiverClient::verify_channel_message(
    const VerifyKey& vk, std::span<const std::uint8_t> message,
    const Signature& sig, Timestamp now) const {
  MessageVerdict verdict;
  std::vector<std::uint8_t> bound(address_.begin(), address_.end());
  bound.insert(bound.end(), message.begin(), message.end());
  verdict.signature_ok = verify(vk, sig, bound);

  auto it = channels_.find(vk);
  if (it != channels_.end() && !it->second.tags.empty()) {
    const EndorsementTag& newest = it->second.tags.back().tag;
    verdict.endorsed = now <= newest.tau + params_.val_period;
  }
  return verdict;
}

Result<std::size_t> ReceiverClient::queue_length(const VerifyKey& vk) const {
  auto it = channels_.find(vk);
  if (it == channels_.end()) {
    return Error{Status::unknown_channel, ""};
  }
  return it->second.tags.size();
}

Result<Timestamp> ReceiverClient::report_lock_until(const VerifyKey& vk) const {
  auto it = channels_.find(vk);
  if (it == channels_.end()) {
    return Error{Status::unknown_channel, ""};
  }
  return it->second.tau_rep;
}

}  // namespace sandi
