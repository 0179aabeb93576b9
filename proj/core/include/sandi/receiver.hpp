#pragma once

#include <deque>
#include <map>
#include <span>
#include <vector>

#include "sandi/types.hpp"
#include "sandi/wire.hpp"

namespace sandi {

/// Receiver-side state machine: tag verification, per-channel bookkeeping,
/// report-lock enforcement, and garbage collection. Single-writer.
class ReceiverClient {
 public:
  ReceiverClient(PublicParams params, std::vector<std::uint8_t> address);

  const std::vector<std::uint8_t>& address() const { return address_; }

  /// Verifies freshness (val_period), both commitment openings, the AS
  /// signature, and the DLEQ proof; on success enqueues the tag on the
  /// channel keyed by the sender's verification key and returns y_s.
  Result<ReputationLevel> receive_tag(const FullEndorsementTag& full,
                                      Timestamp now);

  /// Reads (but does not pop) the oldest reportable tag for the channel and
  /// arms the report lock. ignore_lock deliberately forgoes the reporter
  /// privacy protection.
  Result<wire::Report> report(const VerifyKey& vk, Timestamp now,
                              bool ignore_lock = false);

  /// Pops queue heads that have expired for reporting and drops channel
  /// entries with an empty queue and a lock in the past. Returns the number
  /// of removals.
  std::size_t garbage_collect(Timestamp now);

  struct MessageVerdict {
    bool signature_ok = false;
    bool endorsed = false;
  };

  /// Checks the channel signature over h_r || m and whether the newest tag
  /// on the channel is still valid for receiving.
  MessageVerdict verify_channel_message(const VerifyKey& vk,
                                        std::span<const std::uint8_t> message,
                                        const Signature& sig,
                                        Timestamp now) const;

  std::size_t channel_count() const { return channels_.size(); }
  Result<std::size_t> queue_length(const VerifyKey& vk) const;
  Result<Timestamp> report_lock_until(const VerifyKey& vk) const;

 private:
  struct ChannelEntry {
    Timestamp tau_rep = 0;  // next time a report is permitted
    std::deque<wire::Report> tags;  // head oldest
  };

  Timestamp report_expiry(const EndorsementTag& tag) const {
    return tag.tau +
           static_cast<Timestamp>(params_.expiry_epochs) * params_.epoch_dur;
  }

  PublicParams params_;
  std::vector<std::uint8_t> address_;
  std::map<VerifyKey, ChannelEntry> channels_;
};

}  // namespace sandi
