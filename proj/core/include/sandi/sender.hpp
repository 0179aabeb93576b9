#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sandi/types.hpp"

namespace sandi {

/// Sender-side state machine: epoch keys, channel signing keys, pending tag
/// requests, and report-proof verification. One instance per sender account;
/// operations on a single instance are not thread safe.
class SenderClient {
 public:
  SenderClient(PublicParams params, RandomSource& rng);

  /// Rotates the epoch key for the epoch containing `now` and returns the
  /// public half for registration with the AS. Older epoch secrets are kept
  /// so report proofs for past epochs remain verifiable.
  const GroupElement& begin_epoch(Timestamp now);

  bool has_epoch_key(EpochIndex epoch) const;
  Result<Scalar> epoch_secret(EpochIndex epoch) const;

  /// Fresh signing keypair for one sender address. A keypair must never be
  /// used with two different addresses.
  SigKeypair new_channel_key();

  struct TagRequest {
    Commitment com_s;
    Commitment com_r;
  };

  /// Commits to (vk, h_r) and stores the openings until the AS responds.
  /// Rejects reuse of vk with a different receiver address.
  Result<TagRequest> begin_tag_request(const VerifyKey& vk,
                                       std::span<const std::uint8_t> h_r,
                                       Timestamp now);

  /// Validates the AS response for a pending request and produces the full
  /// endorsement tag: checks freshness, commitment echo, the AS signature,
  /// and X = esk * G'; computes R = esk * Q and the DLEQ proof.
  Result<FullEndorsementTag> complete_tag(const EndorsementTag& tag,
                                          Timestamp now);

  Signature sign_channel_message(const VerifyKey& vk,
                                 std::span<const std::uint8_t> h_r,
                                 std::span<const std::uint8_t> message);

  /// Accepts iff exactly claimed_x tokens, pairwise distinct nonces, and
  /// every sigma = esk * Hash(nonce).
  static bool verify_report_proof(std::span<const SenderToken> tokens,
                                  long long claimed_x, const Scalar& esk);

  std::size_t pending_count() const { return pending_.size(); }

  /// Maximum clock skew tolerated between the tag timestamp and local time.
  static constexpr Timestamp kTagFreshness = 120;

 private:
  struct PendingRequest {
    CommitmentOpening op_s;
    CommitmentOpening op_r;
    VerifyKey vk;
    Timestamp created = 0;
  };

  struct PendingKey {
    Commitment com_s;
    Commitment com_r;

    auto operator<=>(const PendingKey&) const = default;
  };

  void prune_pending(Timestamp now);

  static constexpr Timestamp kPendingTtl = 600;

  PublicParams params_;
  RandomSource& rng_;
  std::map<EpochIndex, PpKeypair> epoch_keys_;
  std::map<VerifyKey, SigningKey> channel_keys_;
  std::map<VerifyKey, std::vector<std::uint8_t>> key_address_;
  std::map<PendingKey, PendingRequest> pending_;
};

}  // namespace sandi
