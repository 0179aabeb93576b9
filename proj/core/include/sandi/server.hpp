#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sandi/types.hpp"
#include "sandi/wire.hpp"

namespace sandi {

/// Server-side configuration. PublicParams carries the protocol constants;
/// the rest selects server behavior.
struct AsConfig {
  Timestamp epoch_dur = 86400;
  int expiry_epochs = 2;  // E >= 2
  Timestamp val_period = 86400;
  Timestamp report_lock = 172800;
  int max_keys = 1;  // B_vk
  ScoreParams score;
  ReputationThresholds thresholds = default_thresholds(score);
  NoiseParams noise;
  double sc_init = static_cast<double>(score.cap);
  GroupParams group;

  /// When true, end-of-epoch noise comes from oblivious dummy-token batches
  /// attached per (sender, epoch) instead of the truncated Gaussian.
  bool oblivious_noise = false;

  /// Append-only state log; empty disables persistence.
  std::string persist_path;

  bool valid() const;
};

/// The Accountability Server state machine: registration, epoch keys, tag
/// issuance, report handling, end-of-epoch scoring, and proofs of reports.
///
/// Concurrency: mutations to a single sender's record are serialized by a
/// per-account mutex under a shared lock; epoch rolls take the lock
/// exclusively.
class AccountabilityServer {
 public:
  AccountabilityServer(AsConfig config, RandomSource& rng);

  /// Rebuilds state from a previously written log.
  static Result<std::unique_ptr<AccountabilityServer>> open(AsConfig config);

  const VerifyKey& public_key() const { return public_params_.as_key; }
  const PublicParams& public_params() const { return public_params_; }
  EpochIndex next_epoch_to_roll() const;

  VoidResult register_sender(const AccountId& id, Timestamp now);

  VoidResult register_epoch_key(const AccountId& id, const GroupElement& epk,
                                Timestamp now);

  Result<EndorsementTag> issue_tag(const AccountId& id, const Commitment& com_s,
                                   const Commitment& com_r, Timestamp now,
                                   RandomSource& rng);

  enum class ReportOutcome { accepted, duplicate };

  Result<ReportOutcome> handle_report(const EndorsementTag& tag,
                                      const DleqProof& proof,
                                      const GroupElement& blind_token,
                                      Timestamp now);

  struct EpochEntry {
    double new_score = 0.0;
    long long noisy_count = 0;
  };

  /// Ends epoch i: scores every sender with a record at i using the token
  /// count from epoch i - E plus noise, creates the record for i + 1, and
  /// freezes the token subset later served by proof_of_reports. Epochs must
  /// be rolled in order.
  Result<std::map<AccountId, EpochEntry>> end_of_epoch(EpochIndex i,
                                                       RandomSource& rng);

  /// Rolls every pending epoch strictly before epoch_of(now).
  VoidResult roll_until(Timestamp now, RandomSource& rng);

  /// Stored outcome of an already-rolled epoch (kept for the same window as
  /// report proofs).
  Result<std::map<AccountId, EpochEntry>> epoch_results(EpochIndex i) const;

  struct ReportProof {
    long long noisy_count = 0;
    std::vector<SenderToken> tokens;
  };

  /// Idempotent: the subset is fixed when the epoch is rolled.
  Result<ReportProof> proof_of_reports(const AccountId& id,
                                       EpochIndex epoch) const;

  /// Attaches dummy tokens for the oblivious-noise backend, consumed at the
  /// end of the given epoch.
  VoidResult attach_dummy_tokens(const AccountId& id, EpochIndex epoch,
                                 std::vector<SenderToken> dummies);

  // Introspection used by tests and the scenario driver.
  Result<double> score_of(const AccountId& id, EpochIndex epoch) const;
  Result<std::size_t> token_count(const AccountId& id, EpochIndex epoch) const;
  Result<std::size_t> active_key_count(const AccountId& id, EpochIndex epoch,
                                       Timestamp now) const;
  std::size_t record_count() const;

  /// Test hook: overrides the noise draw at end of epoch.
  void set_noise_override(std::function<long long()> fn);

 private:
  struct SenderRecord {
    bool has_epk = false;
    GroupElement epk;
    double score = 0.0;
    std::map<Commitment, Timestamp> vks;  // commitment -> expiry
    std::map<std::array<std::uint8_t, kNonceBytes>, GroupElement> tokens;
  };

  struct Account {
    std::unique_ptr<std::mutex> lock = std::make_unique<std::mutex>();
    std::map<EpochIndex, SenderRecord> records;
    std::map<EpochIndex, ReportProof> proofs;
    std::map<EpochIndex, std::vector<SenderToken>> pending_dummies;
  };

  AccountabilityServer(AsConfig config, SymKey k, SigKeypair keys,
                       EpochIndex next_epoch);

  EpochIndex epoch_of(Timestamp t) const { return public_params_.epoch_of(t); }

  void persist_record(const AccountId& id, EpochIndex epoch,
                      const SenderRecord& rec);
  void persist_epoch_result(const AccountId& id, EpochIndex epoch,
                            const ReportProof& proof, double new_score);
  void persist_keys();
  void append_frame(wire::MsgType type, std::span<const std::uint8_t> body);

  AsConfig config_;
  PublicParams public_params_;
  SymKey enc_key_;
  SigKeypair sig_keys_;

  mutable std::shared_mutex state_lock_;
  std::map<AccountId, Account> accounts_;
  std::map<EpochIndex, std::map<AccountId, EpochEntry>> roll_results_;
  EpochIndex next_epoch_ = 0;

  std::function<long long()> noise_override_;
  mutable std::mutex persist_lock_;
};

}  // namespace sandi
