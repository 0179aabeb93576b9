#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

#include "sandi/group.hpp"
#include "sandi/noise.hpp"
#include "sandi/primitives.hpp"
#include "sandi/score.hpp"

namespace sandi {

/// Seconds. Protocol timestamps are plain integers so simulated clocks and
/// wall clocks interchange freely.
using Timestamp = std::int64_t;
using EpochIndex = std::int64_t;

inline constexpr std::size_t kAccountIdBytes = 16;
inline constexpr std::size_t kNonceBytes = 32;

using AccountId = std::array<std::uint8_t, kAccountIdBytes>;

/// Protocol status codes. The low byte doubles as the wire-level status in
/// error responses.
enum class Status : std::uint8_t {
  ok = 0,
  unknown_account = 1,
  duplicate_account = 2,
  epoch_key_already_set = 3,
  missing_epoch_key = 4,
  key_budget = 5,
  expired = 6,
  bad_signature = 7,
  bad_proof = 8,
  bad_ciphertext = 9,
  stale_timestamp = 10,
  commitment_mismatch = 11,
  key_mismatch = 12,
  unknown_channel = 13,
  report_locked = 14,
  empty_channel = 15,
  unknown_epoch = 16,
  malformed = 17,
  invalid_parameter = 18,
  epoch_not_rolled = 19,
  internal = 20,
};

const char* to_string(Status status);

struct Error {
  Status status = Status::internal;
  std::string message;
};

/// Small result type: either a value or an Error.
template <typename T>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}
  Result(Error error) : data_(std::move(error)) {}
  Result(Status status, std::string message = {})
      : data_(Error{status, std::move(message)}) {}

  bool ok() const { return std::holds_alternative<T>(data_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    if (!ok()) throw std::logic_error("Result::value on error");
    return std::get<T>(data_);
  }
  T& value() & {
    if (!ok()) throw std::logic_error("Result::value on error");
    return std::get<T>(data_);
  }
  T&& value() && {
    if (!ok()) throw std::logic_error("Result::value on error");
    return std::get<T>(std::move(data_));
  }

  const Error& error() const {
    if (ok()) throw std::logic_error("Result::error on value");
    return std::get<Error>(data_);
  }
  Status status() const { return ok() ? Status::ok : error().status; }

 private:
  std::variant<T, Error> data_;
};

struct Unit {};
using VoidResult = Result<Unit>;

/// The AS-signed bundle binding a channel to a sender account. The signature
/// covers every field before sig, in wire order.
struct EndorsementTag {
  Commitment com_s;
  Commitment com_r;
  Timestamp tau = 0;
  ReputationLevel reputation = ReputationLevel::low;  // y_s
  std::array<std::uint8_t, 112> ct{};  // Enc_K(ID_s || n || r), fixed width
  GroupParams pp;
  GroupElement blinded_query;   // Q
  GroupElement fresh_generator; // G'
  GroupElement tag_key;         // X = s * epk
  Signature sig;
};

/// The sender-facing output of a completed tag issuance; what actually
/// travels to the receiver.
struct FullEndorsementTag {
  CommitmentOpening op_s;
  CommitmentOpening op_r;
  VerifyKey vk;
  EndorsementTag tag;
  DleqProof proof;
  GroupElement blind_token;  // R = esk * Q
};

/// Proof of one received report: sigma = esk * Hash(n), verifiable only by
/// the sender that holds esk.
struct SenderToken {
  std::array<std::uint8_t, kNonceBytes> nonce{};
  GroupElement sigma;
};

/// Everything a participant needs to talk to an AS.
struct PublicParams {
  VerifyKey as_key;
  GroupParams group;
  Timestamp epoch_dur = 86400;
  int expiry_epochs = 2;         // E
  Timestamp val_period = 86400;  // <= (E-1) * epoch_dur
  Timestamp report_lock = 172800;  // >= E * epoch_dur
  int max_keys = 1;              // B_vk
  ScoreParams score;
  ReputationThresholds thresholds;
  NoiseParams noise;
  double sc_init = 100.0;

  EpochIndex epoch_of(Timestamp t) const {
    // Floor division; timestamps may in principle be negative in tests.
    EpochIndex q = t / epoch_dur;
    if (t % epoch_dur != 0 && ((t < 0) != (epoch_dur < 0))) --q;
    return q;
  }
  Timestamp epoch_start(EpochIndex i) const { return i * epoch_dur; }

  bool valid() const {
    return epoch_dur > 0 && expiry_epochs >= 2 &&
           val_period <= (expiry_epochs - 1) * epoch_dur && val_period > 0 &&
           report_lock >= expiry_epochs * epoch_dur && max_keys >= 1 &&
           score.valid() && thresholds.valid() && noise.valid() &&
           sc_init <= static_cast<double>(score.cap);
  }
};

}  // namespace sandi
