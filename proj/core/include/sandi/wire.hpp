#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sandi/types.hpp"

namespace sandi::wire {

inline constexpr std::uint8_t kVersion = 0x01;

enum class MsgType : std::uint8_t {
  tag = 0x01,
  full_tag = 0x02,
  report = 0x03,
  token_list = 0x04,
  register_req = 0x05,
  epoch_key_req = 0x06,
  tag_req = 0x07,
  proof_req = 0x08,
  params = 0x09,
  roll_req = 0x0a,
  roll_resp = 0x0b,
  proof_resp = 0x0c,
  ok = 0x0d,
  sender_record = 0x10,
  epoch_result = 0x11,
  server_keys = 0x12,
  dummy_queries = 0x20,
  dummy_response = 0x21,
  error = 0x7f,
};

/// Protocol identifier carried by oblivious dummy-generation messages.
inline constexpr char kDummyGenProtocol[] = "dummy-gen/v1";

// Fixed sizes of the core encodings.
inline constexpr std::size_t kTagBytes = 378;
inline constexpr std::size_t kTagSignedBytes = 314;  // bytes 0..313 are signed
inline constexpr std::size_t kFullTagBytes = 570;
inline constexpr std::size_t kReportBytes = 474;

struct Frame {
  MsgType type;
  std::vector<std::uint8_t> body;
};

std::vector<std::uint8_t> encode_frame(MsgType type,
                                       std::span<const std::uint8_t> body);
std::optional<Frame> decode_frame(std::span<const std::uint8_t> in);

// Endorsement tags. The signed prefix (everything before sig) is exposed so
// signers and verifiers agree on the exact byte string.
std::vector<std::uint8_t> tag_signed_bytes(const EndorsementTag& tag);
std::vector<std::uint8_t> encode_tag(const EndorsementTag& tag);
std::optional<EndorsementTag> decode_tag(std::span<const std::uint8_t> in);

std::vector<std::uint8_t> encode_full_tag(const FullEndorsementTag& full);
std::optional<FullEndorsementTag> decode_full_tag(
    std::span<const std::uint8_t> in);

struct Report {
  EndorsementTag tag;
  DleqProof proof;
  GroupElement blind_token;
};

std::vector<std::uint8_t> encode_report(const Report& report);
std::optional<Report> decode_report(std::span<const std::uint8_t> in);

std::vector<std::uint8_t> encode_token_list(std::span<const SenderToken> tokens);
std::optional<std::vector<SenderToken>> decode_token_list(
    std::span<const std::uint8_t> in);

// Request/response bodies used by the service.

struct RegisterRequest {
  AccountId id{};
};
std::vector<std::uint8_t> encode_register_req(const RegisterRequest& req);
std::optional<RegisterRequest> decode_register_req(
    std::span<const std::uint8_t> in);

struct EpochKeyRequest {
  AccountId id{};
  GroupElement epk;
};
std::vector<std::uint8_t> encode_epoch_key_req(const EpochKeyRequest& req);
std::optional<EpochKeyRequest> decode_epoch_key_req(
    std::span<const std::uint8_t> in);

struct TagRequest {
  AccountId id{};
  Commitment com_s;
  Commitment com_r;
};
std::vector<std::uint8_t> encode_tag_req(const TagRequest& req);
std::optional<TagRequest> decode_tag_req(std::span<const std::uint8_t> in);

struct ProofRequest {
  AccountId id{};
  EpochIndex epoch = 0;
};
std::vector<std::uint8_t> encode_proof_req(const ProofRequest& req);
std::optional<ProofRequest> decode_proof_req(std::span<const std::uint8_t> in);

struct ProofResponse {
  long long noisy_count = 0;
  std::vector<SenderToken> tokens;
};
std::vector<std::uint8_t> encode_proof_resp(const ProofResponse& resp);
std::optional<ProofResponse> decode_proof_resp(
    std::span<const std::uint8_t> in);

std::vector<std::uint8_t> encode_params(const PublicParams& params);
std::optional<PublicParams> decode_params(std::span<const std::uint8_t> in);

struct RollRequest {
  EpochIndex epoch = 0;  // the epoch index to end
};
std::vector<std::uint8_t> encode_roll_req(const RollRequest& req);
std::optional<RollRequest> decode_roll_req(std::span<const std::uint8_t> in);

struct RollEntry {
  AccountId id{};
  double new_score = 0.0;
  long long noisy_count = 0;
};
struct RollResponse {
  EpochIndex epoch = 0;
  std::vector<RollEntry> entries;
};
std::vector<std::uint8_t> encode_roll_resp(const RollResponse& resp);
std::optional<RollResponse> decode_roll_resp(std::span<const std::uint8_t> in);

// Oblivious dummy-generation messages ("dummy-gen/v1"). Each body starts
// with the protocol identifier so peers can reject mismatched versions.

struct DummyGenQueries {
  EpochIndex epoch = 0;
  std::vector<GroupElement> queries;
};
std::vector<std::uint8_t> encode_dummy_queries(const DummyGenQueries& msg);
std::optional<DummyGenQueries> decode_dummy_queries(
    std::span<const std::uint8_t> in);

struct DummyGenResponse {
  EpochIndex epoch = 0;
  std::vector<std::uint8_t> bits;
  std::vector<GroupElement> blinded;
  DleqProof proof;
};
std::vector<std::uint8_t> encode_dummy_response(const DummyGenResponse& msg);
std::optional<DummyGenResponse> decode_dummy_response(
    std::span<const std::uint8_t> in);

struct ErrorBody {
  Status status = Status::internal;
  std::string reason;
};
std::vector<std::uint8_t> encode_error(const ErrorBody& err);
std::optional<ErrorBody> decode_error(std::span<const std::uint8_t> in);

// Persistence images: plain data snapshots of AS state, appended to the log
// keyed by (id, epoch).

struct VksEntry {
  Commitment com;
  Timestamp expiry = 0;
};

struct SenderRecordImage {
  AccountId id{};
  EpochIndex epoch = 0;
  bool has_epk = false;
  GroupElement epk;
  double score = 0.0;
  std::vector<VksEntry> vks;
  std::vector<SenderToken> tokens;
};
std::vector<std::uint8_t> encode_sender_record(const SenderRecordImage& rec);
std::optional<SenderRecordImage> decode_sender_record(
    std::span<const std::uint8_t> in);

struct EpochResultImage {
  AccountId id{};
  EpochIndex epoch = 0;
  long long noisy_count = 0;
  double new_score = 0.0;
  std::vector<SenderToken> proof_tokens;
};
std::vector<std::uint8_t> encode_epoch_result(const EpochResultImage& res);
std::optional<EpochResultImage> decode_epoch_result(
    std::span<const std::uint8_t> in);

struct ServerKeysImage {
  SymKey enc_key;
  SigningKey sig_key;
  VerifyKey pub_key;
  EpochIndex next_epoch = 0;
};
std::vector<std::uint8_t> encode_server_keys(const ServerKeysImage& keys);
std::optional<ServerKeysImage> decode_server_keys(
    std::span<const std::uint8_t> in);

}  // namespace sandi::wire
