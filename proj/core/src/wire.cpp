#include "sandi/wire.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace sandi {

const char* to_string(Status status) {
  switch (status) {
    case Status::ok: return "ok";
    case Status::unknown_account: return "unknown-account";
    case Status::duplicate_account: return "duplicate-account";
    case Status::epoch_key_already_set: return "epoch-key-already-set";
    case Status::missing_epoch_key: return "missing-epoch-key";
    case Status::key_budget: return "key-budget";
    case Status::expired: return "expired";
    case Status::bad_signature: return "bad-signature";
    case Status::bad_proof: return "bad-proof";
    case Status::bad_ciphertext: return "bad-ciphertext";
    case Status::stale_timestamp: return "stale-timestamp";
    case Status::commitment_mismatch: return "commitment-mismatch";
    case Status::key_mismatch: return "key-mismatch";
    case Status::unknown_channel: return "unknown-channel";
    case Status::report_locked: return "report-locked";
    case Status::empty_channel: return "empty-channel";
    case Status::unknown_epoch: return "unknown-epoch";
    case Status::malformed: return "malformed";
    case Status::invalid_parameter: return "invalid-parameter";
    case Status::epoch_not_rolled: return "epoch-not-rolled";
    case Status::internal: return "internal";
  }
  return "unknown";
}

}  // namespace sandi

namespace sandi::wire {

namespace {

class Writer {
 public:
  std::vector<std::uint8_t> take() { return std::move(buf_); }

  void bytes(std::span<const std::uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 7; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

  bool bytes(std::span<std::uint8_t> out) {
    if (remaining() < out.size()) return false;
    std::memcpy(out.data(), in_.data() + pos_, out.size());
    pos_ += out.size();
    return true;
  }
  bool u8(std::uint8_t& v) {
    if (remaining() < 1) return false;
    v = in_[pos_++];
    return true;
  }
  bool u32(std::uint32_t& v) {
    if (remaining() < 4) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return true;
  }
  bool u64(std::uint64_t& v) {
    if (remaining() < 8) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return true;
  }
  bool i64(std::int64_t& v) {
    std::uint64_t u;
    if (!u64(u)) return false;
    v = static_cast<std::int64_t>(u);
    return true;
  }
  bool f64(double& v) {
    std::uint64_t u;
    if (!u64(u)) return false;
    v = std::bit_cast<double>(u);
    return true;
  }

  bool element(GroupElement& e) {
    std::array<std::uint8_t, kElementBytes> b;
    if (!bytes(b)) return false;
    auto d = GroupElement::from_bytes(b);
    if (!d) return false;
    e = *d;
    return true;
  }
  bool scalar(Scalar& s) {
    std::array<std::uint8_t, kScalarBytes> b;
    if (!bytes(b)) return false;
    auto d = Scalar::from_bytes(b);
    if (!d) return false;
    s = *d;
    return true;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_proof(Writer& w, const DleqProof& proof) {
  w.bytes(proof.c.bytes());
  w.bytes(proof.s.bytes());
}

bool get_proof(Reader& r, DleqProof& proof) {
  return r.scalar(proof.c) && r.scalar(proof.s);
}

bool get_tokens(Reader& r, std::vector<SenderToken>& out) {
  std::uint32_t count;
  if (!r.u32(count)) return false;
  if (static_cast<std::size_t>(count) * 64 > r.remaining()) return false;
  out.clear();
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    SenderToken t;
    if (!r.bytes(t.nonce) || !r.element(t.sigma)) return false;
    out.push_back(t);
  }
  return true;
}

void put_tokens(Writer& w, std::span<const SenderToken> tokens) {
  w.u32(static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) {
    w.bytes(t.nonce);
    w.bytes(t.sigma.bytes());
  }
}

}  // namespace

std::vector<std::uint8_t> encode_frame(MsgType type,
                                       std::span<const std::uint8_t> body) {
  Writer w;
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(type));
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.bytes(body);
  return w.take();
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> in) {
  Reader r(in);
  std::uint8_t version, type;
  std::uint32_t len;
  if (!r.u8(version) || !r.u8(type) || !r.u32(len)) return std::nullopt;
  if (version != kVersion) return std::nullopt;
  if (r.remaining() != len) return std::nullopt;
  Frame f;
  f.type = static_cast<MsgType>(type);
  f.body.resize(len);
  if (!r.bytes(f.body)) return std::nullopt;
  return f;
}

std::vector<std::uint8_t> tag_signed_bytes(const EndorsementTag& tag) {
  Writer w;
  w.bytes(tag.com_s.bytes);
  w.bytes(tag.com_r.bytes);
  w.i64(tag.tau);
  w.u8(static_cast<std::uint8_t>(tag.reputation));
  w.bytes(tag.ct);
  w.u8(tag.pp.suite_id);
  w.bytes(tag.pp.generator.bytes());
  w.bytes(tag.blinded_query.bytes());
  w.bytes(tag.fresh_generator.bytes());
  w.bytes(tag.tag_key.bytes());
  return w.take();
}

std::vector<std::uint8_t> encode_tag(const EndorsementTag& tag) {
  auto out = tag_signed_bytes(tag);
  out.insert(out.end(), tag.sig.bytes.begin(), tag.sig.bytes.end());
  return out;
}

std::optional<EndorsementTag> decode_tag(std::span<const std::uint8_t> in) {
  if (in.size() != kTagBytes) return std::nullopt;
  Reader r(in);
  EndorsementTag tag;
  std::uint8_t rep, suite;
  if (!r.bytes(tag.com_s.bytes) || !r.bytes(tag.com_r.bytes) ||
      !r.i64(tag.tau) || !r.u8(rep) || !r.bytes(tag.ct) || !r.u8(suite) ||
      !r.element(tag.pp.generator) || !r.element(tag.blinded_query) ||
      !r.element(tag.fresh_generator) || !r.element(tag.tag_key) ||
      !r.bytes(tag.sig.bytes) || !r.done()) {
    return std::nullopt;
  }
  if (rep >= kReputationLevels || suite != kSuiteRistretto255) {
    return std::nullopt;
  }
  tag.reputation = static_cast<ReputationLevel>(rep);
  tag.pp.suite_id = suite;
  return tag;
}

std::vector<std::uint8_t> encode_full_tag(const FullEndorsementTag& full) {
  auto out = encode_tag(full.tag);
  Writer w;
  w.bytes(full.op_s.bytes);
  w.bytes(full.op_r.bytes);
  w.bytes(full.vk.bytes);
  put_proof(w, full.proof);
  w.bytes(full.blind_token.bytes());
  const auto rest = w.take();
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::optional<FullEndorsementTag> decode_full_tag(
    std::span<const std::uint8_t> in) {
  if (in.size() != kFullTagBytes) return std::nullopt;
  auto tag = decode_tag(in.first(kTagBytes));
  if (!tag) return std::nullopt;
  Reader r(in.subspan(kTagBytes));
  FullEndorsementTag full;
  full.tag = *tag;
  if (!r.bytes(full.op_s.bytes) || !r.bytes(full.op_r.bytes) ||
      !r.bytes(full.vk.bytes) || !get_proof(r, full.proof) ||
      !r.element(full.blind_token) || !r.done()) {
    return std::nullopt;
  }
  return full;
}

std::vector<std::uint8_t> encode_report(const Report& report) {
  auto out = encode_tag(report.tag);
  Writer w;
  put_proof(w, report.proof);
  w.bytes(report.blind_token.bytes());
  const auto rest = w.take();
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::optional<Report> decode_report(std::span<const std::uint8_t> in) {
  if (in.size() != kReportBytes) return std::nullopt;
  auto tag = decode_tag(in.first(kTagBytes));
  if (!tag) return std::nullopt;
  Reader r(in.subspan(kTagBytes));
  Report rep;
  rep.tag = *tag;
  if (!get_proof(r, rep.proof) || !r.element(rep.blind_token) || !r.done()) {
    return std::nullopt;
  }
  return rep;
}

std::vector<std::uint8_t> encode_token_list(
    std::span<const SenderToken> tokens) {
  Writer w;
  put_tokens(w, tokens);
  return w.take();
}

std::optional<std::vector<SenderToken>> decode_token_list(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  std::vector<SenderToken> out;
  if (!get_tokens(r, out) || !r.done()) return std::nullopt;
  return out;
}

std::vector<std::uint8_t> encode_register_req(const RegisterRequest& req) {
  Writer w;
  w.bytes(req.id);
  return w.take();
}

std::optional<RegisterRequest> decode_register_req(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  RegisterRequest req;
  if (!r.bytes(req.id) || !r.done()) return std::nullopt;
  return req;
}

std::vector<std::uint8_t> encode_epoch_key_req(const EpochKeyRequest& req) {
  Writer w;
  w.bytes(req.id);
  w.bytes(req.epk.bytes());
  return w.take();
}

std::optional<EpochKeyRequest> decode_epoch_key_req(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  EpochKeyRequest req;
  if (!r.bytes(req.id) || !r.element(req.epk) || !r.done()) return std::nullopt;
  return req;
}

std::vector<std::uint8_t> encode_tag_req(const TagRequest& req) {
  Writer w;
  w.bytes(req.id);
  w.bytes(req.com_s.bytes);
  w.bytes(req.com_r.bytes);
  return w.take();
}

std::optional<TagRequest> decode_tag_req(std::span<const std::uint8_t> in) {
  Reader r(in);
  TagRequest req;
  if (!r.bytes(req.id) || !r.bytes(req.com_s.bytes) ||
      !r.bytes(req.com_r.bytes) || !r.done()) {
    return std::nullopt;
  }
  return req;
}

std::vector<std::uint8_t> encode_proof_req(const ProofRequest& req) {
  Writer w;
  w.bytes(req.id);
  w.i64(req.epoch);
  return w.take();
}

std::optional<ProofRequest> decode_proof_req(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  ProofRequest req;
  if (!r.bytes(req.id) || !r.i64(req.epoch) || !r.done()) return std::nullopt;
  return req;
}

std::vector<std::uint8_t> encode_proof_resp(const ProofResponse& resp) {
  Writer w;
  w.i64(resp.noisy_count);
  put_tokens(w, resp.tokens);
  return w.take();
}

std::optional<ProofResponse> decode_proof_resp(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  ProofResponse resp;
  std::int64_t noisy;
  if (!r.i64(noisy) || !get_tokens(r, resp.tokens) || !r.done()) {
    return std::nullopt;
  }
  resp.noisy_count = noisy;
  return resp;
}

std::vector<std::uint8_t> encode_params(const PublicParams& params) {
  Writer w;
  w.bytes(params.as_key.bytes);
  w.u8(params.group.suite_id);
  w.bytes(params.group.generator.bytes());
  w.i64(params.epoch_dur);
  w.u32(static_cast<std::uint32_t>(params.expiry_epochs));
  w.i64(params.val_period);
  w.i64(params.report_lock);
  w.u32(static_cast<std::uint32_t>(params.max_keys));
  w.u32(static_cast<std::uint32_t>(params.score.tolerance));
  w.u32(static_cast<std::uint32_t>(params.score.cap));
  w.f64(params.score.recovery);
  w.f64(params.thresholds.cuts[0]);
  w.f64(params.thresholds.cuts[1]);
  w.f64(params.thresholds.cuts[2]);
  w.f64(params.noise.mu);
  w.f64(params.noise.noise_std);
  w.u32(static_cast<std::uint32_t>(params.noise.sensitivity));
  w.f64(params.sc_init);
  return w.take();
}

std::optional<PublicParams> decode_params(std::span<const std::uint8_t> in) {
  Reader r(in);
  PublicParams p;
  std::uint8_t suite;
  std::uint32_t expiry, max_keys, tol, cap, sens;
  if (!r.bytes(p.as_key.bytes) || !r.u8(suite) ||
      !r.element(p.group.generator) || !r.i64(p.epoch_dur) || !r.u32(expiry) ||
      !r.i64(p.val_period) || !r.i64(p.report_lock) || !r.u32(max_keys) ||
      !r.u32(tol) || !r.u32(cap) || !r.f64(p.score.recovery) ||
      !r.f64(p.thresholds.cuts[0]) || !r.f64(p.thresholds.cuts[1]) ||
      !r.f64(p.thresholds.cuts[2]) || !r.f64(p.noise.mu) ||
      !r.f64(p.noise.noise_std) || !r.u32(sens) || !r.f64(p.sc_init) ||
      !r.done()) {
    return std::nullopt;
  }
  if (suite != kSuiteRistretto255) return std::nullopt;
  p.group.suite_id = suite;
  p.expiry_epochs = static_cast<int>(expiry);
  p.max_keys = static_cast<int>(max_keys);
  p.score.tolerance = static_cast<int>(tol);
  p.score.cap = static_cast<int>(cap);
  p.noise.sensitivity = static_cast<int>(sens);
  if (!p.valid()) return std::nullopt;
  return p;
}

std::vector<std::uint8_t> encode_roll_req(const RollRequest& req) {
  Writer w;
  w.i64(req.epoch);
  return w.take();
}

std::optional<RollRequest> decode_roll_req(std::span<const std::uint8_t> in) {
  Reader r(in);
  RollRequest req;
  if (!r.i64(req.epoch) || !r.done()) return std::nullopt;
  return req;
}

std::vector<std::uint8_t> encode_roll_resp(const RollResponse& resp) {
  Writer w;
  w.i64(resp.epoch);
  w.u32(static_cast<std::uint32_t>(resp.entries.size()));
  for (const auto& e : resp.entries) {
    w.bytes(e.id);
    w.f64(e.new_score);
    w.i64(e.noisy_count);
  }
  return w.take();
}

std::optional<RollResponse> decode_roll_resp(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  RollResponse resp;
  std::uint32_t count;
  if (!r.i64(resp.epoch) || !r.u32(count)) return std::nullopt;
  for (std::uint32_t i = 0; i < count; ++i) {
    RollEntry e;
    std::int64_t noisy;
    if (!r.bytes(e.id) || !r.f64(e.new_score) || !r.i64(noisy)) {
      return std::nullopt;
    }
    e.noisy_count = noisy;
    resp.entries.push_back(e);
  }
  if (!r.done()) return std::nullopt;
  return resp;
}

namespace {

void put_protocol_id(Writer& w) {
  const std::size_t len = std::strlen(kDummyGenProtocol);
  w.u8(static_cast<std::uint8_t>(len));
  w.bytes({reinterpret_cast<const std::uint8_t*>(kDummyGenProtocol), len});
}

bool check_protocol_id(Reader& r) {
  std::uint8_t len;
  if (!r.u8(len) || len != std::strlen(kDummyGenProtocol)) return false;
  std::vector<std::uint8_t> pid(len);
  if (!r.bytes(pid)) return false;
  return std::memcmp(pid.data(), kDummyGenProtocol, len) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_dummy_queries(const DummyGenQueries& msg) {
  Writer w;
  put_protocol_id(w);
  w.i64(msg.epoch);
  w.u32(static_cast<std::uint32_t>(msg.queries.size()));
  for (const auto& q : msg.queries) {
    w.bytes(q.bytes());
  }
  return w.take();
}

std::optional<DummyGenQueries> decode_dummy_queries(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  if (!check_protocol_id(r)) return std::nullopt;
  DummyGenQueries msg;
  std::uint32_t count;
  if (!r.i64(msg.epoch) || !r.u32(count)) return std::nullopt;
  if (static_cast<std::size_t>(count) * kElementBytes > r.remaining()) {
    return std::nullopt;
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    GroupElement q;
    if (!r.element(q)) return std::nullopt;
    msg.queries.push_back(q);
  }
  if (!r.done()) return std::nullopt;
  return msg;
}

std::vector<std::uint8_t> encode_dummy_response(const DummyGenResponse& msg) {
  Writer w;
  put_protocol_id(w);
  w.i64(msg.epoch);
  w.u32(static_cast<std::uint32_t>(msg.bits.size()));
  w.bytes(msg.bits);
  for (const auto& blinded : msg.blinded) {
    w.bytes(blinded.bytes());
  }
  put_proof(w, msg.proof);
  return w.take();
}

std::optional<DummyGenResponse> decode_dummy_response(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  if (!check_protocol_id(r)) return std::nullopt;
  DummyGenResponse msg;
  std::uint32_t count;
  if (!r.i64(msg.epoch) || !r.u32(count)) return std::nullopt;
  if (static_cast<std::size_t>(count) * (1 + kElementBytes) >
      r.remaining()) {
    return std::nullopt;
  }
  msg.bits.resize(count);
  if (!r.bytes(msg.bits)) return std::nullopt;
  for (std::uint8_t bit : msg.bits) {
    if (bit > 1) return std::nullopt;
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    GroupElement blinded;
    if (!r.element(blinded)) return std::nullopt;
    msg.blinded.push_back(blinded);
  }
  if (!get_proof(r, msg.proof) || !r.done()) return std::nullopt;
  return msg;
}

std::vector<std::uint8_t> encode_error(const ErrorBody& err) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(err.status));
  w.bytes({reinterpret_cast<const std::uint8_t*>(err.reason.data()),
           err.reason.size()});
  return w.take();
}

std::optional<ErrorBody> decode_error(std::span<const std::uint8_t> in) {
  Reader r(in);
  ErrorBody err;
  std::uint8_t status;
  if (!r.u8(status)) return std::nullopt;
  if (status > static_cast<std::uint8_t>(Status::internal)) {
    return std::nullopt;
  }
  err.status = static_cast<Status>(status);
  err.reason.assign(reinterpret_cast<const char*>(in.data()) + 1,
                    in.size() - 1);
  return err;
}

std::vector<std::uint8_t> encode_sender_record(const SenderRecordImage& rec) {
  Writer w;
  w.bytes(rec.id);
  w.i64(rec.epoch);
  w.u8(rec.has_epk ? 1 : 0);
  w.bytes(rec.epk.bytes());
  w.f64(rec.score);
  w.u32(static_cast<std::uint32_t>(rec.vks.size()));
  for (const auto& e : rec.vks) {
    w.bytes(e.com.bytes);
    w.i64(e.expiry);
  }
  put_tokens(w, rec.tokens);
  return w.take();
}

std::optional<SenderRecordImage> decode_sender_record(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  SenderRecordImage rec;
  std::uint8_t has_epk;
  std::uint32_t vks_count;
  std::array<std::uint8_t, kElementBytes> epk_raw;
  if (!r.bytes(rec.id) || !r.i64(rec.epoch) || !r.u8(has_epk) ||
      !r.bytes(epk_raw) || !r.f64(rec.score) || !r.u32(vks_count)) {
    return std::nullopt;
  }
  if (has_epk > 1) return std::nullopt;
  rec.has_epk = has_epk == 1;
  if (rec.has_epk) {
    auto epk = GroupElement::from_bytes(epk_raw);
    if (!epk) return std::nullopt;
    rec.epk = *epk;
  }
  if (static_cast<std::size_t>(vks_count) * 40 > r.remaining()) {
    return std::nullopt;
  }
  for (std::uint32_t i = 0; i < vks_count; ++i) {
    VksEntry e;
    if (!r.bytes(e.com.bytes) || !r.i64(e.expiry)) return std::nullopt;
    rec.vks.push_back(e);
  }
  if (!get_tokens(r, rec.tokens) || !r.done()) return std::nullopt;
  return rec;
}

std::vector<std::uint8_t> encode_epoch_result(const EpochResultImage& res) {
  Writer w;
  w.bytes(res.id);
  w.i64(res.epoch);
  w.i64(res.noisy_count);
  w.f64(res.new_score);
  put_tokens(w, res.proof_tokens);
  return w.take();
}

std::optional<EpochResultImage> decode_epoch_result(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  EpochResultImage res;
  std::int64_t noisy;
  if (!r.bytes(res.id) || !r.i64(res.epoch) || !r.i64(noisy) ||
      !r.f64(res.new_score) || !get_tokens(r, res.proof_tokens) || !r.done()) {
    return std::nullopt;
  }
  res.noisy_count = noisy;
  return res;
}

std::vector<std::uint8_t> encode_server_keys(const ServerKeysImage& keys) {
  Writer w;
  w.bytes(keys.enc_key.bytes);
  w.bytes(keys.sig_key.bytes);
  w.bytes(keys.pub_key.bytes);
  w.i64(keys.next_epoch);
  return w.take();
}

std::optional<ServerKeysImage> decode_server_keys(
    std::span<const std::uint8_t> in) {
  Reader r(in);
  ServerKeysImage keys;
  if (!r.bytes(keys.enc_key.bytes) || !r.bytes(keys.sig_key.bytes) ||
      !r.bytes(keys.pub_key.bytes) || !r.i64(keys.next_epoch) || !r.done()) {
    return std::nullopt;
  }
  return keys;
}

}  // namespace sandi::wire
