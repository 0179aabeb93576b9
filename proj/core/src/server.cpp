#include "sandi/server.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace sandi {

namespace {

constexpr EpochIndex kEpochUnset = std::numeric_limits<EpochIndex>::min();

constexpr std::size_t kCtPlaintextBytes =
    kAccountIdBytes + kNonceBytes + kScalarBytes;  // 80

PublicParams make_public(const AsConfig& config, const VerifyKey& vk) {
  PublicParams p;
  p.as_key = vk;
  p.group = config.group;
  p.epoch_dur = config.epoch_dur;
  p.expiry_epochs = config.expiry_epochs;
  p.val_period = config.val_period;
  p.report_lock = config.report_lock;
  p.max_keys = config.max_keys;
  p.score = config.score;
  p.thresholds = config.thresholds;
  p.noise = config.noise;
  p.sc_init = config.sc_init;
  return p;
}

}  // namespace

bool AsConfig::valid() const {
  PublicParams p = make_public(*this, VerifyKey{});
  return p.valid();
}

AccountabilityServer::AccountabilityServer(AsConfig config, RandomSource& rng)
    : AccountabilityServer(std::move(config), sym_keygen(rng),
                           sig_keygen(rng), kEpochUnset) {
  persist_keys();
}

AccountabilityServer::AccountabilityServer(AsConfig config, SymKey k,
                                           SigKeypair keys,
                                           EpochIndex next_epoch)
    : config_(std::move(config)),
      public_params_(make_public(config_, keys.vk)),
      enc_key_(k),
      sig_keys_(keys),
      next_epoch_(next_epoch) {
  if (!config_.valid()) {
    throw std::invalid_argument("invalid AS configuration");
  }
}

Result<std::unique_ptr<AccountabilityServer>> AccountabilityServer::open(
    AsConfig config) {
  if (config.persist_path.empty()) {
    return Error{Status::invalid_parameter, "no persistence path configured"};
  }
  std::ifstream in(config.persist_path, std::ios::binary);
  if (!in) {
    return Error{Status::invalid_parameter, "cannot open state log"};
  }
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());

  std::optional<wire::ServerKeysImage> keys;
  std::vector<wire::SenderRecordImage> records;
  std::vector<wire::EpochResultImage> results;

  std::size_t pos = 0;
  while (pos < data.size()) {
    if (data.size() - pos < 6) {
      return Error{Status::malformed, "truncated state log"};
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len = (len << 8) | data[pos + 2 + static_cast<std::size_t>(i)];
    const std::size_t total = 6 + len;
    if (data.size() - pos < total) {
      return Error{Status::malformed, "truncated state log"};
    }
    auto frame = wire::decode_frame({data.data() + pos, total});
    if (!frame) {
      return Error{Status::malformed, "corrupt state log frame"};
    }
    switch (frame->type) {
      case wire::MsgType::server_keys: {
        auto k = wire::decode_server_keys(frame->body);
        if (!k) return Error{Status::malformed, "corrupt keys frame"};
        keys = *k;
        break;
      }
      case wire::MsgType::sender_record: {
        auto r = wire::decode_sender_record(frame->body);
        if (!r) return Error{Status::malformed, "corrupt record frame"};
        records.push_back(std::move(*r));
        break;
      }
      case wire::MsgType::epoch_result: {
        auto r = wire::decode_epoch_result(frame->body);
        if (!r) return Error{Status::malformed, "corrupt result frame"};
        results.push_back(std::move(*r));
        break;
      }
      default:
        return Error{Status::malformed, "unexpected frame in state log"};
    }
    pos += total;
  }
  if (!keys) {
    return Error{Status::malformed, "state log has no key material"};
  }

  SigKeypair kp;
  kp.sgk = keys->sig_key;
  kp.vk = keys->pub_key;
  auto server = std::unique_ptr<AccountabilityServer>(new AccountabilityServer(
      std::move(config), keys->enc_key, kp, keys->next_epoch));

  for (const auto& img : records) {
    Account& acct = server->accounts_[img.id];
    SenderRecord rec;
    rec.has_epk = img.has_epk;
    rec.epk = img.epk;
    rec.score = img.score;
    for (const auto& e : img.vks) rec.vks[e.com] = e.expiry;
    for (const auto& t : img.tokens) rec.tokens[t.nonce] = t.sigma;
    acct.records[img.epoch] = std::move(rec);
  }
  for (const auto& img : results) {
    Account& acct = server->accounts_[img.id];
    acct.proofs[img.epoch] = ReportProof{img.noisy_count, img.proof_tokens};
  }
  return server;
}

EpochIndex AccountabilityServer::next_epoch_to_roll() const {
  std::shared_lock lk(state_lock_);
  return next_epoch_;
}

VoidResult AccountabilityServer::register_sender(const AccountId& id,
                                                 Timestamp now) {
  std::unique_lock lk(state_lock_);
  if (accounts_.contains(id)) {
    return Error{Status::duplicate_account, "account already registered"};
  }
  const EpochIndex epoch = epoch_of(now);
  if (next_epoch_ == kEpochUnset) {
    next_epoch_ = epoch;
    persist_keys();
  }
  Account& acct = accounts_[id];
  SenderRecord rec;
  rec.score = config_.sc_init;
  persist_record(id, epoch, rec);
  acct.records[epoch] = std::move(rec);
  return Unit{};
}

VoidResult AccountabilityServer::register_epoch_key(const AccountId& id,
                                                    const GroupElement& epk,
                                                    Timestamp now) {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, "sender not registered"};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto rec_it = it->second.records.find(epoch_of(now));
  if (rec_it == it->second.records.end()) {
    return Error{Status::epoch_not_rolled, "no record for current epoch"};
  }
  if (rec_it->second.has_epk) {
    return Error{Status::epoch_key_already_set,
                 "epoch key already registered"};
  }
  rec_it->second.has_epk = true;
  rec_it->second.epk = epk;
  persist_record(id, rec_it->first, rec_it->second);
  return Unit{};
}

Result<EndorsementTag> AccountabilityServer::issue_tag(const AccountId& id,
                                                       const Commitment& com_s,
                                                       const Commitment& com_r,
                                                       Timestamp now,
                                                       RandomSource& rng) {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, "sender not registered"};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto rec_it = it->second.records.find(epoch_of(now));
  if (rec_it == it->second.records.end()) {
    return Error{Status::epoch_not_rolled, "no record for current epoch"};
  }
  SenderRecord& rec = rec_it->second;
  if (!rec.has_epk) {
    return Error{Status::missing_epoch_key, "no epoch key registered"};
  }

  // Drop key slots whose lock window has passed.
  std::erase_if(rec.vks, [&](const auto& kv) { return kv.second < now; });
  if (!rec.vks.contains(com_s) &&
      rec.vks.size() >= static_cast<std::size_t>(config_.max_keys)) {
    return Error{Status::key_budget, "verification key budget exhausted"};
  }
  rec.vks[com_s] = now + config_.report_lock;

  EndorsementTag tag;
  tag.com_s = com_s;
  tag.com_r = com_r;
  tag.tau = now;
  tag.reputation = reputation(rec.score, config_.thresholds);
  tag.pp = config_.group;

  const Scalar s = Scalar::random_nonzero(rng);
  auto g_prime = config_.group.generator.mul(s);
  auto x = rec.epk.mul(s);
  if (!g_prime || !x) {
    return Error{Status::internal, "degenerate rerandomization"};
  }
  tag.fresh_generator = *g_prime;
  tag.tag_key = *x;

  std::array<std::uint8_t, kNonceBytes> nonce;
  rng.fill(nonce);
  const PpBlinding blinding = pp_blind(nonce, rng);
  tag.blinded_query = blinding.q;

  std::array<std::uint8_t, kCtPlaintextBytes> pt;
  std::memcpy(pt.data(), id.data(), kAccountIdBytes);
  std::memcpy(pt.data() + kAccountIdBytes, nonce.data(), kNonceBytes);
  std::memcpy(pt.data() + kAccountIdBytes + kNonceBytes,
              blinding.r.bytes().data(), kScalarBytes);
  const auto ct = sym_encrypt(enc_key_, pt, rng);
  std::memcpy(tag.ct.data(), ct.data(), tag.ct.size());

  tag.sig = sign(sig_keys_.sgk, wire::tag_signed_bytes(tag));

  persist_record(id, rec_it->first, rec);
  return tag;
}

Result<AccountabilityServer::ReportOutcome> AccountabilityServer::handle_report(
    const EndorsementTag& tag, const DleqProof& proof,
    const GroupElement& blind_token, Timestamp now) {
  const Timestamp expiry =
      tag.tau + static_cast<Timestamp>(config_.expiry_epochs) * config_.epoch_dur;
  if (now > expiry) {
    return Error{Status::expired, "tag expired for reporting"};
  }
  if (!verify(public_params_.as_key, tag.sig, wire::tag_signed_bytes(tag))) {
    return Error{Status::bad_signature, "tag signature invalid"};
  }
  if (!nizk_dleq_verify(tag.pp, tag.fresh_generator, tag.tag_key,
                        tag.blinded_query, blind_token, proof)) {
    return Error{Status::bad_proof, "blind token proof invalid"};
  }

  const auto pt = sym_decrypt(enc_key_, tag.ct);
  if (!pt || pt->size() != kCtPlaintextBytes) {
    return Error{Status::bad_ciphertext, "cannot decrypt tag ciphertext"};
  }
  AccountId id;
  std::memcpy(id.data(), pt->data(), kAccountIdBytes);
  std::array<std::uint8_t, kNonceBytes> nonce;
  std::memcpy(nonce.data(), pt->data() + kAccountIdBytes, kNonceBytes);
  std::array<std::uint8_t, kScalarBytes> r_raw;
  std::memcpy(r_raw.data(), pt->data() + kAccountIdBytes + kNonceBytes,
              kScalarBytes);
  const auto r = Scalar::from_bytes(r_raw);
  if (!r) {
    return Error{Status::bad_ciphertext, "blinding factor not canonical"};
  }

  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, "tag for unknown account"};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto rec_it = it->second.records.find(epoch_of(tag.tau));
  if (rec_it == it->second.records.end()) {
    return Error{Status::unknown_epoch, "no record for tag epoch"};
  }
  SenderRecord& rec = rec_it->second;

  if (rec.tokens.contains(nonce)) {
    return ReportOutcome::duplicate;  // silent: no state change
  }

  const auto sigma = pp_unblind(blind_token, *r);
  if (!sigma) {
    return Error{Status::bad_proof, "cannot unblind token"};
  }
  rec.tokens[nonce] = *sigma;
  persist_record(id, rec_it->first, rec);
  return ReportOutcome::accepted;
}

Result<std::map<AccountId, AccountabilityServer::EpochEntry>>
AccountabilityServer::end_of_epoch(EpochIndex i, RandomSource& rng) {
  std::unique_lock lk(state_lock_);
  if (next_epoch_ == kEpochUnset) {
    next_epoch_ = i;
  }
  if (i != next_epoch_) {
    return Error{Status::unknown_epoch, "epochs must be rolled in order"};
  }

  const Timestamp roll_time = public_params_.epoch_start(i + 1);
  const EpochIndex source = i - config_.expiry_epochs;
  std::map<AccountId, EpochEntry> out;

  for (auto& [id, acct] : accounts_) {
    auto rec_it = acct.records.find(i);
    if (rec_it == acct.records.end()) {
      continue;
    }
    SenderRecord& rec = rec_it->second;

    std::vector<SenderToken> received;
    if (auto src = acct.records.find(source); src != acct.records.end()) {
      received.reserve(src->second.tokens.size());
      for (const auto& [nonce, sigma] : src->second.tokens) {
        received.push_back(SenderToken{nonce, sigma});
      }
    }
    const long long x = static_cast<long long>(received.size());

    long long z;  // noisy count fed to the score function
    ReportProof proof;
    if (config_.oblivious_noise) {
      auto dummies = acct.pending_dummies.find(source);
      proof.tokens = received;
      if (dummies != acct.pending_dummies.end()) {
        proof.tokens.insert(proof.tokens.end(), dummies->second.begin(),
                            dummies->second.end());
        acct.pending_dummies.erase(dummies);
      }
      z = static_cast<long long>(proof.tokens.size());
      proof.noisy_count = z;
    } else {
      long long noise;
      if (noise_override_) {
        noise = noise_override_();
      } else if (!rec.has_epk && x == 0) {
        // No activity this epoch and nothing to report: deterministic
        // catch-up with x = 0, N = mu.
        noise = catchup_noise(config_.noise);
      } else {
        noise = sample_noise(config_.noise, rng);
      }
      z = x + noise;
      proof.noisy_count = std::max<long long>(z, 0);
      // Uniformly random subset of the received tokens.
      for (long long kept = 0; kept < proof.noisy_count; ++kept) {
        const std::size_t remaining = received.size() - static_cast<std::size_t>(kept);
        const std::size_t j =
            static_cast<std::size_t>(kept) + rng.next_u64() % remaining;
        std::swap(received[static_cast<std::size_t>(kept)], received[j]);
      }
      proof.tokens.assign(received.begin(),
                          received.begin() + proof.noisy_count);
    }

    SenderRecord next;
    next.score = upd(rec.score, z, config_.score);
    for (const auto& [com, expiry] : rec.vks) {
      if (expiry > roll_time) {
        next.vks[com] = expiry;
      }
    }

    out[id] = EpochEntry{next.score, proof.noisy_count};
    persist_epoch_result(id, i, proof, next.score);
    persist_record(id, i + 1, next);
    acct.proofs[i] = std::move(proof);
    acct.records[i + 1] = std::move(next);

    // Garbage collection: reports can still arrive during epoch i + 1 for
    // tags issued in epochs >= i + 1 - E; anything older is dead weight.
    std::erase_if(acct.records, [&](const auto& kv) {
      return kv.first < i + 1 - config_.expiry_epochs;
    });
    std::erase_if(acct.proofs, [&](const auto& kv) {
      return kv.first < i - config_.expiry_epochs;
    });
  }

  roll_results_[i] = out;
  std::erase_if(roll_results_, [&](const auto& kv) {
    return kv.first < i - config_.expiry_epochs;
  });
  next_epoch_ = i + 1;
  persist_keys();
  return out;
}

Result<std::map<AccountId, AccountabilityServer::EpochEntry>>
AccountabilityServer::epoch_results(EpochIndex i) const {
  std::shared_lock lk(state_lock_);
  auto it = roll_results_.find(i);
  if (it == roll_results_.end()) {
    return Error{Status::unknown_epoch, "epoch not rolled or discarded"};
  }
  return it->second;
}

VoidResult AccountabilityServer::roll_until(Timestamp now, RandomSource& rng) {
  const EpochIndex current = epoch_of(now);
  for (;;) {
    {
      std::shared_lock lk(state_lock_);
      if (next_epoch_ == kEpochUnset || next_epoch_ >= current) {
        return Unit{};
      }
    }
    EpochIndex to_roll;
    {
      std::shared_lock lk(state_lock_);
      to_roll = next_epoch_;
    }
    auto r = end_of_epoch(to_roll, rng);
    if (!r) {
      // Lost a race with another roller; retry unless a real failure.
      if (r.error().status != Status::unknown_epoch) {
        return r.error();
      }
    }
  }
}

Result<AccountabilityServer::ReportProof>
AccountabilityServer::proof_of_reports(const AccountId& id,
                                       EpochIndex epoch) const {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, "sender not registered"};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto p = it->second.proofs.find(epoch);
  if (p == it->second.proofs.end()) {
    return Error{Status::unknown_epoch, "epoch not rolled or proof discarded"};
  }
  return p->second;
}

VoidResult AccountabilityServer::attach_dummy_tokens(
    const AccountId& id, EpochIndex epoch, std::vector<SenderToken> dummies) {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, "sender not registered"};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto& slot = it->second.pending_dummies[epoch];
  slot.insert(slot.end(), dummies.begin(), dummies.end());
  return Unit{};
}

Result<double> AccountabilityServer::score_of(const AccountId& id,
                                              EpochIndex epoch) const {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, ""};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto rec = it->second.records.find(epoch);
  if (rec == it->second.records.end()) {
    return Error{Status::unknown_epoch, ""};
  }
  return rec->second.score;
}

Result<std::size_t> AccountabilityServer::token_count(const AccountId& id,
                                                      EpochIndex epoch) const {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, ""};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto rec = it->second.records.find(epoch);
  if (rec == it->second.records.end()) {
    return Error{Status::unknown_epoch, ""};
  }
  return rec->second.tokens.size();
}

Result<std::size_t> AccountabilityServer::active_key_count(
    const AccountId& id, EpochIndex epoch, Timestamp now) const {
  std::shared_lock lk(state_lock_);
  auto it = accounts_.find(id);
  if (it == accounts_.end()) {
    return Error{Status::unknown_account, ""};
  }
  std::lock_guard acct_lk(*it->second.lock);
  auto rec = it->second.records.find(epoch);
  if (rec == it->second.records.end()) {
    return Error{Status::unknown_epoch, ""};
  }
  std::size_t n = 0;
  for (const auto& [com, expiry] : rec->second.vks) {
    if (expiry >= now) ++n;
  }
  return n;
}

std::size_t AccountabilityServer::record_count() const {
  std::shared_lock lk(state_lock_);
  std::size_t n = 0;
  for (const auto& [id, acct] : accounts_) {
    n += acct.records.size();
  }
  return n;
}

void AccountabilityServer::set_noise_override(std::function<long long()> fn) {
  std::unique_lock lk(state_lock_);
  noise_override_ = std::move(fn);
}

void AccountabilityServer::append_frame(wire::MsgType type,
                                        std::span<const std::uint8_t> body) {
  if (config_.persist_path.empty()) {
    return;
  }
  const auto frame = wire::encode_frame(type, body);
  std::lock_guard lk(persist_lock_);
  std::ofstream out(config_.persist_path,
                    std::ios::binary | std::ios::app);
  out.write(reinterpret_cast<const char*>(frame.data()),
            static_cast<std::streamsize>(frame.size()));
}

void AccountabilityServer::persist_record(const AccountId& id,
                                          EpochIndex epoch,
                                          const SenderRecord& rec) {
  if (config_.persist_path.empty()) {
    return;
  }
  wire::SenderRecordImage img;
  img.id = id;
  img.epoch = epoch;
  img.has_epk = rec.has_epk;
  img.epk = rec.epk;
  img.score = rec.score;
  for (const auto& [com, expiry] : rec.vks) {
    img.vks.push_back(wire::VksEntry{com, expiry});
  }
  for (const auto& [nonce, sigma] : rec.tokens) {
    img.tokens.push_back(SenderToken{nonce, sigma});
  }
  append_frame(wire::MsgType::sender_record, wire::encode_sender_record(img));
}

void AccountabilityServer::persist_epoch_result(const AccountId& id,
                                                EpochIndex epoch,
                                                const ReportProof& proof,
                                                double new_score) {
  if (config_.persist_path.empty()) {
    return;
  }
  wire::EpochResultImage img;
  img.id = id;
  img.epoch = epoch;
  img.noisy_count = proof.noisy_count;
  img.new_score = new_score;
  img.proof_tokens = proof.tokens;
  append_frame(wire::MsgType::epoch_result, wire::encode_epoch_result(img));
}

void AccountabilityServer::persist_keys() {
  if (config_.persist_path.empty()) {
    return;
  }
  wire::ServerKeysImage img;
  img.enc_key = enc_key_;
  img.sig_key = sig_keys_.sgk;
  img.pub_key = sig_keys_.vk;
  img.next_epoch = next_epoch_;
  append_frame(wire::MsgType::server_keys, wire::encode_server_keys(img));
}

}  // namespace sandi
