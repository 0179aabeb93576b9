#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <set>
#include <thread>

#include "sandi/receiver.hpp"
#include "sandi/sender.hpp"
#include "sandi/server.hpp"

using namespace sandi;

namespace {

SeededRandom& rng() {
  static SeededRandom r(0x9e0c01);
  return r;
}

AsConfig small_config() {
  AsConfig config;
  config.epoch_dur = 100;
  config.expiry_epochs = 2;
  config.val_period = 100;
  config.report_lock = 200;
  config.max_keys = 1;
  config.score = ScoreParams{2, 100, 0.5};
  config.thresholds = default_thresholds(config.score);
  config.noise = NoiseParams{-8.0, 1.1, 1};
  config.sc_init = 100.0;
  return config;
}

const std::vector<std::uint8_t> kAddr{'r', '@', 'x'};

struct Parties {
  explicit Parties(AsConfig config = small_config())
      : server(config, rng()),
        sender(server.public_params(), rng()),
        receiver(server.public_params(), kAddr),
        id{0xaa, 1} {
    REQUIRE(server.register_sender(id, 0).ok());
    REQUIRE(server.register_epoch_key(id, sender.begin_epoch(0), 0).ok());
  }

  FullEndorsementTag issue(Timestamp now, const SigKeypair& kp) {
    auto req = sender.begin_tag_request(kp.vk, kAddr, now);
    REQUIRE(req.ok());
    auto tag =
        server.issue_tag(id, req.value().com_s, req.value().com_r, now, rng());
    REQUIRE(tag.ok());
    auto full = sender.complete_tag(tag.value(), now);
    REQUIRE(full.ok());
    return std::move(full).value();
  }

  AccountabilityServer server;
  SenderClient sender;
  ReceiverClient receiver;
  AccountId id;
};

}  // namespace

TEST_CASE("setup produces fresh keys and empty state") {
  auto config = small_config();
  AccountabilityServer a(config, rng());
  AccountabilityServer b(config, rng());
  CHECK_FALSE(a.public_key() == b.public_key());
  CHECK(a.public_params().group.generator == GroupElement::base());
  CHECK(a.record_count() == 0);
}

TEST_CASE("sender registration") {
  auto config = small_config();
  AccountabilityServer server(config, rng());
  const AccountId id{1, 2, 3};

  REQUIRE(server.register_sender(id, 250).ok());
  // Record lives at epoch floor(now / epoch_dur).
  CHECK(server.score_of(id, 2).ok());
  CHECK(server.score_of(id, 2).value() == 100.0);
  CHECK_FALSE(server.score_of(id, 1).ok());

  auto dup = server.register_sender(id, 260);
  CHECK(dup.status() == Status::duplicate_account);
}

TEST_CASE("epoch key registration") {
  Parties p;
  const auto epk2 = pp_keygen(p.server.public_params().group, rng()).epk;

  auto again = p.server.register_epoch_key(p.id, epk2, 50);
  CHECK(again.status() == Status::epoch_key_already_set);

  AccountId ghost{9};
  CHECK(p.server.register_epoch_key(ghost, epk2, 50).status() ==
        Status::unknown_account);

  // After rollover a fresh registration is expected.
  REQUIRE(p.server.end_of_epoch(0, rng()).ok());
  CHECK(p.server.register_epoch_key(p.id, p.sender.begin_epoch(100), 100).ok());
}

TEST_CASE("tag issuance enforces the key budget") {
  Parties p;
  const auto kp1 = p.sender.new_channel_key();
  const auto kp2 = p.sender.new_channel_key();

  auto req1 = p.sender.begin_tag_request(kp1.vk, kAddr, 10);
  REQUIRE(req1.ok());
  auto tag1 =
      p.server.issue_tag(p.id, req1.value().com_s, req1.value().com_r, 10,
                         rng());
  REQUIRE(tag1.ok());

  SUBCASE("a second distinct key in the lock window is refused") {
    auto req2 = p.sender.begin_tag_request(kp2.vk, kAddr, 20);
    REQUIRE(req2.ok());
    auto tag2 = p.server.issue_tag(p.id, req2.value().com_s,
                                   req2.value().com_r, 20, rng());
    CHECK(tag2.status() == Status::key_budget);
    CHECK(p.server.active_key_count(p.id, 0, 20).value() == 1);
  }

  SUBCASE("reusing the same commitment is fine") {
    auto tag2 = p.server.issue_tag(p.id, req1.value().com_s,
                                   req1.value().com_r, 20, rng());
    CHECK(tag2.ok());
    CHECK(p.server.active_key_count(p.id, 0, 20).value() == 1);
  }

  SUBCASE("issued tag verifies and X matches the epoch key") {
    const auto& tag = tag1.value();
    CHECK(verify(p.server.public_key(), tag.sig, wire::tag_signed_bytes(tag)));
    const auto esk = p.sender.epoch_secret(0);
    REQUIRE(esk.ok());
    CHECK(*tag.fresh_generator.mul(esk.value()) == tag.tag_key);
  }

  SUBCASE("missing epoch key is an error") {
    AccountId other{7};
    REQUIRE(p.server.register_sender(other, 10).ok());
    auto req = p.sender.begin_tag_request(kp2.vk, kAddr, 10);
    auto tag = p.server.issue_tag(other, req.value().com_s,
                                  req.value().com_r, 10, rng());
    CHECK(tag.status() == Status::missing_epoch_key);
  }
}

TEST_CASE("report handling") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  const auto full = p.issue(10, kp);

  SUBCASE("valid report stores a verifiable token") {
    auto outcome = p.server.handle_report(full.tag, full.proof,
                                          full.blind_token, 20);
    REQUIRE(outcome.ok());
    CHECK(outcome.value() == AccountabilityServer::ReportOutcome::accepted);
    CHECK(p.server.token_count(p.id, 0).value() == 1);

    auto proof_at_roll = [&] {
      p.server.set_noise_override([] { return -1; });
      REQUIRE(p.server.end_of_epoch(0, rng()).ok());
      REQUIRE(p.server.end_of_epoch(1, rng()).ok());
      return p.server.end_of_epoch(2, rng());
    }();
    REQUIRE(proof_at_roll.ok());
    // One token, noise -1: nothing is shown.
    auto stored = p.server.proof_of_reports(p.id, 2);
    REQUIRE(stored.ok());
    CHECK(stored.value().noisy_count == 0);
  }

  SUBCASE("duplicate reports are dropped silently") {
    REQUIRE(p.server.handle_report(full.tag, full.proof, full.blind_token, 20)
                .ok());
    auto dup =
        p.server.handle_report(full.tag, full.proof, full.blind_token, 30);
    REQUIRE(dup.ok());
    CHECK(dup.value() == AccountabilityServer::ReportOutcome::duplicate);
    CHECK(p.server.token_count(p.id, 0).value() == 1);
  }

  SUBCASE("reporting expiry boundary") {
    // exp = tau + E * epoch_dur = 10 + 200.
    CHECK(p.server.handle_report(full.tag, full.proof, full.blind_token, 210)
              .ok());
    Parties q;
    const auto kq = q.sender.new_channel_key();
    const auto f2 = q.issue(10, kq);
    auto late =
        q.server.handle_report(f2.tag, f2.proof, f2.blind_token, 211);
    CHECK(late.status() == Status::expired);
  }

  SUBCASE("tampered signature rejects") {
    auto bad = full.tag;
    bad.sig.bytes[0] ^= 1;
    CHECK(p.server.handle_report(bad, full.proof, full.blind_token, 20)
              .status() == Status::bad_signature);
  }

  SUBCASE("wrong proof rejects") {
    auto bad = full.proof;
    bad.s = bad.s.add(Scalar::from_u64(1));
    CHECK(p.server.handle_report(full.tag, bad, full.blind_token, 20)
              .status() == Status::bad_proof);
  }

  SUBCASE("swapped blind token rejects") {
    CHECK(p.server.handle_report(full.tag, full.proof,
                                 GroupElement::base(), 20)
              .status() == Status::bad_proof);
  }
}

TEST_CASE("end of epoch scoring and proofs") {
  auto config = small_config();
  config.score = ScoreParams{1, 100, 0.5};
  config.max_keys = 8;
  Parties p(config);

  // Five reports against epoch-0 tags.
  for (int i = 0; i < 5; ++i) {
    const auto kp = p.sender.new_channel_key();
    const auto full = p.issue(10 + i, kp);
    REQUIRE(p.server
                .handle_report(full.tag, full.proof, full.blind_token, 50)
                .ok());
  }
  REQUIRE(p.server.token_count(p.id, 0).value() == 5);

  p.server.set_noise_override([] { return -2; });
  REQUIRE(p.server.end_of_epoch(0, rng()).ok());
  REQUIRE(p.server.end_of_epoch(1, rng()).ok());
  auto rolled = p.server.end_of_epoch(2, rng());
  REQUIRE(rolled.ok());

  const auto& entry = rolled.value().at(p.id);
  // x = 5, N = -2, k = 1: upd(sc, 3) = sc - 3 + 1.
  CHECK(entry.noisy_count == 3);
  CHECK(entry.new_score ==
        doctest::Approx(p.server.score_of(p.id, 2).value() - 2.0));

  auto proof = p.server.proof_of_reports(p.id, 2);
  REQUIRE(proof.ok());
  CHECK(proof.value().tokens.size() == 3);
  const auto esk = p.sender.epoch_secret(0);
  REQUIRE(esk.ok());
  CHECK(SenderClient::verify_report_proof(proof.value().tokens, 3,
                                          esk.value()));

  // Idempotent: the frozen subset is returned again.
  auto again = p.server.proof_of_reports(p.id, 2);
  REQUIRE(again.ok());
  CHECK(again.value().tokens.size() == proof.value().tokens.size());
  for (std::size_t i = 0; i < again.value().tokens.size(); ++i) {
    CHECK(again.value().tokens[i].nonce == proof.value().tokens[i].nonce);
  }

  CHECK(p.server.proof_of_reports(p.id, 99).status() == Status::unknown_epoch);
}

TEST_CASE("score recovers when nothing is reported") {
  Parties p;
  p.server.set_noise_override([] { return -3; });
  auto r0 = p.server.end_of_epoch(0, rng());
  REQUIRE(r0.ok());
  CHECK(r0.value().at(p.id).noisy_count == 0);
  CHECK(r0.value().at(p.id).new_score == 100.0);  // capped at M

  // Push the score down, then watch it recover by b per epoch.
  auto config = small_config();
  config.score = ScoreParams{1, 100, 0.5};
  config.max_keys = 16;
  Parties q(config);
  for (int i = 0; i < 12; ++i) {
    const auto kp = q.sender.new_channel_key();
    const auto full = q.issue(10 + i, kp);
    REQUIRE(q.server.handle_report(full.tag, full.proof, full.blind_token, 50)
                .ok());
  }
  q.server.set_noise_override([] { return -1; });
  REQUIRE(q.server.end_of_epoch(0, rng()).ok());
  REQUIRE(q.server.end_of_epoch(1, rng()).ok());
  auto drop = q.server.end_of_epoch(2, rng());
  // x = 12, N = -1: upd(100, 11) = 100 - 11 + 1 = 90.
  CHECK(drop.value().at(q.id).new_score == doctest::Approx(90.0));
  auto recover = q.server.end_of_epoch(3, rng());
  CHECK(recover.value().at(q.id).new_score == doctest::Approx(90.5));
}

TEST_CASE("verification key expiry carries across rollovers") {
  auto config = small_config();
  Parties p(config);
  const auto kp = p.sender.new_channel_key();
  (void)p.issue(10, kp);  // vks entry expires at 10 + 200

  p.server.set_noise_override([] { return -1; });
  REQUIRE(p.server.end_of_epoch(0, rng()).ok());
  // Still locked at t = 100: carried into epoch 1.
  CHECK(p.server.active_key_count(p.id, 1, 100).value() == 1);
  REQUIRE(p.server.end_of_epoch(1, rng()).ok());
  // Expiry 210 has passed by the roll at t = 200... the entry survives only
  // if its expiry lies beyond the boundary.
  CHECK(p.server.active_key_count(p.id, 2, 200).value() == 1);
  REQUIRE(p.server.end_of_epoch(2, rng()).ok());
  CHECK(p.server.active_key_count(p.id, 3, 300).value() == 0);
}

TEST_CASE("storage stays flat however many tags are issued") {
  auto config = small_config();
  Parties p(config);
  const auto kp = p.sender.new_channel_key();
  auto req = p.sender.begin_tag_request(kp.vk, kAddr, 10);
  REQUIRE(req.ok());

  const std::size_t before = p.server.record_count();
  for (int i = 0; i < 500; ++i) {
    auto tag = p.server.issue_tag(p.id, req.value().com_s,
                                  req.value().com_r, 10, rng());
    REQUIRE(tag.ok());
  }
  CHECK(p.server.record_count() == before);
  CHECK(p.server.token_count(p.id, 0).value() == 0);
  CHECK(p.server.active_key_count(p.id, 0, 10).value() == 1);
}

TEST_CASE("sender tag request bookkeeping") {
  Parties p;
  const auto kp = p.sender.new_channel_key();

  auto req = p.sender.begin_tag_request(kp.vk, kAddr, 5);
  REQUIRE(req.ok());
  CHECK(p.sender.pending_count() == 1);

  auto req2 = p.sender.begin_tag_request(kp.vk, kAddr, 6);
  REQUIRE(req2.ok());
  CHECK_FALSE(req.value().com_s == req2.value().com_s);
  CHECK_FALSE(req.value().com_r == req2.value().com_r);
  CHECK(p.sender.pending_count() == 2);

  SUBCASE("keypair cannot span two addresses") {
    const std::vector<std::uint8_t> other{'z'};
    CHECK(p.sender.begin_tag_request(kp.vk, other, 7).status() ==
          Status::key_mismatch);
  }

  SUBCASE("stale pending entries are pruned") {
    (void)p.sender.begin_tag_request(kp.vk, kAddr, 5 + 700);
    CHECK(p.sender.pending_count() == 1);
  }
}

TEST_CASE("complete_tag validates the AS response") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  auto req = p.sender.begin_tag_request(kp.vk, kAddr, 10);
  auto tag = p.server.issue_tag(p.id, req.value().com_s, req.value().com_r,
                                10, rng());
  REQUIRE(tag.ok());

  SUBCASE("honest response completes and self-verifies") {
    auto full = p.sender.complete_tag(tag.value(), 11);
    REQUIRE(full.ok());
    CHECK(nizk_dleq_verify(full.value().tag.pp,
                           full.value().tag.fresh_generator,
                           full.value().tag.tag_key,
                           full.value().tag.blinded_query,
                           full.value().blind_token, full.value().proof));
  }

  SUBCASE("stale timestamp is refused") {
    CHECK(p.sender.complete_tag(tag.value(), 10 + 121).status() ==
          Status::stale_timestamp);
  }

  SUBCASE("unknown commitments are refused") {
    auto other = tag.value();
    other.com_s.bytes[0] ^= 1;
    CHECK(p.sender.complete_tag(other, 11).status() ==
          Status::commitment_mismatch);
  }

  SUBCASE("X computed from a foreign epoch key is caught") {
    // A dishonest AS substitutes another sender's epoch key.
    SenderClient other(p.server.public_params(), rng());
    AccountId other_id{0xbb};
    REQUIRE(p.server.register_sender(other_id, 10).ok());
    REQUIRE(p.server
                .register_epoch_key(other_id, other.begin_epoch(10), 10)
                .ok());
    auto foreign = p.server.issue_tag(other_id, req.value().com_s,
                                      req.value().com_r, 12, rng());
    REQUIRE(foreign.ok());
    CHECK(p.sender.complete_tag(foreign.value(), 12).status() ==
          Status::key_mismatch);
  }

  SUBCASE("bad AS signature is caught") {
    auto forged = tag.value();
    forged.sig.bytes[10] ^= 1;
    CHECK(p.sender.complete_tag(forged, 11).status() ==
          Status::bad_signature);
  }
}

TEST_CASE("channel message signing") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  const std::vector<std::uint8_t> msg{'h', 'i'};

  const auto sig = p.sender.sign_channel_message(kp.vk, kAddr, msg);
  auto verdict = p.receiver.verify_channel_message(kp.vk, msg, sig, 10);
  CHECK(verdict.signature_ok);
  CHECK_FALSE(verdict.endorsed);  // no tag on the channel yet

  // A signature bound to a different address fails here.
  const std::vector<std::uint8_t> elsewhere{'e', 'l', 's', 'e'};
  const auto kp2 = p.sender.new_channel_key();
  const auto sig2 = p.sender.sign_channel_message(kp2.vk, elsewhere, msg);
  CHECK_FALSE(
      p.receiver.verify_channel_message(kp2.vk, msg, sig2, 10).signature_ok);
  // And the right signature under the wrong key fails.
  CHECK_FALSE(
      p.receiver.verify_channel_message(kp2.vk, msg, sig, 10).signature_ok);
}

TEST_CASE("verify_report_proof") {
  Parties p;
  const auto esk = p.sender.epoch_secret(0).value();

  std::vector<SenderToken> tokens;
  for (int i = 0; i < 3; ++i) {
    SenderToken t;
    rng().fill(t.nonce);
    t.sigma = *hash_to_group(t.nonce).mul(esk);
    tokens.push_back(t);
  }
  CHECK(SenderClient::verify_report_proof(tokens, 3, esk));
  CHECK_FALSE(SenderClient::verify_report_proof(tokens, 2, esk));

  SUBCASE("duplicate nonce rejects") {
    auto dup = tokens;
    dup.push_back(tokens[0]);
    CHECK_FALSE(SenderClient::verify_report_proof(dup, 4, esk));
  }

  SUBCASE("forged sigma rejects") {
    auto forged = tokens;
    const std::array<std::uint8_t, 1> junk{0x42};
    forged[1].sigma = hash_to_group(junk);
    CHECK_FALSE(SenderClient::verify_report_proof(forged, 3, esk));
  }
}

TEST_CASE("receiver tag acceptance") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  const auto full = p.issue(10, kp);

  SUBCASE("fresh honest tag is accepted and queued") {
    auto y = p.receiver.receive_tag(full, 20);
    REQUIRE(y.ok());
    CHECK(y.value() == ReputationLevel::very_high);
    CHECK(p.receiver.channel_count() == 1);
    CHECK(p.receiver.queue_length(kp.vk).value() == 1);
  }

  SUBCASE("forwarded tag fails the address commitment") {
    ReceiverClient other(p.server.public_params(), {'w', 'r', 'o', 'n', 'g'});
    CHECK(other.receive_tag(full, 20).status() ==
          Status::commitment_mismatch);
  }

  SUBCASE("receiving expiry boundary") {
    CHECK(p.receiver.receive_tag(full, 10 + 100).ok());
    Parties q;
    const auto kq = q.sender.new_channel_key();
    const auto f2 = q.issue(10, kq);
    CHECK(q.receiver.receive_tag(f2, 10 + 101).status() == Status::expired);
  }

  SUBCASE("tampered proof is rejected") {
    auto bad = full;
    bad.proof.c = bad.proof.c.add(Scalar::from_u64(1));
    CHECK(p.receiver.receive_tag(bad, 20).status() == Status::bad_proof);
  }
}

TEST_CASE("report lock") {
  auto config = small_config();
  config.max_keys = 2;  // the second epoch needs a fresh commitment slot
  Parties p(config);
  const auto kp = p.sender.new_channel_key();
  REQUIRE(p.receiver.receive_tag(p.issue(10, kp), 20).ok());

  auto first = p.receiver.report(kp.vk, 30);
  REQUIRE(first.ok());
  CHECK(p.receiver.report_lock_until(kp.vk).value() == 230);

  SUBCASE("second report inside the lock fails") {
    CHECK(p.receiver.report(kp.vk, 100).status() == Status::report_locked);
  }

  SUBCASE("boundary: exactly tau_rep is permitted") {
    // Queue another tag so a head is available after the first expires.
    REQUIRE(p.server.end_of_epoch(0, rng()).ok());
    REQUIRE(p.server
                .register_epoch_key(p.id, p.sender.begin_epoch(130), 130)
                .ok());
    REQUIRE(p.receiver.receive_tag(p.issue(130, kp), 140).ok());
    auto again = p.receiver.report(kp.vk, 230);
    CHECK(again.ok());
  }

  SUBCASE("unsafe flag bypasses the lock") {
    auto again = p.receiver.report(kp.vk, 100, true);
    CHECK(again.ok());
  }

  SUBCASE("unknown channel and empty queue") {
    const auto kp2 = p.sender.new_channel_key();
    CHECK(p.receiver.report(kp2.vk, 30).status() == Status::unknown_channel);
  }
}

TEST_CASE("receiver garbage collection") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  REQUIRE(p.receiver.receive_tag(p.issue(10, kp), 20).ok());

  SUBCASE("unexpired head is retained") {
    CHECK(p.receiver.garbage_collect(100) == 0);
    CHECK(p.receiver.queue_length(kp.vk).value() == 1);
  }

  SUBCASE("expired head is popped, idle channel removed") {
    // Tag expires for reporting at 210; lock (set at receive) at 20.
    CHECK(p.receiver.garbage_collect(211) == 2);
    CHECK(p.receiver.channel_count() == 0);
  }

  SUBCASE("channel with a live lock is kept") {
    REQUIRE(p.receiver.report(kp.vk, 30).ok());  // lock until 230
    CHECK(p.receiver.garbage_collect(211) == 1);
    CHECK(p.receiver.channel_count() == 1);
    CHECK(p.receiver.garbage_collect(231) == 1);
    CHECK(p.receiver.channel_count() == 0);
  }
}

TEST_CASE("replayed tag delivery is harmless") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  const auto full = p.issue(10, kp);
  REQUIRE(p.receiver.receive_tag(full, 20).ok());
  // A resent full tag passes verification again and enqueues a duplicate...
  REQUIRE(p.receiver.receive_tag(full, 21).ok());
  CHECK(p.receiver.queue_length(kp.vk).value() == 2);

  // ...which the AS silently drops when both copies get reported.
  auto first = p.receiver.report(kp.vk, 30);
  REQUIRE(first.ok());
  REQUIRE(p.server
              .handle_report(first.value().tag, first.value().proof,
                             first.value().blind_token, 30)
              .ok());
  auto second = p.receiver.report(kp.vk, 40, true);
  REQUIRE(second.ok());
  auto outcome =
      p.server.handle_report(second.value().tag, second.value().proof,
                             second.value().blind_token, 40);
  REQUIRE(outcome.ok());
  CHECK(outcome.value() == AccountabilityServer::ReportOutcome::duplicate);
  CHECK(p.server.token_count(p.id, 0).value() == 1);
}

TEST_CASE("endorsement status follows the newest tag") {
  Parties p;
  const auto kp = p.sender.new_channel_key();
  REQUIRE(p.receiver.receive_tag(p.issue(10, kp), 20).ok());
  const std::vector<std::uint8_t> msg{'m'};
  const auto sig = p.sender.sign_channel_message(kp.vk, kAddr, msg);

  auto fresh = p.receiver.verify_channel_message(kp.vk, msg, sig, 50);
  CHECK(fresh.signature_ok);
  CHECK(fresh.endorsed);

  auto stale = p.receiver.verify_channel_message(kp.vk, msg, sig, 111);
  CHECK(stale.signature_ok);
  CHECK_FALSE(stale.endorsed);
}

TEST_CASE("unlinkability: tags across channels share no identifying fields") {
  auto config = small_config();
  config.max_keys = 256;
  Parties p(config);

  std::set<std::vector<std::uint8_t>> seen;
  auto note = [&](std::span<const std::uint8_t> b) {
    CHECK(seen.insert(std::vector<std::uint8_t>(b.begin(), b.end())).second);
  };

  for (int i = 0; i < 100; ++i) {
    const auto kp = p.sender.new_channel_key();
    const auto full = p.issue(10, kp);
    note(full.tag.com_s.bytes);
    note(full.tag.com_r.bytes);
    note(full.tag.ct);
    note(full.tag.blinded_query.bytes());
    note(full.tag.fresh_generator.bytes());
    note(full.tag.tag_key.bytes());
    note(full.tag.sig.bytes);
    note(full.blind_token.bytes());
  }
}

TEST_CASE("lock safety under randomized operation sequences") {
  auto config = small_config();
  config.max_keys = 4;
  Parties p(config);
  const auto kp = p.sender.new_channel_key();

  Timestamp now = 0;
  Timestamp last_report = -1;
  EpochIndex current_epoch = 0;

  for (int step = 0; step < 400; ++step) {
    now += 1 + static_cast<Timestamp>(rng().next_u64() % 20);
    const EpochIndex epoch = p.server.public_params().epoch_of(now);
    while (current_epoch < epoch) {
      REQUIRE(p.server.end_of_epoch(current_epoch, rng()).ok());
      ++current_epoch;
      if (!p.sender.has_epoch_key(current_epoch)) {
        REQUIRE(p.server
                    .register_epoch_key(
                        p.id, p.sender.begin_epoch(now), now)
                    .ok());
      }
    }
    switch (rng().next_u64() % 3) {
      case 0: {
        auto req = p.sender.begin_tag_request(kp.vk, kAddr, now);
        auto tag = p.server.issue_tag(p.id, req.value().com_s,
                                      req.value().com_r, now, rng());
        if (tag.ok()) {
          auto full = p.sender.complete_tag(tag.value(), now);
          REQUIRE(full.ok());
          (void)p.receiver.receive_tag(full.value(), now);
        }
        break;
      }
      case 1: {
        auto rep = p.receiver.report(kp.vk, now);
        if (rep.ok()) {
          if (last_report >= 0) {
            CHECK(now - last_report >=
                  p.server.public_params().report_lock);
          }
          last_report = now;
          (void)p.server.handle_report(rep.value().tag, rep.value().proof,
                                       rep.value().blind_token, now);
        }
        break;
      }
      default:
        (void)p.receiver.garbage_collect(now);
        break;
    }
  }
}

TEST_CASE("concurrent senders are isolated") {
  auto config = small_config();
  config.max_keys = 64;
  AccountabilityServer server(config, SystemRandom::instance());

  constexpr int kThreads = 4;
  constexpr int kPerThread = 8;
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};

  for (int w = 0; w < kThreads; ++w) {
    workers.emplace_back([&, w] {
      auto& rng = SystemRandom::instance();
      SenderClient sender(server.public_params(), rng);
      AccountId id{};
      id[0] = static_cast<std::uint8_t>(w + 1);
      if (!server.register_sender(id, 0).ok() ||
          !server.register_epoch_key(id, sender.begin_epoch(0), 0).ok()) {
        ++failures;
        return;
      }
      for (int i = 0; i < kPerThread; ++i) {
        const auto kp = sender.new_channel_key();
        auto req = sender.begin_tag_request(kp.vk, kAddr, 10);
        auto tag = server.issue_tag(id, req.value().com_s, req.value().com_r,
                                    10, rng);
        if (!tag.ok()) {
          ++failures;
          continue;
        }
        auto full = sender.complete_tag(tag.value(), 10);
        if (!full.ok() ||
            !server
                 .handle_report(full.value().tag, full.value().proof,
                                full.value().blind_token, 20)
                 .ok()) {
          ++failures;
        }
      }
    });
  }
  for (auto& t : workers) t.join();

  CHECK(failures.load() == 0);
  for (int w = 0; w < kThreads; ++w) {
    AccountId id{};
    id[0] = static_cast<std::uint8_t>(w + 1);
    CHECK(server.token_count(id, 0).value() == kPerThread);
  }
}

TEST_CASE("end to end: noisy proof accepted for the true report count") {
  auto config = small_config();
  config.score = ScoreParams{1, 100, 0.5};
  config.max_keys = 8;
  Parties p(config);

  const int reports = 4;
  for (int i = 0; i < reports; ++i) {
    const auto kp = p.sender.new_channel_key();
    const auto full = p.issue(10 + i, kp);
    REQUIRE(p.receiver.receive_tag(full, 15 + i).ok());
    auto rep = p.receiver.report(kp.vk, 20 + i, true);
    REQUIRE(rep.ok());
    REQUIRE(p.server.handle_report(rep.value().tag, rep.value().proof,
                                   rep.value().blind_token, 20 + i)
                .ok());
  }

  const long long noise = -2;
  p.server.set_noise_override([&] { return noise; });
  REQUIRE(p.server.end_of_epoch(0, rng()).ok());
  REQUIRE(p.server.end_of_epoch(1, rng()).ok());
  auto rolled = p.server.end_of_epoch(2, rng());
  REQUIRE(rolled.ok());
  const long long claimed = rolled.value().at(p.id).noisy_count;
  CHECK(claimed == std::max<long long>(reports + noise, 0));

  auto proof = p.server.proof_of_reports(p.id, 2);
  REQUIRE(proof.ok());
  CHECK(SenderClient::verify_report_proof(proof.value().tokens, claimed,
                                          p.sender.epoch_secret(0).value()));
}
