#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "sandi/config.hpp"
#include "sandi/dummy_tokens.hpp"
#include "sandi/receiver.hpp"
#include "sandi/scenario.hpp"
#include "sandi/sender.hpp"
#include "sandi/service.hpp"

using namespace sandi;

namespace {

SeededRandom& rng() {
  static SeededRandom r(0x31f3);
  return r;
}

AsConfig small_config() {
  AsConfig config;
  config.epoch_dur = 100;
  config.expiry_epochs = 2;
  config.val_period = 100;
  config.report_lock = 200;
  config.max_keys = 2;
  config.score = ScoreParams{2, 100, 0.5};
  config.thresholds = default_thresholds(config.score);
  config.noise = NoiseParams{-8.0, 1.1, 1};
  config.sc_init = 100.0;
  return config;
}

const std::vector<std::uint8_t> kAddr{'r', 'x'};

struct Parties {
  Parties()
      : server(small_config(), rng()),
        sender(server.public_params(), rng()),
        receiver(server.public_params(), kAddr),
        id{0x11} {
    REQUIRE(server.register_sender(id, 0).ok());
    REQUIRE(server.register_epoch_key(id, sender.begin_epoch(0), 0).ok());
  }

  FullEndorsementTag issue(Timestamp now) {
    const auto kp = sender.new_channel_key();
    auto req = sender.begin_tag_request(kp.vk, kAddr, now);
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

TEST_CASE("tag encodings have the pinned sizes and round-trip") {
  Parties p;
  const auto full = p.issue(10);

  const auto tag_bytes = wire::encode_tag(full.tag);
  CHECK(tag_bytes.size() == wire::kTagBytes);
  CHECK(tag_bytes.size() == 378);
  CHECK(wire::tag_signed_bytes(full.tag).size() == wire::kTagSignedBytes);

  const auto full_bytes = wire::encode_full_tag(full);
  CHECK(full_bytes.size() == wire::kFullTagBytes);
  CHECK(full_bytes.size() == 570);

  auto tag2 = wire::decode_tag(tag_bytes);
  REQUIRE(tag2.has_value());
  CHECK(wire::encode_tag(*tag2) == tag_bytes);

  auto full2 = wire::decode_full_tag(full_bytes);
  REQUIRE(full2.has_value());
  CHECK(wire::encode_full_tag(*full2) == full_bytes);

  const wire::Report report{full.tag, full.proof, full.blind_token};
  const auto report_bytes = wire::encode_report(report);
  CHECK(report_bytes.size() == wire::kReportBytes);
  auto report2 = wire::decode_report(report_bytes);
  REQUIRE(report2.has_value());
  CHECK(wire::encode_report(*report2) == report_bytes);

  SUBCASE("truncation and padding are rejected") {
    auto short_tag = tag_bytes;
    short_tag.pop_back();
    CHECK_FALSE(wire::decode_tag(short_tag).has_value());
    auto long_tag = tag_bytes;
    long_tag.push_back(0);
    CHECK_FALSE(wire::decode_tag(long_tag).has_value());
  }

  SUBCASE("invalid element encodings are rejected") {
    auto bad = tag_bytes;
    // Q starts after com_s(32) com_r(32) tau(8) y(1) ct(112) suite(1) G(32).
    for (std::size_t i = 218; i < 250; ++i) bad[i] = 0xff;
    CHECK_FALSE(wire::decode_tag(bad).has_value());
  }
}

TEST_CASE("token list and frame round-trips") {
  std::vector<SenderToken> tokens;
  for (int i = 0; i < 5; ++i) {
    SenderToken t;
    rng().fill(t.nonce);
    t.sigma = hash_to_group(t.nonce);
    tokens.push_back(t);
  }
  const auto bytes = wire::encode_token_list(tokens);
  auto back = wire::decode_token_list(bytes);
  REQUIRE(back.has_value());
  REQUIRE(back->size() == tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    CHECK((*back)[i].nonce == tokens[i].nonce);
    CHECK((*back)[i].sigma == tokens[i].sigma);
  }

  const auto frame = wire::encode_frame(wire::MsgType::token_list, bytes);
  auto parsed = wire::decode_frame(frame);
  REQUIRE(parsed.has_value());
  CHECK(parsed->type == wire::MsgType::token_list);
  CHECK(parsed->body == bytes);

  SUBCASE("frame length must match exactly") {
    auto bad = frame;
    bad.push_back(0);
    CHECK_FALSE(wire::decode_frame(bad).has_value());
    bad = frame;
    bad.pop_back();
    CHECK_FALSE(wire::decode_frame(bad).has_value());
    bad = frame;
    bad[0] = 0x02;  // unknown version
    CHECK_FALSE(wire::decode_frame(bad).has_value());
  }
}

TEST_CASE("dummy-gen messages round-trip under their protocol id") {
  SeededRandom& r = rng();
  wire::DummyGenQueries queries;
  queries.epoch = 12;
  for (int i = 0; i < 5; ++i) {
    std::array<std::uint8_t, 8> seed;
    r.fill(seed);
    queries.queries.push_back(hash_to_group(seed));
  }
  const auto qbytes = wire::encode_dummy_queries(queries);
  auto qback = wire::decode_dummy_queries(qbytes);
  REQUIRE(qback.has_value());
  CHECK(qback->epoch == 12);
  REQUIRE(qback->queries.size() == 5);
  CHECK(qback->queries[3] == queries.queries[3]);

  wire::DummyGenResponse resp;
  resp.epoch = 12;
  resp.bits = {0, 1, 1, 0, 1};
  resp.blinded = queries.queries;
  resp.proof.c = Scalar::from_u64(7);
  resp.proof.s = Scalar::from_u64(9);
  const auto rbytes = wire::encode_dummy_response(resp);
  auto rback = wire::decode_dummy_response(rbytes);
  REQUIRE(rback.has_value());
  CHECK(rback->bits == resp.bits);
  CHECK(rback->proof.c == resp.proof.c);

  SUBCASE("a wrong protocol id is rejected") {
    auto bad = qbytes;
    bad[3] ^= 1;  // inside the identifier
    CHECK_FALSE(wire::decode_dummy_queries(bad).has_value());
  }
}

TEST_CASE("decoder fuzz never crashes") {
  for (int i = 0; i < 20000; ++i) {
    const std::size_t len = rng().next_u64() % 700;
    std::vector<std::uint8_t> junk(len);
    rng().fill(junk);
    (void)wire::decode_tag(junk);
    (void)wire::decode_full_tag(junk);
    (void)wire::decode_report(junk);
    (void)wire::decode_token_list(junk);
    (void)wire::decode_frame(junk);
    (void)wire::decode_params(junk);
    (void)wire::decode_proof_resp(junk);
    (void)wire::decode_sender_record(junk);
    (void)wire::decode_epoch_result(junk);
    (void)wire::decode_dummy_queries(junk);
    (void)wire::decode_dummy_response(junk);
  }
}

TEST_CASE("params encode/decode") {
  Parties p;
  const auto bytes = wire::encode_params(p.server.public_params());
  auto back = wire::decode_params(bytes);
  REQUIRE(back.has_value());
  CHECK(back->as_key == p.server.public_params().as_key);
  CHECK(back->epoch_dur == 100);
  CHECK(back->expiry_epochs == 2);
  CHECK(back->report_lock == 200);
  CHECK(back->max_keys == 2);
  CHECK(back->score.recovery == 0.5);
  CHECK(back->noise.mu == -8.0);
}

TEST_CASE("config parsing") {
  auto cfg = parse_config(
      "# comment\n"
      "epoch_dur = 86400\n"
      "E = 3\n"
      "val_period = 86400\n"
      "report_lock = 259200\n"
      "B_vk = 3\n"
      "k = 2\n"
      "M = 50\n"
      "b = 0.25\n"
      "mu = -23\n"
      "sigma = 3.3\n"
      "sc_init = 40\n"
      "bind = 0.0.0.0:9999\n"
      "persist = /tmp/sandi.log\n");
  REQUIRE(cfg.ok());
  CHECK(cfg.value().as.expiry_epochs == 3);
  CHECK(cfg.value().as.max_keys == 3);
  CHECK(cfg.value().as.noise.sensitivity == 3);
  CHECK(cfg.value().as.score.cap == 50);
  CHECK(cfg.value().as.sc_init == 40.0);
  CHECK(cfg.value().bind_host == "0.0.0.0");
  CHECK(cfg.value().bind_port == 9999);
  CHECK(cfg.value().as.persist_path == "/tmp/sandi.log");

  CHECK_FALSE(parse_config("nonsense = 1\n").ok());
  CHECK_FALSE(parse_config("epoch_dur\n").ok());
  // E = 1 violates the protocol constraint E >= 2.
  CHECK_FALSE(parse_config("E = 1\n").ok());
}

TEST_CASE("service round equals the in-process result") {
  SeededRandom server_rng(77);
  AccountabilityServer server(small_config(), server_rng);
  auto clock = std::make_shared<Timestamp>(0);

  HttpService service(server, [clock] { return *clock; }, server_rng);
  const int port = service.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  RemoteAs remote("127.0.0.1", port);

  auto params = remote.params();
  REQUIRE(params.ok());
  CHECK(wire::encode_params(params.value()) ==
        wire::encode_params(server.public_params()));

  SenderClient sender(params.value(), rng());
  ReceiverClient receiver(params.value(), kAddr);
  const AccountId id{0x77};

  REQUIRE(remote.register_sender(id).ok());
  REQUIRE(remote.register_epoch_key(id, sender.begin_epoch(0)).ok());

  *clock = 10;
  const auto kp = sender.new_channel_key();
  auto req = sender.begin_tag_request(kp.vk, kAddr, 10);
  auto tag = remote.issue_tag(id, req.value().com_s, req.value().com_r);
  REQUIRE(tag.ok());
  auto full = sender.complete_tag(tag.value(), 10);
  REQUIRE(full.ok());
  REQUIRE(receiver.receive_tag(full.value(), 12).ok());

  auto rep = receiver.report(kp.vk, 20);
  REQUIRE(rep.ok());
  REQUIRE(remote.submit_report(rep.value()).ok());
  // The wire path deduplicates silently, exactly like the in-process path.
  REQUIRE(remote.submit_report(rep.value()).ok());
  CHECK(server.token_count(id, 0).value() == 1);

  server.set_noise_override([] { return -1; });
  *clock = 100;
  for (EpochIndex e = 0; e <= 2; ++e) {
    *clock = (e + 1) * 100;
    auto rolled = remote.roll_epoch(e);
    REQUIRE(rolled.ok());
    if (e == 2) {
      REQUIRE(rolled.value().entries.size() == 1);
      CHECK(rolled.value().entries[0].noisy_count == 0);  // 1 report - 1
    }
  }

  auto proof = remote.proof_of_reports(id, 2);
  REQUIRE(proof.ok());
  const auto direct = server.proof_of_reports(id, 2);
  REQUIRE(direct.ok());
  CHECK(proof.value().noisy_count == direct.value().noisy_count);
  REQUIRE(proof.value().tokens.size() == direct.value().tokens.size());
  for (std::size_t i = 0; i < proof.value().tokens.size(); ++i) {
    CHECK(proof.value().tokens[i].nonce == direct.value().tokens[i].nonce);
  }

  SUBCASE("error statuses cross the wire") {
    auto dup = remote.register_sender(id);
    CHECK(dup.status() == Status::duplicate_account);

    // Exhaust the key budget: two fresh keys beyond max_keys = 2.
    auto r1 = sender.begin_tag_request(sender.new_channel_key().vk, kAddr,
                                       *clock);
    REQUIRE(remote.register_epoch_key(id, sender.begin_epoch(*clock)).ok());
    REQUIRE(remote.issue_tag(id, r1.value().com_s, r1.value().com_r).ok());
    auto r2 = sender.begin_tag_request(sender.new_channel_key().vk, kAddr,
                                       *clock);
    REQUIRE(remote.issue_tag(id, r2.value().com_s, r2.value().com_r).ok());
    auto r3 = sender.begin_tag_request(sender.new_channel_key().vk, kAddr,
                                       *clock);
    auto refused = remote.issue_tag(id, r3.value().com_s, r3.value().com_r);
    CHECK(refused.status() == Status::key_budget);
    CHECK(std::string(to_string(refused.status())) == "key-budget");
  }

  service.stop();
}

TEST_CASE("state log restores the server") {
  namespace fs = std::filesystem;
  const auto path =
      (fs::temp_directory_path() / "sandi_state_test.log").string();
  std::remove(path.c_str());

  auto config = small_config();
  config.persist_path = path;
  const AccountId id{0x21};
  std::vector<std::uint8_t> pk_before;

  {
    AccountabilityServer server(config, rng());
    SenderClient sender(server.public_params(), rng());
    ReceiverClient receiver(server.public_params(), kAddr);
    REQUIRE(server.register_sender(id, 0).ok());
    REQUIRE(server.register_epoch_key(id, sender.begin_epoch(0), 0).ok());
    const auto kp = sender.new_channel_key();
    auto req = sender.begin_tag_request(kp.vk, kAddr, 10);
    auto tag = server.issue_tag(id, req.value().com_s, req.value().com_r, 10,
                                rng());
    REQUIRE(tag.ok());
    auto full = sender.complete_tag(tag.value(), 10);
    REQUIRE(full.ok());
    REQUIRE(server
                .handle_report(full.value().tag, full.value().proof,
                               full.value().blind_token, 20)
                .ok());
    const auto pk = server.public_key().bytes;
    pk_before.assign(pk.begin(), pk.end());
  }

  auto reopened = AccountabilityServer::open(config);
  REQUIRE(reopened.ok());
  auto& server = *reopened.value();
  CHECK(std::equal(pk_before.begin(), pk_before.end(),
                   server.public_key().bytes.begin()));
  CHECK(server.token_count(id, 0).value() == 1);
  CHECK(server.score_of(id, 0).value() == 100.0);
  // The restored server keeps working: reports and rollovers proceed.
  server.set_noise_override([] { return -1; });
  REQUIRE(server.end_of_epoch(0, rng()).ok());
  CHECK(server.score_of(id, 1).ok());
  std::remove(path.c_str());
}

TEST_CASE("oblivious noise backend feeds dummies into the roll") {
  auto config = small_config();
  config.oblivious_noise = true;
  config.score = ScoreParams{5, 100, 0.5};
  AccountabilityServer server(config, rng());
  SenderClient sender(server.public_params(), rng());
  const AccountId id{0x55};
  REQUIRE(server.register_sender(id, 0).ok());
  const auto& epk = sender.begin_epoch(0);
  REQUIRE(server.register_epoch_key(id, epk, 0).ok());

  // One real report.
  const auto kp = sender.new_channel_key();
  auto req = sender.begin_tag_request(kp.vk, kAddr, 10);
  auto tag =
      server.issue_tag(id, req.value().com_s, req.value().com_r, 10, rng());
  REQUIRE(tag.ok());
  auto full = sender.complete_tag(tag.value(), 10);
  REQUIRE(full.ok());
  REQUIRE(server
              .handle_report(full.value().tag, full.value().proof,
                             full.value().blind_token, 20)
              .ok());

  // Joint dummy generation for epoch 0.
  const auto esk = sender.epoch_secret(0).value();
  const auto batch = dummy_as_start(5, 0, rng());
  auto resp = dummy_sender_respond(batch.queries, 0, esk, epk,
                                   server.public_params().group, rng());
  REQUIRE(resp.ok());
  auto dummies = dummy_as_finish(batch, resp.value(), epk,
                                 server.public_params().group);
  REQUIRE(dummies.ok());
  const auto dummy_count = dummies.value().size();
  REQUIRE(server.attach_dummy_tokens(id, 0, std::move(dummies).value()).ok());

  REQUIRE(server.end_of_epoch(0, rng()).ok());
  REQUIRE(server.end_of_epoch(1, rng()).ok());
  auto rolled = server.end_of_epoch(2, rng());
  REQUIRE(rolled.ok());
  CHECK(rolled.value().at(id).noisy_count ==
        static_cast<long long>(1 + dummy_count));

  auto proof = server.proof_of_reports(id, 2);
  REQUIRE(proof.ok());
  CHECK(SenderClient::verify_report_proof(
      proof.value().tokens, proof.value().noisy_count, esk));
}

TEST_CASE("embedded scenario is deterministic and honest") {
  auto spec = parse_scenario(R"({
    "config": {"epoch_dur": 100, "E": 2, "val_period": 100,
               "report_lock": 200, "B_vk": 1, "k": 2, "M": 100, "b": 0.5,
               "mu": -8, "sigma": 1.1, "sc_init": 100},
    "senders": ["alice", "bob"],
    "receivers": ["r1", "r2"],
    "epochs": [
      {"actions": [
        {"op": "issue", "sender": "alice", "receiver": "r1", "at": 10},
        {"op": "issue", "sender": "bob", "receiver": "r2", "at": 12},
        {"op": "report", "receiver": "r1", "sender": "alice", "at": 40},
        {"op": "report_replay", "receiver": "r1", "sender": "alice", "at": 50}
      ]},
      {"actions": [
        {"op": "issue", "sender": "alice", "receiver": "r1", "at": 20,
         "expect": "error:key-budget"}
      ]},
      {"actions": [
        {"op": "issue", "sender": "alice", "receiver": "r1", "at": 15}
      ]}
    ]
  })");
  REQUIRE(spec.ok());

  const auto a = run_scenario(spec.value(), 1234);
  const auto b = run_scenario(spec.value(), 1234);
  const auto c = run_scenario(spec.value(), 99);
  CHECK(a.ok());
  CHECK(a.transcript == b.transcript);
  CHECK(c.ok());
}

TEST_CASE("remote scenario round-trip matches embedded semantics") {
  auto spec = parse_scenario(R"({
    "config": {"epoch_dur": 3, "E": 2, "val_period": 3,
               "report_lock": 6, "B_vk": 1, "k": 2, "M": 100, "b": 0.5,
               "mu": -8, "sigma": 1.1, "sc_init": 100},
    "senders": ["alice"],
    "receivers": ["r1"],
    "epochs": [
      {"actions": [
        {"op": "issue", "sender": "alice", "receiver": "r1", "at": 0},
        {"op": "report", "receiver": "r1", "sender": "alice", "at": 1}
      ]},
      {"actions": []}
    ]
  })");
  REQUIRE(spec.ok());

  AsConfig config = spec.value().config;
  SeededRandom server_rng(5);
  AccountabilityServer server(config, server_rng);
  HttpService service(
      server,
      [] {
        return std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
      },
      server_rng);
  const int port = service.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  RemoteAs remote("127.0.0.1", port);
  const auto result = run_scenario_remote(spec.value(), 9, remote);
  CHECK(result.ok());
  CHECK(result.failed_expectations == 0);
  service.stop();
}
