#include <benchmark/benchmark.h>

#include "sandi/receiver.hpp"
#include "sandi/sender.hpp"
#include "sandi/server.hpp"

namespace {

using namespace sandi;

const std::vector<std::uint8_t> kAddr{'r', '1'};

struct Fixture {
  Fixture()
      : server(make_config(), SystemRandom::instance()),
        sender(server.public_params(), SystemRandom::instance()),
        receiver(server.public_params(), kAddr) {
    (void)server.register_sender(id, 0);
    (void)server.register_epoch_key(id, sender.begin_epoch(0), 0);
  }

  static AsConfig make_config() {
    AsConfig config;
    config.epoch_dur = 1000;
    config.expiry_epochs = 2;
    config.val_period = 1000;
    config.report_lock = 2000;
    config.max_keys = 1 << 20;
    config.score = ScoreParams{2, 100, 0.5};
    config.thresholds = default_thresholds(config.score);
    config.noise = NoiseParams{-8.0, 1.1, 1};
    config.sc_init = 100.0;
    return config;
  }

  FullEndorsementTag issue_one() {
    const auto kp = sender.new_channel_key();
    auto req = sender.begin_tag_request(kp.vk, kAddr, 0);
    auto tag = server.issue_tag(id, req.value().com_s, req.value().com_r, 0,
                                SystemRandom::instance());
    return sender.complete_tag(tag.value(), 0).value();
  }

  AccountId id{1};
  AccountabilityServer server;
  SenderClient sender;
  ReceiverClient receiver;
};

void BM_TagIssueServer(benchmark::State& state) {
  Fixture fx;
  auto req = [&] {
    const auto kp = fx.sender.new_channel_key();
    return fx.sender.begin_tag_request(kp.vk, kAddr, 0).value();
  }();
  for (auto _ : state) {
    auto tag = fx.server.issue_tag(fx.id, req.com_s, req.com_r, 0,
                                   SystemRandom::instance());
    benchmark::DoNotOptimize(tag);
  }
}
BENCHMARK(BM_TagIssueServer);

void BM_TagIssueSender(benchmark::State& state) {
  Fixture fx;
  const auto kp = fx.sender.new_channel_key();
  for (auto _ : state) {
    state.PauseTiming();
    auto req = fx.sender.begin_tag_request(kp.vk, kAddr, 0);
    auto tag = fx.server.issue_tag(fx.id, req.value().com_s,
                                   req.value().com_r, 0,
                                   SystemRandom::instance());
    state.ResumeTiming();
    auto full = fx.sender.complete_tag(tag.value(), 0);
    benchmark::DoNotOptimize(full);
  }
}
BENCHMARK(BM_TagIssueSender);

void BM_TagReceive(benchmark::State& state) {
  Fixture fx;
  const auto full = fx.issue_one();
  for (auto _ : state) {
    auto y = fx.receiver.receive_tag(full, 0);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(BM_TagReceive);

void BM_TagReport(benchmark::State& state) {
  Fixture fx;
  for (auto _ : state) {
    state.PauseTiming();
    const auto full = fx.issue_one();
    state.ResumeTiming();
    auto outcome =
        fx.server.handle_report(full.tag, full.proof, full.blind_token, 0);
    benchmark::DoNotOptimize(outcome);
  }
}
BENCHMARK(BM_TagReport);

void BM_DleqProve(benchmark::State& state) {
  auto& rng = SystemRandom::instance();
  GroupParams params;
  const auto kp = pp_keygen(params, rng);
  const GroupElement p2 = hash_to_group({});
  const auto q2 = p2.mul(kp.esk);
  for (auto _ : state) {
    auto proof = nizk_dleq_prove(params, params.generator, kp.epk, p2, *q2,
                                 kp.esk, rng);
    benchmark::DoNotOptimize(proof);
  }
}
BENCHMARK(BM_DleqProve);

void BM_DleqVerify(benchmark::State& state) {
  auto& rng = SystemRandom::instance();
  GroupParams params;
  const auto kp = pp_keygen(params, rng);
  const GroupElement p2 = hash_to_group({});
  const auto q2 = p2.mul(kp.esk);
  const auto proof = nizk_dleq_prove(params, params.generator, kp.epk, p2,
                                     *q2, kp.esk, rng);
  for (auto _ : state) {
    bool ok = nizk_dleq_verify(params, params.generator, kp.epk, p2, *q2,
                               proof);
    benchmark::DoNotOptimize(ok);
  }
}
BENCHMARK(BM_DleqVerify);

}  // namespace

BENCHMARK_MAIN();
