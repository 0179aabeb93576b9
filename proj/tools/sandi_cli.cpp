#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "sandi/config.hpp"
#include "sandi/receiver.hpp"
#include "sandi/scenario.hpp"
#include "sandi/sender.hpp"
#include "sandi/service.hpp"
#include "sandi/sim/instance.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }

sandi::Timestamp wall_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

int cmd_serve(const std::string& config_path) {
  auto cfg = sandi::load_config_file(config_path);
  if (!cfg) {
    std::cerr << "config error: " << cfg.error().message << "\n";
    return 1;
  }
  auto& rng = sandi::SystemRandom::instance();

  std::unique_ptr<sandi::AccountabilityServer> server;
  if (!cfg.value().as.persist_path.empty() &&
      std::ifstream(cfg.value().as.persist_path).good()) {
    auto reopened = sandi::AccountabilityServer::open(cfg.value().as);
    if (!reopened) {
      std::cerr << "cannot reopen state log: " << reopened.error().message
                << "\n";
      return 1;
    }
    server = std::move(reopened).value();
    std::cout << "state restored from " << cfg.value().as.persist_path << "\n";
  } else {
    server =
        std::make_unique<sandi::AccountabilityServer>(cfg.value().as, rng);
  }

  sandi::HttpService service(*server, wall_now, rng);
  const int port = service.start(cfg.value().bind_host, cfg.value().bind_port);
  if (port < 0) {
    std::cerr << "cannot bind " << cfg.value().bind_host << ":"
              << cfg.value().bind_port << "\n";
    return 1;
  }
  std::cout << "accountability server on " << cfg.value().bind_host << ":"
            << port << " (epoch_dur=" << cfg.value().as.epoch_dur << "s, E="
            << cfg.value().as.expiry_epochs << ")\n";

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    // Keep epochs rolled even when idle.
    (void)server->roll_until(wall_now(), rng);
  }
  service.stop();
  return 0;
}

int cmd_run(const std::string& spec_path, std::uint64_t seed,
            const std::string& remote, const std::string& transcript_path) {
  auto spec = sandi::load_scenario_file(spec_path);
  if (!spec) {
    std::cerr << "run-spec error: " << spec.error().message << "\n";
    return 1;
  }

  sandi::ScenarioResult result;
  if (remote.empty()) {
    result = sandi::run_scenario(spec.value(), seed);
  } else {
    const auto colon = remote.rfind(':');
    if (colon == std::string::npos) {
      std::cerr << "--remote must be host:port\n";
      return 1;
    }
    sandi::RemoteAs handle(remote.substr(0, colon),
                           std::stoi(remote.substr(colon + 1)));
    result = sandi::run_scenario_remote(spec.value(), seed, handle);
  }

  std::cout << result.transcript;
  if (!transcript_path.empty()) {
    std::ofstream out(transcript_path);
    out << result.transcript;
  }
  if (!result.ok()) {
    std::cerr << "scenario failed: " << result.failed_expectations
              << " expectation(s) missed, proofs "
              << (result.all_proofs_accepted ? "accepted" : "rejected")
              << "\n";
    return 1;
  }
  return 0;
}

int cmd_bench(int iterations) {
  using Clock = std::chrono::steady_clock;
  auto& rng = sandi::SystemRandom::instance();

  sandi::AsConfig config;
  config.epoch_dur = 1000;
  config.expiry_epochs = 2;
  config.val_period = 1000;
  config.report_lock = 2000;
  config.max_keys = static_cast<int>(iterations) + 1;
  config.score = sandi::ScoreParams{2, 100, 0.5};
  config.thresholds = sandi::default_thresholds(config.score);
  config.noise = sandi::NoiseParams{-8.0, 1.1, 1};
  config.sc_init = 100.0;

  sandi::AccountabilityServer server(config, rng);
  sandi::SenderClient sender(server.public_params(), rng);
  const std::vector<std::uint8_t> addr{'r', '1'};
  sandi::ReceiverClient receiver(server.public_params(), addr);

  const sandi::AccountId id{1};
  const sandi::Timestamp t0 = 0;
  (void)server.register_sender(id, t0);
  (void)server.register_epoch_key(id, sender.begin_epoch(t0), t0);

  double issue_us = 0, complete_us = 0, receive_us = 0, report_us = 0;
  for (int i = 0; i < iterations; ++i) {
    const auto kp = sender.new_channel_key();
    auto req = sender.begin_tag_request(kp.vk, addr, t0);

    auto a = Clock::now();
    auto tag =
        server.issue_tag(id, req.value().com_s, req.value().com_r, t0, rng);
    auto b = Clock::now();
    auto full = sender.complete_tag(tag.value(), t0);
    auto c = Clock::now();
    auto y = receiver.receive_tag(full.value(), t0);
    auto d = Clock::now();
    auto rep = receiver.report(kp.vk, t0, true);
    auto outcome = server.handle_report(rep.value().tag, rep.value().proof,
                                        rep.value().blind_token, t0);
    auto e = Clock::now();
    if (!y || !outcome) {
      std::cerr << "bench pipeline failure\n";
      return 1;
    }

    auto us = [](auto from, auto to) {
      return std::chrono::duration<double, std::micro>(to - from).count();
    };
    issue_us += us(a, b);
    complete_us += us(b, c);
    receive_us += us(c, d);
    report_us += us(d, e);
  }

  const double n = iterations;
  std::printf("TagIssue   (AS)       %8.1f us/op\n", issue_us / n);
  std::printf("TagIssue   (sender)   %8.1f us/op\n", complete_us / n);
  std::printf("TagReceive (receiver) %8.1f us/op\n", receive_us / n);
  std::printf("TagReport  (AS+recv)  %8.1f us/op\n", report_us / n);
  return 0;
}

int cmd_sim(const std::string& instance_path, const std::string& mode) {
  auto inst = sandi::sim::load_instance_file(instance_path);
  if (!inst) {
    std::cerr << "instance error: " << inst.error().message << "\n";
    return 1;
  }
  const auto& env = inst.value().env;
  const double sc0 = inst.value().sc0;

  try {
    if (mode == "dp") {
      std::printf("dp_value %.12g\n", sandi::sim::optimal_value(env, sc0));
    } else if (mode == "brute") {
      std::printf("brute_value %.12g\n",
                  sandi::sim::brute_force_optimum(env, sc0));
    } else if (mode == "theorems") {
      const double dp = sandi::sim::optimal_value(env, sc0);
      const auto th1 = sandi::sim::check_theorem1(env, sc0);
      std::printf("dp_value      %.12g\n", dp);
      std::printf("brute_value   %.12g\n", th1.reference_value);
      std::printf("dp_vs_brute   %s\n",
                  std::abs(dp - th1.reference_value) <= 1e-9 ? "match"
                                                             : "MISMATCH");
      std::printf("theorem1      %s", th1.holds ? "witness" : "NONE");
      if (th1.holds) {
        std::printf("  profile=(");
        for (std::size_t i = 0; i < th1.witness.targets.size(); ++i) {
          std::printf("%s%lld", i ? "," : "", th1.witness.targets[i]);
        }
        std::printf(")");
      }
      std::printf("\n");
      if (env.satisfies_growth()) {
        const auto th2 = sandi::sim::check_theorem2(env, sc0);
        std::printf("theorem2      %s", th2.holds ? "witness" : "NONE");
        if (th2.holds) {
          std::printf("  profile=(");
          for (std::size_t i = 0; i < th2.witness.targets.size(); ++i) {
            std::printf("%s%lld", i ? "," : "", th2.witness.targets[i]);
          }
          std::printf(")");
        }
        std::printf("\n");
        if (!th1.holds || !th2.holds) return 1;
      } else {
        std::printf("theorem2      skipped (growth assumption violated)\n");
        if (!th1.holds) return 1;
      }
    } else {
      std::cerr << "unknown mode: " << mode << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sandi accountability system"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the accountability server");
  serve->add_option("--config", config_path, "Service config file")
      ->required();

  std::string spec_path, remote, transcript_path;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Execute a scripted scenario");
  run->add_option("--spec", spec_path, "Run-spec JSON file")->required();
  run->add_option("--seed", seed, "Deterministic seed");
  run->add_option("--remote", remote,
                  "host:port of a running server (default: embedded)");
  run->add_option("--transcript", transcript_path, "Write transcript here");

  int iterations = 200;
  auto* bench = app.add_subcommand("bench", "Protocol timing sanity check");
  bench->add_option("--iterations", iterations, "Pipeline repetitions");

  std::string instance_path, mode = "theorems";
  auto* sim = app.add_subcommand("sim", "Sender strategy simulator");
  sim->add_option("--instance", instance_path, "Instance JSON file")
      ->required();
  sim->add_option("--mode", mode, "dp | brute | theorems");

  CLI11_PARSE(app, argc, argv);

  if (serve->parsed()) return cmd_serve(config_path);
  if (run->parsed()) return cmd_run(spec_path, seed, remote, transcript_path);
  if (bench->parsed()) return cmd_bench(iterations);
  if (sim->parsed()) return cmd_sim(instance_path, mode);
  return 1;
}
