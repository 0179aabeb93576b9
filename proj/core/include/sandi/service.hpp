#pragma once

#include <functional>
#include <memory>
#include <string>

#include "sandi/server.hpp"

namespace sandi {

/// Uniform handle over an AS, either in-process or across the wire. The
/// scenario driver and tests run the same flows against both.
class AsHandle {
 public:
  virtual ~AsHandle() = default;

  virtual Result<PublicParams> params() = 0;
  virtual VoidResult register_sender(const AccountId& id) = 0;
  virtual VoidResult register_epoch_key(const AccountId& id,
                                        const GroupElement& epk) = 0;
  virtual Result<EndorsementTag> issue_tag(const AccountId& id,
                                           const Commitment& com_s,
                                           const Commitment& com_r) = 0;
  virtual VoidResult submit_report(const wire::Report& report) = 0;
  virtual Result<wire::RollResponse> roll_epoch(EpochIndex epoch) = 0;
  virtual Result<wire::ProofResponse> proof_of_reports(const AccountId& id,
                                                       EpochIndex epoch) = 0;
};

using Clock = std::function<Timestamp()>;

/// Direct wrapper around an AccountabilityServer.
class InProcessAs final : public AsHandle {
 public:
  InProcessAs(AccountabilityServer& server, Clock clock, RandomSource& rng)
      : server_(server), clock_(std::move(clock)), rng_(rng) {}

  Result<PublicParams> params() override;
  VoidResult register_sender(const AccountId& id) override;
  VoidResult register_epoch_key(const AccountId& id,
                                const GroupElement& epk) override;
  Result<EndorsementTag> issue_tag(const AccountId& id, const Commitment& com_s,
                                   const Commitment& com_r) override;
  VoidResult submit_report(const wire::Report& report) override;
  Result<wire::RollResponse> roll_epoch(EpochIndex epoch) override;
  Result<wire::ProofResponse> proof_of_reports(const AccountId& id,
                                               EpochIndex epoch) override;

 private:
  AccountabilityServer& server_;
  Clock clock_;
  RandomSource& rng_;
};

/// HTTP front end. Requests are served concurrently; pass a thread-safe
/// RandomSource (SystemRandom) unless the caller serializes requests itself.
/// Endpoints (binary WireFrame bodies):
///   POST /v1/register, /v1/epoch-key, /v1/tag, /v1/report, /v1/proof
///   POST /v1/admin/epoch-roll
///   GET  /v1/params
/// Errors are an error frame carrying a 1-byte status plus a reason string.
class HttpService {
 public:
  HttpService(AccountabilityServer& server, Clock clock, RandomSource& rng);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds to the given port (0 picks a free one) and serves on a background
  /// thread. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Client for the HTTP front end.
class RemoteAs final : public AsHandle {
 public:
  RemoteAs(std::string host, int port);
  ~RemoteAs();

  Result<PublicParams> params() override;
  VoidResult register_sender(const AccountId& id) override;
  VoidResult register_epoch_key(const AccountId& id,
                                const GroupElement& epk) override;
  Result<EndorsementTag> issue_tag(const AccountId& id, const Commitment& com_s,
                                   const Commitment& com_r) override;
  VoidResult submit_report(const wire::Report& report) override;
  Result<wire::RollResponse> roll_epoch(EpochIndex epoch) override;
  Result<wire::ProofResponse> proof_of_reports(const AccountId& id,
                                               EpochIndex epoch) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sandi
