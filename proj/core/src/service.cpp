#include "sandi/service.hpp"

#include <thread>

#include "httplib.h"

namespace sandi {

namespace {

template <typename T>
Result<T> map_error(Error err) {
  return Result<T>(std::move(err));
}

}  // namespace

Result<PublicParams> InProcessAs::params() {
  return server_.public_params();
}

VoidResult InProcessAs::register_sender(const AccountId& id) {
  const Timestamp now = clock_();
  if (auto r = server_.roll_until(now, rng_); !r) return r.error();
  return server_.register_sender(id, now);
}

VoidResult InProcessAs::register_epoch_key(const AccountId& id,
                                           const GroupElement& epk) {
  const Timestamp now = clock_();
  if (auto r = server_.roll_until(now, rng_); !r) return r.error();
  return server_.register_epoch_key(id, epk, now);
}

Result<EndorsementTag> InProcessAs::issue_tag(const AccountId& id,
                                              const Commitment& com_s,
                                              const Commitment& com_r) {
  const Timestamp now = clock_();
  if (auto r = server_.roll_until(now, rng_); !r) return r.error();
  return server_.issue_tag(id, com_s, com_r, now, rng_);
}

VoidResult InProcessAs::submit_report(const wire::Report& report) {
  const Timestamp now = clock_();
  if (auto r = server_.roll_until(now, rng_); !r) return r.error();
  auto outcome =
      server_.handle_report(report.tag, report.proof, report.blind_token, now);
  if (!outcome) return outcome.error();
  return Unit{};  // duplicates are indistinguishable from accepts
}

Result<wire::RollResponse> InProcessAs::roll_epoch(EpochIndex epoch) {
  auto result = server_.end_of_epoch(epoch, rng_);
  if (!result) {
    // Idempotent for epochs that were already rolled (e.g. by the lazy
    // rollover a concurrent request triggered).
    auto stored = server_.epoch_results(epoch);
    if (!stored) return result.error();
    result = std::move(stored);
  }
  wire::RollResponse resp;
  resp.epoch = epoch;
  for (const auto& [id, entry] : result.value()) {
    resp.entries.push_back(
        wire::RollEntry{id, entry.new_score, entry.noisy_count});
  }
  return resp;
}

Result<wire::ProofResponse> InProcessAs::proof_of_reports(const AccountId& id,
                                                          EpochIndex epoch) {
  auto proof = server_.proof_of_reports(id, epoch);
  if (!proof) return proof.error();
  return wire::ProofResponse{proof.value().noisy_count,
                             std::move(proof.value().tokens)};
}

// ---------------------------------------------------------------------------

struct HttpService::Impl {
  Impl(AccountabilityServer& server, Clock clock, RandomSource& rng)
      : as(server, std::move(clock), rng) {}

  InProcessAs as;
  httplib::Server http;
  std::thread worker;

  static void reply(httplib::Response& res, wire::MsgType type,
                    std::span<const std::uint8_t> body) {
    const auto frame = wire::encode_frame(type, body);
    res.set_content(std::string(frame.begin(), frame.end()),
                    "application/octet-stream");
  }

  static void reply_error(httplib::Response& res, const Error& err) {
    reply(res, wire::MsgType::error,
          wire::encode_error(wire::ErrorBody{err.status, err.message}));
    res.status = 400;
  }

  static void reply_ok(httplib::Response& res) {
    const std::uint8_t ok = 0;
    reply(res, wire::MsgType::ok, {&ok, 1});
  }

  /// Decodes the request frame, checking the expected message type.
  static std::optional<std::vector<std::uint8_t>> body_of(
      const httplib::Request& req, wire::MsgType expect,
      httplib::Response& res) {
    const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
    auto frame = wire::decode_frame({data, req.body.size()});
    if (!frame || frame->type != expect) {
      reply_error(res, Error{Status::malformed, "bad request frame"});
      return std::nullopt;
    }
    return std::move(frame->body);
  }

  void routes() {
    http.Post("/v1/register", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      auto body = body_of(req, wire::MsgType::register_req, res);
      if (!body) return;
      auto parsed = wire::decode_register_req(*body);
      if (!parsed) {
        reply_error(res, Error{Status::malformed, "bad register body"});
        return;
      }
      if (auto r = as.register_sender(parsed->id); !r) {
        reply_error(res, r.error());
        return;
      }
      reply_ok(res);
    });

    http.Post("/v1/epoch-key", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      auto body = body_of(req, wire::MsgType::epoch_key_req, res);
      if (!body) return;
      auto parsed = wire::decode_epoch_key_req(*body);
      if (!parsed) {
        reply_error(res, Error{Status::malformed, "bad epoch key body"});
        return;
      }
      if (auto r = as.register_epoch_key(parsed->id, parsed->epk); !r) {
        reply_error(res, r.error());
        return;
      }
      reply_ok(res);
    });

    http.Post("/v1/tag", [this](const httplib::Request& req,
                                httplib::Response& res) {
      auto body = body_of(req, wire::MsgType::tag_req, res);
      if (!body) return;
      auto parsed = wire::decode_tag_req(*body);
      if (!parsed) {
        reply_error(res, Error{Status::malformed, "bad tag request"});
        return;
      }
      auto tag = as.issue_tag(parsed->id, parsed->com_s, parsed->com_r);
      if (!tag) {
        reply_error(res, tag.error());
        return;
      }
      reply(res, wire::MsgType::tag, wire::encode_tag(tag.value()));
    });

    http.Post("/v1/report", [this](const httplib::Request& req,
                                   httplib::Response& res) {
      auto body = body_of(req, wire::MsgType::report, res);
      if (!body) return;
      auto parsed = wire::decode_report(*body);
      if (!parsed) {
        reply_error(res, Error{Status::malformed, "bad report body"});
        return;
      }
      if (auto r = as.submit_report(*parsed); !r) {
        reply_error(res, r.error());
        return;
      }
      reply_ok(res);
    });

    http.Post("/v1/proof", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      auto body = body_of(req, wire::MsgType::proof_req, res);
      if (!body) return;
      auto parsed = wire::decode_proof_req(*body);
      if (!parsed) {
        reply_error(res, Error{Status::malformed, "bad proof request"});
        return;
      }
      auto proof = as.proof_of_reports(parsed->id, parsed->epoch);
      if (!proof) {
        reply_error(res, proof.error());
        return;
      }
      reply(res, wire::MsgType::proof_resp,
            wire::encode_proof_resp(proof.value()));
    });

    http.Post("/v1/admin/epoch-roll", [this](const httplib::Request& req,
                                             httplib::Response& res) {
      auto body = body_of(req, wire::MsgType::roll_req, res);
      if (!body) return;
      auto parsed = wire::decode_roll_req(*body);
      if (!parsed) {
        reply_error(res, Error{Status::malformed, "bad roll request"});
        return;
      }
      auto rolled = as.roll_epoch(parsed->epoch);
      if (!rolled) {
        reply_error(res, rolled.error());
        return;
      }
      reply(res, wire::MsgType::roll_resp,
            wire::encode_roll_resp(rolled.value()));
    });

    http.Get("/v1/params",
             [this](const httplib::Request&, httplib::Response& res) {
               auto p = as.params();
               if (!p) {
                 reply_error(res, p.error());
                 return;
               }
               reply(res, wire::MsgType::params,
                     wire::encode_params(p.value()));
             });
  }
};

HttpService::HttpService(AccountabilityServer& server, Clock clock,
                         RandomSource& rng)
    : impl_(std::make_unique<Impl>(server, std::move(clock), rng)) {
  impl_->routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (!impl_->http.bind_to_port(host, port)) {
    return -1;
  }
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void HttpService::stop() {
  if (impl_ && impl_->worker.joinable()) {
    impl_->http.stop();
    impl_->worker.join();
  }
}

// ---------------------------------------------------------------------------

struct RemoteAs::Impl {
  Impl(std::string host, int port) : client(host, port) {
    client.set_read_timeout(30, 0);
  }

  httplib::Client client;

  template <typename T>
  Result<T> post(const char* path, wire::MsgType req_type,
                 std::span<const std::uint8_t> body, wire::MsgType resp_type,
                 std::function<std::optional<T>(std::span<const std::uint8_t>)>
                     parse) {
    const auto frame = wire::encode_frame(req_type, body);
    auto res = client.Post(path, std::string(frame.begin(), frame.end()),
                           "application/octet-stream");
    if (!res) {
      return Error{Status::internal, "transport failure"};
    }
    const auto* data = reinterpret_cast<const std::uint8_t*>(res->body.data());
    auto reply = wire::decode_frame({data, res->body.size()});
    if (!reply) {
      return Error{Status::malformed, "bad response frame"};
    }
    if (reply->type == wire::MsgType::error) {
      auto err = wire::decode_error(reply->body);
      if (!err) return Error{Status::malformed, "bad error frame"};
      return Error{err->status, err->reason};
    }
    if (reply->type != resp_type) {
      return Error{Status::malformed, "unexpected response type"};
    }
    auto value = parse(reply->body);
    if (!value) {
      return Error{Status::malformed, "bad response body"};
    }
    return std::move(*value);
  }
};

RemoteAs::RemoteAs(std::string host, int port)
    : impl_(std::make_unique<Impl>(std::move(host), port)) {}

RemoteAs::~RemoteAs() = default;

Result<PublicParams> RemoteAs::params() {
  auto res = impl_->client.Get("/v1/params");
  if (!res) {
    return Error{Status::internal, "transport failure"};
  }
  const auto* data = reinterpret_cast<const std::uint8_t*>(res->body.data());
  auto reply = wire::decode_frame({data, res->body.size()});
  if (!reply || reply->type != wire::MsgType::params) {
    return Error{Status::malformed, "bad params response"};
  }
  auto p = wire::decode_params(reply->body);
  if (!p) {
    return Error{Status::malformed, "bad params body"};
  }
  return *p;
}

VoidResult RemoteAs::register_sender(const AccountId& id) {
  auto r = impl_->post<std::uint8_t>(
      "/v1/register", wire::MsgType::register_req,
      wire::encode_register_req(wire::RegisterRequest{id}), wire::MsgType::ok,
      [](std::span<const std::uint8_t> b) -> std::optional<std::uint8_t> {
        if (b.size() != 1) return std::nullopt;
        return b[0];
      });
  if (!r) return r.error();
  return Unit{};
}

VoidResult RemoteAs::register_epoch_key(const AccountId& id,
                                        const GroupElement& epk) {
  auto r = impl_->post<std::uint8_t>(
      "/v1/epoch-key", wire::MsgType::epoch_key_req,
      wire::encode_epoch_key_req(wire::EpochKeyRequest{id, epk}),
      wire::MsgType::ok,
      [](std::span<const std::uint8_t> b) -> std::optional<std::uint8_t> {
        if (b.size() != 1) return std::nullopt;
        return b[0];
      });
  if (!r) return r.error();
  return Unit{};
}

Result<EndorsementTag> RemoteAs::issue_tag(const AccountId& id,
                                           const Commitment& com_s,
                                           const Commitment& com_r) {
  return impl_->post<EndorsementTag>(
      "/v1/tag", wire::MsgType::tag_req,
      wire::encode_tag_req(wire::TagRequest{id, com_s, com_r}),
      wire::MsgType::tag, [](std::span<const std::uint8_t> b) {
        return wire::decode_tag(b);
      });
}

VoidResult RemoteAs::submit_report(const wire::Report& report) {
  auto r = impl_->post<std::uint8_t>(
      "/v1/report", wire::MsgType::report, wire::encode_report(report),
      wire::MsgType::ok,
      [](std::span<const std::uint8_t> b) -> std::optional<std::uint8_t> {
        if (b.size() != 1) return std::nullopt;
        return b[0];
      });
  if (!r) return r.error();
  return Unit{};
}

Result<wire::RollResponse> RemoteAs::roll_epoch(EpochIndex epoch) {
  return impl_->post<wire::RollResponse>(
      "/v1/admin/epoch-roll", wire::MsgType::roll_req,
      wire::encode_roll_req(wire::RollRequest{epoch}), wire::MsgType::roll_resp,
      [](std::span<const std::uint8_t> b) {
        return wire::decode_roll_resp(b);
      });
}

Result<wire::ProofResponse> RemoteAs::proof_of_reports(const AccountId& id,
                                                       EpochIndex epoch) {
  return impl_->post<wire::ProofResponse>(
      "/v1/proof", wire::MsgType::proof_req,
      wire::encode_proof_req(wire::ProofRequest{id, epoch}),
      wire::MsgType::proof_resp, [](std::span<const std::uint8_t> b) {
        return wire::decode_proof_resp(b);
      });
}

}  // namespace sandi
