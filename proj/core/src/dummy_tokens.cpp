#include "sandi/dummy_tokens.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sandi {

GroupElement dummy_generator(EpochIndex epoch, std::size_t index) {
  static constexpr char kDomain[] = "sandi/dummy/v1";
  std::array<std::uint8_t, sizeof(kDomain) - 1 + 16> input{};
  std::memcpy(input.data(), kDomain, sizeof(kDomain) - 1);
  for (int i = 0; i < 8; ++i) {
    input[sizeof(kDomain) - 1 + static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(static_cast<std::uint64_t>(epoch) >> (8 * i));
    input[sizeof(kDomain) - 1 + 8 + static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(static_cast<std::uint64_t>(index) >> (8 * i));
  }
  return hash_to_group(input);
}

DummyBatch dummy_as_start(std::size_t batch_size, EpochIndex epoch,
                          RandomSource& rng) {
  if (batch_size < 1) {
    throw std::invalid_argument("batch size must be >= 1");
  }
  DummyBatch batch;
  batch.secrets.epoch = epoch;
  batch.queries.reserve(batch_size);
  batch.secrets.items.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    DummyBatchSecrets::Item item;
    rng.fill(item.nonce);
    item.bit = static_cast<std::uint8_t>(rng.next_u64() & 1);

    const PpBlinding blinding = pp_blind(item.nonce, rng);
    item.blinding = blinding.r;
    GroupElement q = blinding.q;
    if (item.bit == 1) {
      q = q.sub(dummy_generator(epoch, i));
    }
    batch.queries.push_back(DummyQuery{q});
    batch.secrets.items.push_back(item);
  }
  return batch;
}

Result<DummyResponse> dummy_sender_respond(std::span<const DummyQuery> queries,
                                           EpochIndex epoch, const Scalar& esk,
                                           const GroupElement& epk,
                                           const GroupParams& params,
                                           RandomSource& rng) {
  if (queries.empty()) {
    return Error{Status::malformed, "empty batch"};
  }
  DummyResponse resp;
  resp.bits.reserve(queries.size());
  resp.blinded.reserve(queries.size());
  std::vector<GroupElement> ys;
  ys.reserve(queries.size());

  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::uint8_t bit = static_cast<std::uint8_t>(rng.next_u64() & 1);
    GroupElement y = queries[i].q;
    if (bit == 1) {
      y = y.add(dummy_generator(epoch, i));
    }
    const auto blinded = y.mul(esk);
    if (!blinded) {
      return Error{Status::malformed, "degenerate query"};
    }
    resp.bits.push_back(bit);
    resp.blinded.push_back(*blinded);
    ys.push_back(y);
  }
  resp.proof =
      nizk_dleq_prove_batched(params, epk, ys, resp.blinded, esk, rng);
  return resp;
}

Result<std::vector<SenderToken>> dummy_as_finish(const DummyBatch& batch,
                                                 const DummyResponse& response,
                                                 const GroupElement& epk,
                                                 const GroupParams& params) {
  const std::size_t n = batch.queries.size();
  if (response.bits.size() != n || response.blinded.size() != n) {
    return Error{Status::malformed, "response size mismatch"};
  }
  std::vector<GroupElement> ys;
  ys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    GroupElement y = batch.queries[i].q;
    if (response.bits[i] == 1) {
      y = y.add(dummy_generator(batch.secrets.epoch, i));
    }
    ys.push_back(y);
  }
  if (!nizk_dleq_verify_batched(params, epk, ys, response.blinded,
                                response.proof)) {
    return Error{Status::bad_proof, "batched proof invalid"};
  }

  std::vector<SenderToken> dummies;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& item = batch.secrets.items[i];
    if (item.bit != response.bits[i]) {
      continue;
    }
    // Matching bits cancel b_i * G_i, so R_i = esk * r_i * Hash(n_i).
    const auto sigma = pp_unblind(response.blinded[i], item.blinding);
    if (!sigma) {
      return Error{Status::internal, "cannot unblind dummy"};
    }
    dummies.push_back(SenderToken{item.nonce, *sigma});
  }
  return dummies;
}

std::size_t batch_size_for_sigma(double noise_std) {
  if (noise_std <= 0.0) {
    throw std::invalid_argument("sigma must be positive");
  }
  return static_cast<std::size_t>(std::ceil(4.0 * noise_std * noise_std));
}

}  // namespace sandi
