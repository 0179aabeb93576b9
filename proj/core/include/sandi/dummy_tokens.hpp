#pragma once

#include <span>
#include <vector>

#include "sandi/types.hpp"

namespace sandi {

/// Two-party oblivious dummy-token generation. The AS prepares B blinded
/// queries, each hiding a random bit; the sender answers with its own random
/// bits and esk-multiples plus a batched DLEQ proof; indices where the bits
/// match unblind to valid sender-tokens. The dummy count is Binomial(B, 1/2)
/// and neither party controls it alone.

/// Per-index generator G_i, derived from the epoch and index so neither
/// party can choose it.
GroupElement dummy_generator(EpochIndex epoch, std::size_t index);

struct DummyQuery {
  GroupElement q;
};

struct DummyBatchSecrets {
  struct Item {
    std::array<std::uint8_t, kNonceBytes> nonce{};
    Scalar blinding;
    std::uint8_t bit = 0;
  };
  EpochIndex epoch = 0;
  std::vector<Item> items;
};

struct DummyBatch {
  std::vector<DummyQuery> queries;
  DummyBatchSecrets secrets;
};

/// AS side, first move: Q_i = r_i * Hash(n_i) - b_i * G_i.
DummyBatch dummy_as_start(std::size_t batch_size, EpochIndex epoch,
                          RandomSource& rng);

struct DummyResponse {
  std::vector<std::uint8_t> bits;      // b'_i
  std::vector<GroupElement> blinded;   // R_i = esk * (Q_i + b'_i * G_i)
  DleqProof proof;                     // batched, against epk
};

/// Sender side: fresh uniform bits, R_i = esk * y_i, batched proof.
Result<DummyResponse> dummy_sender_respond(std::span<const DummyQuery> queries,
                                           EpochIndex epoch, const Scalar& esk,
                                           const GroupElement& epk,
                                           const GroupParams& params,
                                           RandomSource& rng);

/// AS side, final move: verifies the batched proof and unblinds the indices
/// with matching bits into dummy sender-tokens. Aborts (error) on proof
/// failure.
Result<std::vector<SenderToken>> dummy_as_finish(const DummyBatch& batch,
                                                 const DummyResponse& response,
                                                 const GroupElement& epk,
                                                 const GroupParams& params);

/// Batch size matching a Gaussian of the given standard deviation:
/// B = 4 * sigma^2, rounded up.
std::size_t batch_size_for_sigma(double noise_std);

}  // namespace sandi
