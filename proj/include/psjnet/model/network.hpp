#ifndef PSJNET_MODEL_NETWORK_HPP_
#define PSJNET_MODEL_NETWORK_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "psjnet/model/layers.hpp"
#include "psjnet/model/params.hpp"
#include "psjnet/model/sequence.hpp"

namespace psjnet {

struct ForwardOptions {
  bool training = false;
  double keep_prob = 1.0;  // inverted dropout; only read when training
  std::uint64_t seed = 0;  // dropout stream
};

enum class LossMode { kJoint, kAOnly, kBOnly };

// Full forward state of one mixed sequence on one tape: both encoders, both
// transfer directions, and a decoder that can be queried at any causal
// cutoff. Every quantity read for cutoff c depends only on events at mixed
// indices < c, dropout masks included.
class SequenceForward {
 public:
  // `seq` holds dense indices. The tape must be bound to params.tensors.
  SequenceForward(Tape& tape, const ModelParams& params, const MixedSequence& seq,
                  const ForwardOptions& opts = {});
  ~SequenceForward();
  SequenceForward(const SequenceForward&) = delete;
  SequenceForward& operator=(const SequenceForward&) = delete;

  const MixedSequence& sequence() const { return seq_; }

  // Encoder state after the `row`-th event of `d`, dropout applied.
  Var encoder_row(Domain d, std::size_t row) const;
  // Last encoder state of `d` before `cutoff`, or zeros.
  Var in_domain_representation(Domain d, std::size_t cutoff);
  // h_(src->target) summarizing the other domain before `cutoff`, or zeros
  // when that domain has no earlier events (or under -PSJ).
  Var cross_representation(Domain target, std::size_t cutoff);

  Var logits(Domain d, std::size_t cutoff);
  Var log_probs(Domain d, std::size_t cutoff);

 private:
  struct Direction;

  Var dropout(Var x, std::uint64_t a, std::uint64_t b, std::uint64_t tag);
  void build_encoder(Domain d);
  void build_direction(Domain src);

  Tape& tape_;
  const ModelParams& params_;
  const MixedSequence& seq_;
  ForwardOptions opts_;
  std::size_t d_;
  Var zero_;
  std::vector<Var> enc_[2];
  std::unique_ptr<Direction> dir_[2];  // indexed by source domain
};

// Teacher-forced NLL: mean over each domain's targets, summed over domains
// in `mode`. A domain without targets contributes nothing; no targets at
// all throws EmptyLossError.
Var sequence_loss(Tape& tape, const ModelParams& params, const MixedSequence& seq,
                  LossMode mode, const ForwardOptions& opts = {});

// Loss and gradients of one sequence.
struct LossAndGrad {
  double loss = 0.0;
  nk::GradMap grads;
};
LossAndGrad sequence_loss_and_grad(const ModelParams& params, const MixedSequence& seq,
                                   LossMode mode, const ForwardOptions& opts = {});
double sequence_loss_value(const ModelParams& params, const MixedSequence& seq,
                           LossMode mode, const ForwardOptions& opts = {});

// Probability distribution over the vocabulary of `d` for the next d-item
// given events before `cutoff` (no dropout).
nk::Tensor next_item_distribution(const ModelParams& params, const MixedSequence& seq,
                                  Domain d, std::size_t cutoff);

// Held-out protocol: distributions for each domain's final item given the
// events strictly before it. Entry is empty when the domain has no events.
struct FinalPredictions {
  std::optional<nk::Tensor> dist[2];
};
FinalPredictions final_item_distributions(const ModelParams& params,
                                          const MixedSequence& seq);

}  // namespace psjnet

#endif  // PSJNET_MODEL_NETWORK_HPP_
