#ifndef PSJNET_EVAL_EVALUATE_HPP_
#define PSJNET_EVAL_EVALUATE_HPP_

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psjnet/eval/report.hpp"
#include "psjnet/model/checkpoint.hpp"
#include "psjnet/model/sequence.hpp"
#include "psjnet/numkernel/tensor.hpp"

namespace psjnet {

// Scores each requested domain's item at the given cutoff of an encoded
// sequence. Only entries whose cutoff is set need to be filled.
using Scorer = std::function<std::array<std::optional<nk::Tensor>, 2>(
    const MixedSequence& encoded, const std::array<std::optional<std::size_t>, 2>& cutoffs)>;

Scorer model_scorer(const ModelParams& params);

// Final-item protocol on encoded sequences: each domain's last event is the
// ground truth, scored from the events strictly before it.
EvalReport evaluate_encoded(const Scorer& scorer, std::span<const MixedSequence> encoded,
                            const std::vector<std::size_t>& cutoffs, std::size_t threads);

// Same protocol on raw-id sequences. A case whose truth is outside the
// vocabulary is skipped and counted; unseen context events are dropped and
// counted.
EvalReport evaluate_raw(const Scorer& scorer, const Vocabulary& vocab_a,
                        const Vocabulary& vocab_b, std::span<const MixedSequence> raw,
                        const std::vector<std::size_t>& cutoffs, std::size_t threads);

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, std::span<const MixedSequence> raw,
                               const std::vector<std::size_t>& cutoffs, std::size_t threads);

// Training-set item frequencies per domain, used as static scores.
struct PopBaseline {
  nk::Tensor counts[2] = {nk::Tensor({1}), nk::Tensor({1})};
  const nk::Tensor& at(Domain d) const { return counts[index_of(d)]; }
};

// `encoded_train` holds dense indices below the given vocabulary sizes.
PopBaseline pop_baseline(std::span<const MixedSequence> encoded_train, std::size_t vocab_a,
                         std::size_t vocab_b);
Scorer pop_scorer(const PopBaseline& pop);

// Top-k (index, score) pairs under the metric's ordering.
std::vector<std::pair<std::size_t, double>> top_k(std::span<const double> scores, std::size_t k);

}  // namespace psjnet

#endif  // PSJNET_EVAL_EVALUATE_HPP_
