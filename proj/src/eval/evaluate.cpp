#include "psjnet/eval/evaluate.hpp"

#include <algorithm>

#include "psjnet/error.hpp"
#include "psjnet/eval/metrics.hpp"
#include "psjnet/model/network.hpp"
#include "psjnet/parallel.hpp"

namespace psjnet {

namespace {

using Cutoffs = std::array<std::optional<std::size_t>, 2>;

struct Case {
  MixedSequence seq;
  Cutoffs cutoffs;
};

EvalReport run_cases(const Scorer& scorer, const std::vector<Case>& cases,
                     const std::vector<std::size_t>& cutoffs, std::size_t threads) {
  for (std::size_t k : cutoffs) {
    if (k == 0) throw ConfigError("cutoff k must be at least 1");
  }
  // rank 0 marks "no case here".
  std::vector<std::array<std::size_t, 2>> ranks(cases.size(), {0, 0});
  parallel_for(cases.size(), threads, [&](std::size_t i) {
    const Case& c = cases[i];
    if (!c.cutoffs[0] && !c.cutoffs[1]) return;
    const auto scores = scorer(c.seq, c.cutoffs);
    for (Domain d : kDomains) {
      const std::size_t di = index_of(d);
      if (!c.cutoffs[di]) continue;
      if (!scores[di]) throw Error("scorer returned no scores for a requested domain");
      ranks[i][di] = rank_of(scores[di]->data(), c.seq.events()[*c.cutoffs[di]].item);
    }
  });
  EvalReport report;
  report.cutoffs = cutoffs;
  for (const auto& r : ranks) {
    for (std::size_t di = 0; di < 2; ++di) {
      if (r[di] > 0) report.domain[di].ranks.push_back(r[di]);
    }
  }
  return report;
}

}  // namespace

Scorer model_scorer(const ModelParams& params) {
  return [&params](const MixedSequence& seq, const Cutoffs& cutoffs) {
    Tape tape(&params.tensors);
    SequenceForward fwd(tape, params, seq);
    std::array<std::optional<nk::Tensor>, 2> out;
    for (Domain d : kDomains) {
      if (const auto& c = cutoffs[index_of(d)]) {
        out[index_of(d)] = tape.value(fwd.logits(d, *c));
      }
    }
    return out;
  };
}

EvalReport evaluate_encoded(const Scorer& scorer, std::span<const MixedSequence> encoded,
                            const std::vector<std::size_t>& cutoffs, std::size_t threads) {
  std::vector<Case> cases;
  cases.reserve(encoded.size());
  for (const MixedSequence& s : encoded) {
    Case c{s, {}};
    for (Domain d : kDomains) c.cutoffs[index_of(d)] = s.final_position(d);
    cases.push_back(std::move(c));
  }
  return run_cases(scorer, cases, cutoffs, threads);
}

EvalReport evaluate_raw(const Scorer& scorer, const Vocabulary& vocab_a,
                        const Vocabulary& vocab_b, std::span<const MixedSequence> raw,
                        const std::vector<std::size_t>& cutoffs, std::size_t threads) {
  const Vocabulary* vocabs[2] = {&vocab_a, &vocab_b};
  std::size_t skipped[2] = {0, 0};
  std::size_t dropped[2] = {0, 0};
  std::vector<Case> cases;
  cases.reserve(raw.size());
  for (const MixedSequence& s : raw) {
    bool truth_known[2] = {false, false};
    for (Domain d : kDomains) {
      const std::size_t di = index_of(d);
      const auto last = s.final_position(d);
      if (!last) continue;
      truth_known[di] = vocabs[di]->find(s.events()[*last].item).has_value();
      if (!truth_known[di]) ++skipped[di];
    }
    std::vector<Event> kept;
    kept.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Event& e = s.events()[i];
      const std::size_t di = index_of(e.domain);
      if (auto idx = vocabs[di]->find(e.item)) {
        kept.push_back({e.domain, *idx});
      } else if (!(s.final_position(e.domain) == i)) {
        ++dropped[di];
      }
    }
    Case c{MixedSequence(std::move(kept)), {}};
    for (Domain d : kDomains) {
      if (truth_known[index_of(d)]) c.cutoffs[index_of(d)] = c.seq.final_position(d);
    }
    cases.push_back(std::move(c));
  }
  EvalReport report = run_cases(scorer, cases, cutoffs, threads);
  for (std::size_t di = 0; di < 2; ++di) {
    report.domain[di].skipped_oov_truth = skipped[di];
    report.domain[di].dropped_context = dropped[di];
  }
  return report;
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, std::span<const MixedSequence> raw,
                               const std::vector<std::size_t>& cutoffs, std::size_t threads) {
  return evaluate_raw(model_scorer(ckpt.params), ckpt.vocab_a, ckpt.vocab_b, raw, cutoffs, threads);
}

PopBaseline pop_baseline(std::span<const MixedSequence> encoded_train, std::size_t vocab_a,
                         std::size_t vocab_b) {
  if (encoded_train.empty()) throw ConfigError("POP baseline needs a non-empty training set");
  check_indices(encoded_train.front(), vocab_a, vocab_b);
  PopBaseline pop;
  pop.counts[0] = nk::Tensor({vocab_a});
  pop.counts[1] = nk::Tensor({vocab_b});
  for (const MixedSequence& s : encoded_train) {
    check_indices(s, vocab_a, vocab_b);
    for (const Event& e : s.events()) pop.counts[index_of(e.domain)][e.item] += 1.0;
  }
  return pop;
}

Scorer pop_scorer(const PopBaseline& pop) {
  return [pop](const MixedSequence&, const Cutoffs& cutoffs) {
    std::array<std::optional<nk::Tensor>, 2> out;
    for (std::size_t di = 0; di < 2; ++di) {
      if (cutoffs[di]) out[di] = pop.counts[di];
    }
    return out;
  };
}

std::vector<std::pair<std::size_t, double>> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(idx[i], scores[idx[i]]);
  return out;
}

}  // namespace psjnet
