#include "psjnet/model/network.hpp"

#include <map>
#include <utility>

#include "psjnet/error.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet {

namespace {

enum DropoutTag : std::uint64_t { kEncoderRow = 1, kDecoderInput = 2 };

GruWeights gru_weights(Tape& tape, const std::string& update, const std::string& reset,
                       const std::string& cand) {
  return {tape.param(update), tape.param(reset), tape.param(cand)};
}

GruWeights transfer_weights(Tape& tape, Domain src, int role) {
  return gru_weights(tape, names::transfer(src, role, "update"),
                     names::transfer(src, role, "reset"), names::transfer(src, role, "cand"));
}

SplitWeights split_weights(Tape& tape, Domain src) {
  SplitWeights w;
  w.roles = tape.param(names::roles(src));
  w.gate_w_src = tape.param(names::gate(src, "w_src"));
  w.gate_w_tgt = tape.param(names::gate(src, "w_tgt"));
  w.gate_u = tape.param(names::gate(src, "u"));
  w.gate_v = tape.param(names::gate(src, "v"));
  w.gate_b = tape.param(names::gate(src, "b"));
  w.cand_w = tape.param(names::cand(src, "w"));
  w.cand_u = tape.param(names::cand(src, "u"));
  w.cand_v = tape.param(names::cand(src, "v"));
  w.cand_b = tape.param(names::cand(src, "b"));
  return w;
}

JoinWeights join_weights(Tape& tape, Domain src, int stage) {
  return {tape.param(names::join(src, stage, "v")), tape.param(names::join(src, stage, "w_row")),
          tape.param(names::join(src, stage, "w_in"))};
}

}  // namespace

struct SequenceForward::Direction {
  // Variant I: transfer state after each source row.
  std::vector<Var> states;
  // Variant II: role_states[k][i], transfer state of role k after row i.
  std::vector<std::vector<Var>> role_states;
  std::optional<JoinUnit> join;
  std::optional<JoinUnit> fallback;  // single zero in-domain row
  JoinWeights stage1, stage2;
  std::map<std::pair<std::size_t, std::size_t>, Var> cache;
};

SequenceForward::SequenceForward(Tape& tape, const ModelParams& params,
                                 const MixedSequence& seq, const ForwardOptions& opts)
    : tape_(tape), params_(params), seq_(seq), opts_(opts), d_(params.config.hidden) {
  params.config.validate();
  check_indices(seq, params.config.vocab_a, params.config.vocab_b);
  if (opts.training && !(opts.keep_prob > 0.0 && opts.keep_prob <= 1.0)) {
    throw ConfigError("keep probability must lie in (0, 1]");
  }
  zero_ = tape.zeros({d_});
  for (Domain d : kDomains) build_encoder(d);
  if (params.config.has_cross()) {
    for (Domain src : kDomains) build_direction(src);
  }
}

SequenceForward::~SequenceForward() = default;

Var SequenceForward::dropout(Var x, std::uint64_t a, std::uint64_t b, std::uint64_t tag) {
  if (!opts_.training || opts_.keep_prob == 1.0) return x;
  const std::uint64_t s = nk::mix_seed(opts_.seed, {a, b, tag});
  return tape_.mul(x, tape_.constant(nk::dropout_mask(tape_.value(x).shape(), opts_.keep_prob, s)));
}

void SequenceForward::build_encoder(Domain d) {
  const std::size_t n = seq_.count(d);
  auto& rows = enc_[index_of(d)];
  rows.reserve(n);
  if (n == 0) return;
  const Var emb = tape_.param(names::embedding(d));
  const GruWeights w = gru_weights(tape_, names::encoder(d, "update"),
                                   names::encoder(d, "reset"), names::encoder(d, "cand"));
  Var h = zero_;
  for (std::size_t i = 0; i < n; ++i) {
    h = gru_step(tape_, w, tape_.row(emb, seq_.item(d, i)), h);
    rows.push_back(dropout(h, index_of(d), i, kEncoderRow));
  }
}

Var SequenceForward::encoder_row(Domain d, std::size_t row) const {
  return enc_[index_of(d)].at(row);
}

void SequenceForward::build_direction(Domain src) {
  const ModelConfig& c = params_.config;
  const Domain tgt = other(src);
  auto dir = std::make_unique<Direction>();
  const std::size_t n = seq_.count(src);
  const auto align = seq_.cross_alignment(src);
  const auto& src_rows = enc_[index_of(src)];
  const auto& tgt_rows = enc_[index_of(tgt)];
  auto tgt_state = [&](std::size_t i) {
    return align[i] < 0 ? zero_ : tgt_rows[static_cast<std::size_t>(align[i])];
  };

  if (n > 0 && c.variant == Variant::kSplitByJoin) {
    const GruWeights xfer = transfer_weights(tape_, src, -1);
    Var state = zero_;
    if (c.ablation == Ablation::kNoSplitByJoin) {
      for (std::size_t i = 0; i < n; ++i) {
        state = gru_step(tape_, xfer, src_rows[i], state);
        dir->states.push_back(state);
      }
    } else {
      const SplitUnit unit(tape_, split_weights(tape_, src), c.roles);
      Var prev = zero_;
      for (std::size_t i = 0; i < n; ++i) {
        prev = psj1_step(tape_, unit, src_rows[i], tgt_state(i), prev).output;
        state = gru_step(tape_, xfer, prev, state);
        dir->states.push_back(state);
      }
    }
  } else if (n > 0) {
    const std::size_t k_roles = c.roles;
    std::vector<GruWeights> xfer;
    for (std::size_t k = 0; k < k_roles; ++k) {
      xfer.push_back(transfer_weights(tape_, src, c.share_role_transfer ? -1 : static_cast<int>(k)));
    }
    std::optional<SplitUnit> unit;
    std::optional<NoneGateWeights> none;
    if (c.ablation != Ablation::kNoSplit) {
      unit.emplace(tape_, split_weights(tape_, src), k_roles);
      if (!c.none_gate_shares_weights) {
        none = NoneGateWeights{tape_.param(names::none_gate(src, "w_src")),
                               tape_.param(names::none_gate(src, "w_tgt")),
                               tape_.param(names::none_gate(src, "u")),
                               tape_.param(names::none_gate(src, "b"))};
      }
    }
    std::vector<Var> prev(k_roles, zero_);
    std::vector<Var> state(k_roles, zero_);
    dir->role_states.assign(k_roles, {});
    for (std::size_t i = 0; i < n; ++i) {
      if (unit) {
        prev = psj2_split_step(tape_, *unit, none ? &*none : nullptr, src_rows[i], tgt_state(i),
                               prev)
                   .role_outputs;
      }
      for (std::size_t k = 0; k < k_roles; ++k) {
        state[k] = gru_step(tape_, xfer[k], unit ? prev[k] : src_rows[i], state[k]);
        dir->role_states[k].push_back(state[k]);
      }
    }
    if (c.ablation != Ablation::kNoJoin) {
      dir->stage1 = join_weights(tape_, src, 1);
      dir->stage2 = join_weights(tape_, src, 2);
      if (!tgt_rows.empty()) dir->join.emplace(tape_, dir->stage1, dir->stage2, dir->role_states, tgt_rows);
    }
  }
  dir_[index_of(src)] = std::move(dir);
}

Var SequenceForward::in_domain_representation(Domain d, std::size_t cutoff) {
  const std::size_t m = seq_.rows_before(d, cutoff);
  return m == 0 ? zero_ : enc_[index_of(d)][m - 1];
}

Var SequenceForward::cross_representation(Domain target, std::size_t cutoff) {
  const ModelConfig& c = params_.config;
  if (!c.has_cross()) return zero_;
  const Domain src = other(target);
  const std::size_t n = seq_.rows_before(src, cutoff);
  if (n == 0) return zero_;
  Direction& dir = *dir_[index_of(src)];
  if (c.variant == Variant::kSplitByJoin) return dir.states[n - 1];
  if (c.ablation == Ablation::kNoJoin) {
    std::vector<Var> last;
    for (const auto& rows : dir.role_states) last.push_back(rows[n - 1]);
    return tape_.add_n(last);
  }
  const std::size_t m = seq_.rows_before(target, cutoff);
  const auto key = std::make_pair(n, m);
  if (auto it = dir.cache.find(key); it != dir.cache.end()) return it->second;
  Var out;
  if (m > 0) {
    out = dir.join->join(tape_, n, m);
  } else {
    if (!dir.fallback) dir.fallback.emplace(tape_, dir.stage1, dir.stage2, dir.role_states, std::vector<Var>{zero_});
    out = dir.fallback->join(tape_, n, 1);
  }
  dir.cache.emplace(key, out);
  return out;
}

Var SequenceForward::logits(Domain d, std::size_t cutoff) {
  const Var w = tape_.param(names::decoder_weight(d));
  const Var b = tape_.param(names::decoder_bias(d));
  Var x = tape_.concat({in_domain_representation(d, cutoff), cross_representation(d, cutoff)});
  x = dropout(x, index_of(d), cutoff, kDecoderInput);
  return tape_.add(tape_.matmul(w, x), b);
}

Var SequenceForward::log_probs(Domain d, std::size_t cutoff) {
  return tape_.log_softmax(logits(d, cutoff));
}

Var sequence_loss(Tape& tape, const ModelParams& params, const MixedSequence& seq,
                  LossMode mode, const ForwardOptions& opts) {
  SequenceForward fwd(tape, params, seq, opts);
  std::vector<Var> parts;
  for (Domain d : kDomains) {
    if (mode == LossMode::kAOnly && d != Domain::kA) continue;
    if (mode == LossMode::kBOnly && d != Domain::kB) continue;
    const std::vector<Target> targets = seq.targets(d);
    if (targets.empty()) continue;
    std::vector<Var> picks;
    picks.reserve(targets.size());
    for (const Target& t : targets) {
      picks.push_back(tape.pick(fwd.log_probs(d, t.cutoff), t.item));
    }
    parts.push_back(tape.scale(tape.add_n(picks), -1.0 / static_cast<double>(picks.size())));
  }
  if (parts.empty()) throw EmptyLossError("sequence has no targets for the requested loss");
  return parts.size() == 1 ? parts.front() : tape.add_n(parts);
}

LossAndGrad sequence_loss_and_grad(const ModelParams& params, const MixedSequence& seq,
                                   LossMode mode, const ForwardOptions& opts) {
  Tape tape(&params.tensors);
  const Var loss = sequence_loss(tape, params, seq, mode, opts);
  LossAndGrad out;
  out.loss = tape.value(loss).item();
  out.grads = tape.backward(loss);
  return out;
}

double sequence_loss_value(const ModelParams& params, const MixedSequence& seq,
                           LossMode mode, const ForwardOptions& opts) {
  Tape tape(&params.tensors);
  return tape.value(sequence_loss(tape, params, seq, mode, opts)).item();
}

nk::Tensor next_item_distribution(const ModelParams& params, const MixedSequence& seq,
                                  Domain d, std::size_t cutoff) {
  Tape tape(&params.tensors);
  SequenceForward fwd(tape, params, seq);
  return tape.value(tape.softmax(fwd.logits(d, cutoff)));
}

FinalPredictions final_item_distributions(const ModelParams& params,
                                          const MixedSequence& seq) {
  Tape tape(&params.tensors);
  SequenceForward fwd(tape, params, seq);
  FinalPredictions out;
  for (Domain d : kDomains) {
    if (auto pos = seq.final_position(d)) {
      out.dist[index_of(d)] = tape.value(tape.softmax(fwd.logits(d, *pos)));
    }
  }
  return out;
}

}  // namespace psjnet
