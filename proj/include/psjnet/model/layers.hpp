#ifndef PSJNET_MODEL_LAYERS_HPP_
#define PSJNET_MODEL_LAYERS_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "psjnet/numkernel/tape.hpp"

namespace psjnet {

using nk::Tape;
using nk::Var;

// Each matrix is d x (in + d) and acts on [x, h] (no bias terms).
struct GruWeights {
  Var update;
  Var reset;
  Var cand;
};

// z = sig(Wz [x, h]); r = sig(Wr [x, h]); c = tanh(Wc [x, r*h]);
// h' = (1 - z) * h + z * c.
Var gru_step(Tape& tape, const GruWeights& w, Var x, Var h);

// Role gate and candidate parameters of one transfer direction. `w_src`
// multiplies the source-domain encoder state, `w_tgt` the target-domain one.
struct SplitWeights {
  Var roles;  // K x d role embeddings
  Var gate_w_src, gate_w_tgt, gate_u, gate_v, gate_b;
  Var cand_w, cand_u, cand_v, cand_b;
};

struct NoneGateWeights {
  Var w_src, w_tgt, u, b;
};

// Split weights bound for one forward pass, with the per-role embedding
// projections V_f emb(r_k) and V_h emb(r_k) computed once.
class SplitUnit {
 public:
  SplitUnit(Tape& tape, const SplitWeights& w, std::size_t roles);

  std::size_t roles() const { return gate_role_terms_.size(); }
  const SplitWeights& weights() const { return w_; }
  Var gate_role_term(std::size_t k) const { return gate_role_terms_[k]; }
  Var cand_role_term(std::size_t k) const { return cand_role_terms_[k]; }

 private:
  SplitWeights w_;
  std::vector<Var> gate_role_terms_;
  std::vector<Var> cand_role_terms_;
};

struct SplitByJoinOutput {
  Var output;                    // mean of role_states
  std::vector<Var> role_states;  // f * c + (1 - f) * prev, per role
  std::vector<Var> gates;
  std::vector<Var> candidates;
};

// Variant I split-by-join step: per-role sigmoid gates blend each role's
// candidate with the shared previous output, then roles are averaged.
// `h_tgt` is the other domain's latest encoder state (zeros if none).
SplitByJoinOutput psj1_step(Tape& tape, const SplitUnit& unit, Var h_src,
                            Var h_tgt, Var prev_output);

struct SplitOutput {
  std::vector<Var> role_outputs;  // f_k * c_k + f_none * prev_k
  std::vector<Var> gates;         // normalized role gates
  Var none_gate;                  // normalized
  std::vector<Var> raw_gates;     // sigmoid outputs before normalization
  Var raw_none_gate;
  std::vector<Var> candidates;
};

// Variant II split step. The K role gates and the "none" gate are sigmoid
// outputs divided by their element-wise sum, so they sum to one. The none
// gate reads the mean of the per-role previous outputs. With
// `none_weights == nullptr` it reuses the role gate weights minus the role
// embedding term.
SplitOutput psj2_split_step(Tape& tape, const SplitUnit& unit,
                            const NoneGateWeights* none_weights, Var h_src,
                            Var h_tgt, const std::vector<Var>& prev_per_role);

struct JoinWeights {
  Var v;      // d
  Var w_row;  // d x d, applied to the rows being joined
  Var w_in;   // d x d, applied to the in-domain rows
};

// Two-stage similarity join. Stage one, per role k:
//   S(i, j) = v . (W_row x_ki + W_in h_j),  s_i = max_j S(i, j),
//   g_k = sum_i softmax(s)_i x_ki.
// Stage two repeats this with independent weights over the K role vectors g_k.
// The score is linear in each argument, so it is evaluated as an outer sum
// of v.W_row x and v.W_in h; per-row terms are shared across prefixes.
class JoinUnit {
 public:
  // role_rows[k][i]: transformed row i of role k. All roles have equal
  // length. in_rows: in-domain encoder states.
  JoinUnit(Tape& tape, const JoinWeights& stage1, const JoinWeights& stage2,
           const std::vector<std::vector<Var>>& role_rows,
           const std::vector<Var>& in_rows);

  std::size_t source_rows() const { return n_rows_; }
  std::size_t in_domain_rows() const { return m_rows_; }

  // Uses the first `src_rows` transformed rows and first `in_rows` in-domain
  // rows. Throws JoinError when either set is empty or out of range.
  Var join(Tape& tape, std::size_t src_rows, std::size_t in_rows) const;
  Var role_representation(Tape& tape, std::size_t role, std::size_t src_rows,
                          std::size_t in_rows) const;

 private:
  void check(std::size_t src_rows, std::size_t in_rows) const;

  JoinWeights stage2_;
  std::size_t n_rows_ = 0;
  std::size_t m_rows_ = 0;
  std::vector<Var> role_matrix_;  // K x (N x d)
  std::vector<Var> role_scores_;  // K x (N)
  Var in_scores1_;                // M
  Var in_scores2_;                // M
  Var row_proj2_;                 // W_row2^T v2
};

struct JoinCutoff {
  std::size_t src_rows;
  std::size_t in_rows;
};

// One-shot join; `cutoff` restricts both row sets to a causal prefix.
Var psj2_join(Tape& tape, const JoinWeights& stage1, const JoinWeights& stage2,
              const std::vector<std::vector<Var>>& role_rows,
              const std::vector<Var>& in_rows,
              std::optional<JoinCutoff> cutoff = std::nullopt);

struct DecoderWeights {
  Var w;  // |V| x 2d
  Var b;  // |V|
};

// W [h_in, h_cross] + b.
Var decode_logits(Tape& tape, const DecoderWeights& w, Var h_in, Var h_cross);
// softmax of decode_logits.
Var decode_scores(Tape& tape, const DecoderWeights& w, Var h_in, Var h_cross);

}  // namespace psjnet

#endif  // PSJNET_MODEL_LAYERS_HPP_
