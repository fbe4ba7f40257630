#include "psjnet/model/layers.hpp"

#include "psjnet/error.hpp"

namespace psjnet {

Var gru_step(Tape& tape, const GruWeights& w, Var x, Var h) {
  const Var xh = tape.concat({x, h});
  const Var z = tape.sigmoid(tape.matmul(w.update, xh));
  const Var r = tape.sigmoid(tape.matmul(w.reset, xh));
  const Var xrh = tape.concat({x, tape.mul(r, h)});
  const Var c = tape.tanh(tape.matmul(w.cand, xrh));
  return tape.add(tape.mul(tape.affine(z, -1.0, 1.0), h), tape.mul(z, c));
}

SplitUnit::SplitUnit(Tape& tape, const SplitWeights& w, std::size_t roles)
    : w_(w) {
  if (roles == 0) throw ConfigError("split unit needs at least one role");
  if (tape.value(w.roles).rows() != roles) {
    throw ShapeError("split unit: role embedding matrix " +
                     nk::shape_string(tape.value(w.roles).shape()) +
                     " does not have " + std::to_string(roles) + " rows");
  }
  for (std::size_t k = 0; k < roles; ++k) {
    const Var emb = tape.row(w.roles, k);
    gate_role_terms_.push_back(tape.matmul(w.gate_v, emb));
    cand_role_terms_.push_back(tape.matmul(w.cand_v, emb));
  }
}

SplitByJoinOutput psj1_step(Tape& tape, const SplitUnit& unit, Var h_src,
                            Var h_tgt, Var prev_output) {
  const SplitWeights& w = unit.weights();
  const std::size_t k_roles = unit.roles();
  if (k_roles == 0) throw ConfigError("psj1_step: K must be at least 1");

  const Var gate_shared = tape.add_n({tape.matmul(w.gate_w_src, h_src),
                                      tape.matmul(w.gate_w_tgt, h_tgt),
                                      tape.matmul(w.gate_u, prev_output), w.gate_b});
  const Var cand_shared = tape.add_n({tape.matmul(w.cand_w, h_src),
                                      tape.matmul(w.cand_u, prev_output), w.cand_b});

  SplitByJoinOutput out;
  for (std::size_t k = 0; k < k_roles; ++k) {
    const Var f = tape.sigmoid(tape.add(gate_shared, unit.gate_role_term(k)));
    const Var c = tape.tanh(tape.add(cand_shared, unit.cand_role_term(k)));
    const Var h = tape.add(tape.mul(f, c),
                           tape.mul(tape.affine(f, -1.0, 1.0), prev_output));
    out.gates.push_back(f);
    out.candidates.push_back(c);
    out.role_states.push_back(h);
  }
  out.output = k_roles == 1
                   ? out.role_states.front()
                   : tape.scale(tape.add_n(out.role_states), 1.0 / static_cast<double>(k_roles));
  return out;
}

SplitOutput psj2_split_step(Tape& tape, const SplitUnit& unit,
                            const NoneGateWeights* none_weights, Var h_src,
                            Var h_tgt, const std::vector<Var>& prev_per_role) {
  const SplitWeights& w = unit.weights();
  const std::size_t k_roles = unit.roles();
  if (prev_per_role.size() != k_roles) {
    throw ShapeError("psj2_split_step: " + std::to_string(prev_per_role.size()) +
                     " previous outputs for " + std::to_string(k_roles) + " roles");
  }

  const Var gate_base = tape.add_n({tape.matmul(w.gate_w_src, h_src),
                                    tape.matmul(w.gate_w_tgt, h_tgt), w.gate_b});
  const Var cand_base = tape.add(tape.matmul(w.cand_w, h_src), w.cand_b);

  SplitOutput out;
  for (std::size_t k = 0; k < k_roles; ++k) {
    const Var prev = prev_per_role[k];
    out.raw_gates.push_back(tape.sigmoid(
        tape.add_n({gate_base, tape.matmul(w.gate_u, prev), unit.gate_role_term(k)})));
    out.candidates.push_back(tape.tanh(
        tape.add_n({cand_base, tape.matmul(w.cand_u, prev), unit.cand_role_term(k)})));
  }

  const Var prev_mean =
      k_roles == 1 ? prev_per_role.front()
                   : tape.scale(tape.add_n(prev_per_role), 1.0 / static_cast<double>(k_roles));
  if (none_weights != nullptr) {
    out.raw_none_gate = tape.sigmoid(tape.add_n({tape.matmul(none_weights->w_src, h_src),
                                                 tape.matmul(none_weights->w_tgt, h_tgt),
                                                 tape.matmul(none_weights->u, prev_mean),
                                                 none_weights->b}));
  } else {
    out.raw_none_gate = tape.sigmoid(tape.add(gate_base, tape.matmul(w.gate_u, prev_mean)));
  }

  std::vector<Var> all = out.raw_gates;
  all.push_back(out.raw_none_gate);
  const Var total = tape.add_n(all);
  for (double v : tape.value(total).data()) {
    if (!(v > 0.0)) {
      throw NormalizationError("psj2_split_step: gate sum is zero at some coordinate");
    }
  }
  out.none_gate = tape.div(out.raw_none_gate, total);
  for (std::size_t k = 0; k < k_roles; ++k) {
    const Var f = tape.div(out.raw_gates[k], total);
    out.gates.push_back(f);
    out.role_outputs.push_back(tape.add(tape.mul(f, out.candidates[k]),
                                        tape.mul(out.none_gate, prev_per_role[k])));
  }
  return out;
}

JoinUnit::JoinUnit(Tape& tape, const JoinWeights& stage1,
                   const JoinWeights& stage2,
                   const std::vector<std::vector<Var>>& role_rows,
                   const std::vector<Var>& in_rows)
    : stage2_(stage2) {
  if (role_rows.empty() || role_rows.front().empty() || in_rows.empty()) {
    throw JoinError("join: empty participating set");
  }
  n_rows_ = role_rows.front().size();
  m_rows_ = in_rows.size();
  const Var row_proj1 = tape.matmul(stage1.v, stage1.w_row);  // W_row1^T v1
  const Var in_proj1 = tape.matmul(stage1.v, stage1.w_in);
  const Var in_proj2 = tape.matmul(stage2.v, stage2.w_in);
  row_proj2_ = tape.matmul(stage2.v, stage2.w_row);
  for (const auto& rows : role_rows) {
    if (rows.size() != n_rows_) throw JoinError("join: roles have different row counts");
    const Var m = tape.stack(rows);
    role_matrix_.push_back(m);
    role_scores_.push_back(tape.matmul(m, row_proj1));
  }
  const Var in_matrix = tape.stack(in_rows);
  in_scores1_ = tape.matmul(in_matrix, in_proj1);
  in_scores2_ = tape.matmul(in_matrix, in_proj2);
}

void JoinUnit::check(std::size_t src_rows, std::size_t in_rows) const {
  if (src_rows == 0 || in_rows == 0) throw JoinError("join: empty participating set");
  if (src_rows > n_rows_ || in_rows > m_rows_) {
    throw JoinError("join: cutoff (" + std::to_string(src_rows) + ", " +
                    std::to_string(in_rows) + ") beyond available rows (" +
                    std::to_string(n_rows_) + ", " + std::to_string(m_rows_) + ")");
  }
}

namespace {

Var prefix(Tape& tape, Var x, std::size_t n, std::size_t full) {
  return n == full ? x : tape.slice(x, 0, n);
}

}  // namespace

Var JoinUnit::role_representation(Tape& tape, std::size_t role,
                                  std::size_t src_rows,
                                  std::size_t in_rows) const {
  check(src_rows, in_rows);
  const Var a = prefix(tape, role_scores_[role], src_rows, n_rows_);
  const Var b = prefix(tape, in_scores1_, in_rows, m_rows_);
  const Var best = tape.max_axis(tape.outer_add(a, b), 1);
  const Var weights = tape.softmax(best);
  return tape.matmul(weights, prefix(tape, role_matrix_[role], src_rows, n_rows_));
}

Var JoinUnit::join(Tape& tape, std::size_t src_rows, std::size_t in_rows) const {
  check(src_rows, in_rows);
  std::vector<Var> role_vectors;
  for (std::size_t k = 0; k < role_matrix_.size(); ++k) {
    role_vectors.push_back(role_representation(tape, k, src_rows, in_rows));
  }
  const Var g = tape.stack(role_vectors);
  const Var a = tape.matmul(g, row_proj2_);
  const Var b = prefix(tape, in_scores2_, in_rows, m_rows_);
  const Var best = tape.max_axis(tape.outer_add(a, b), 1);
  return tape.matmul(tape.softmax(best), g);
}

Var psj2_join(Tape& tape, const JoinWeights& stage1, const JoinWeights& stage2,
              const std::vector<std::vector<Var>>& role_rows,
              const std::vector<Var>& in_rows, std::optional<JoinCutoff> cutoff) {
  if (role_rows.empty() || role_rows.front().empty() || in_rows.empty()) {
    throw JoinError("join: empty participating set");
  }
  JoinUnit unit(tape, stage1, stage2, role_rows, in_rows);
  if (cutoff) return unit.join(tape, cutoff->src_rows, cutoff->in_rows);
  return unit.join(tape, unit.source_rows(), unit.in_domain_rows());
}

Var decode_logits(Tape& tape, const DecoderWeights& w, Var h_in, Var h_cross) {
  return tape.add(tape.matmul(w.w, tape.concat({h_in, h_cross})), w.b);
}

Var decode_scores(Tape& tape, const DecoderWeights& w, Var h_in, Var h_cross) {
  return tape.softmax(decode_logits(tape, w, h_in, h_cross));
}

}  // namespace psjnet
