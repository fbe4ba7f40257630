#include <cmath>
#include <numeric>

#include "doctest.h"
#include "psjnet/error.hpp"
#include "psjnet/model/checkpoint.hpp"
#include "psjnet/model/layers.hpp"
#include "psjnet/model/network.hpp"
#include "psjnet/numkernel/grad_check.hpp"
#include "support.hpp"

using namespace psjnet;
using nk::Rng;
using nk::Tensor;
using Vec = std::vector<double>;

namespace {

// Scalar-loop reference arithmetic, independent of the tape kernels.
Vec matvec(const Tensor& w, const Vec& x) {
  REQUIRE(w.cols() == x.size());
  Vec out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) out[r] += w.at(r, c) * x[c];
  }
  return out;
}
Vec cat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}
Vec plus(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}
double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double dotv(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
Vec row_of(const Tensor& m, std::size_t r) {
  return Vec(m.data().begin() + r * m.cols(), m.data().begin() + (r + 1) * m.cols());
}
Vec tensor_vec(const Tensor& t) { return Vec(t.data().begin(), t.data().end()); }
Vec softmax_ref(const Vec& x) {
  const double mx = *std::max_element(x.begin(), x.end());
  Vec out(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - mx));
  for (double& v : out) v /= z;
  return out;
}

Vec gru_ref(const Tensor& wz, const Tensor& wr, const Tensor& wc, const Vec& x, const Vec& h) {
  const Vec xh = cat(x, h);
  const Vec zp = matvec(wz, xh), rp = matvec(wr, xh);
  Vec rh(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) rh[i] = sig(rp[i]) * h[i];
  const Vec cp = matvec(wc, cat(x, rh));
  Vec out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double z = sig(zp[i]);
    out[i] = (1.0 - z) * h[i] + z * std::tanh(cp[i]);
  }
  return out;
}

Vec gru_ref(const ModelParams& p, const std::string& prefix, const Vec& x, const Vec& h) {
  return gru_ref(p.tensors.at(prefix + ".update"), p.tensors.at(prefix + ".reset"),
                 p.tensors.at(prefix + ".cand"), x, h);
}

void check_close(const Vec& a, const Tensor& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

Tensor random_tensor(Rng& rng, nk::Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = scale * (2.0 * rng.uniform() - 1.0);
  return t;
}

MixedSequence seq_of(std::initializer_list<std::pair<char, ItemId>> evs) {
  std::vector<Event> out;
  for (auto [d, i] : evs) out.push_back({d == 'A' ? Domain::kA : Domain::kB, i});
  return MixedSequence(std::move(out));
}

// Relabels A <-> B in parameter names ("A.", "B.", "AB.", "BA." prefixes).
std::string swap_name(const std::string& n) {
  if (n.rfind("AB.", 0) == 0) return "BA." + n.substr(3);
  if (n.rfind("BA.", 0) == 0) return "AB." + n.substr(3);
  if (n.rfind("A.", 0) == 0) return "B." + n.substr(2);
  if (n.rfind("B.", 0) == 0) return "A." + n.substr(2);
  return n;
}

}  // namespace

TEST_CASE("mixed sequence bookkeeping") {
  const MixedSequence s = seq_of({{'A', 12}, {'B', 4}, {'A', 7}, {'B', 9}, {'B', 2}});
  CHECK(s.count(Domain::kA) + s.count(Domain::kB) == s.size());
  CHECK(s.final_item(Domain::kA) == 7u);
  CHECK(s.final_item(Domain::kB) == 2u);
  CHECK(s.final_position(Domain::kB) == 4u);
  CHECK(s.rows_before(Domain::kB, 4) == 2);
  const auto al = s.cross_alignment(Domain::kB);
  CHECK(std::vector<int>(al.begin(), al.end()) == std::vector<int>{0, 1, 1});
  CHECK(s.cross_alignment(Domain::kA)[0] == -1);
  CHECK(s.targets(Domain::kA).size() == 1);
  CHECK(s.targets(Domain::kB).size() == 2);

  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const MixedSequence r = test::random_sequence(rng, 9, 9, 1 + rng.below(40));
    for (Domain d : kDomains) {
      const auto a = r.cross_alignment(d);
      for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1] <= a[i]);
    }
  }
}

TEST_CASE("vocabulary encodes and rejects unknown ids") {
  const Vocabulary va(Domain::kA, {30, 10, 20, 10});
  const Vocabulary vb(Domain::kB, {5});
  CHECK(va.size() == 3);
  CHECK(va.index(20) == 1);
  CHECK(va.id(2) == 30);
  CHECK_THROWS_AS(va.index(99), VocabError);
  const MixedSequence raw = seq_of({{'A', 30}, {'B', 5}, {'A', 99}});
  CHECK_THROWS_AS(encode(raw, va, vb), VocabError);
  EncodeStats st;
  const MixedSequence enc = encode(raw, va, vb, &st);
  CHECK(st.dropped_events == 1);
  CHECK(decode(enc, va, vb) == seq_of({{'A', 30}, {'B', 5}}));
  CHECK_THROWS_AS(check_indices(seq_of({{'B', 1}}), 3, 1), VocabError);
}

TEST_CASE("model config validation") {
  ModelConfig c = test::toy_config(Variant::kSplitByJoin);
  CHECK_NOTHROW(c.validate());
  c.ablation = Ablation::kNoJoin;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = test::toy_config(Variant::kSplitAndJoin);
  c.ablation = Ablation::kNoSplitByJoin;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = test::toy_config(Variant::kSplitAndJoin);
  c.roles = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_variant("psjnet3"), ConfigError);
  CHECK(parse_ablation("psj") == Ablation::kNoParallel);
}

TEST_CASE("gru step trivial cases") {
  nk::ParamStore store;
  const std::size_t d = 3;
  for (const char* g : {"z", "r", "c"}) store.add(g, Tensor({d, 2 * d}));
  nk::Tape tape(&store);
  const GruWeights w{tape.param("z"), tape.param("r"), tape.param("c")};
  const Var x = tape.constant(Tensor::vector({0.3, -1, 2}));
  const Var v = tape.constant(Tensor::vector({1.0, -4.0, 0.5}));
  CHECK(tape.value(gru_step(tape, w, x, v)) == Tensor::vector({0.5, -2.0, 0.25}));
  CHECK(tape.value(gru_step(tape, w, x, tape.zeros({d}))) == Tensor({d}));
}

TEST_CASE("gru step matches the scalar oracle") {
  Rng rng(4);
  const std::size_t d = 4;
  nk::ParamStore store;
  for (const char* g : {"z", "r", "c"}) store.add(g, random_tensor(rng, {d, 2 * d}));
  const Tensor x = random_tensor(rng, {d}), h = random_tensor(rng, {d});
  nk::Tape tape(&store);
  const Var out = gru_step(tape, {tape.param("z"), tape.param("r"), tape.param("c")},
                           tape.constant(x), tape.constant(h));
  check_close(gru_ref(store.at("z"), store.at("r"), store.at("c"), tensor_vec(x), tensor_vec(h)),
              tape.value(out), 1e-14);
}

TEST_CASE("encoders") {
  SUBCASE("zero weights keep the zero state") {
    const ModelParams p = zero_params(test::toy_config(Variant::kSplitAndJoin));
    const MixedSequence s = seq_of({{'A', 3}});
    nk::Tape tape(&p.tensors);
    SequenceForward f(tape, p, s);
    CHECK(tape.value(f.encoder_row(Domain::kA, 0)) == Tensor({8}));
  }
  const ModelParams p = test::random_params(test::toy_config(Variant::kSplitAndJoin), 5);
  SUBCASE("unrolled rows equal repeated gru steps") {
    const MixedSequence s = seq_of({{'A', 3}, {'A', 0}, {'A', 19}});
    nk::Tape tape(&p.tensors);
    SequenceForward f(tape, p, s);
    Vec h(8, 0.0);
    const Tensor& emb = p.tensors.at("A.emb");
    for (std::size_t i = 0; i < 3; ++i) {
      h = gru_ref(p, "A.enc", row_of(emb, s.item(Domain::kA, i)), h);
      check_close(h, tape.value(f.encoder_row(Domain::kA, i)), 1e-13);
    }
  }
  SUBCASE("appending a B event leaves the A rows unchanged") {
    const MixedSequence s1 = seq_of({{'A', 3}, {'A', 1}});
    const MixedSequence s2 = seq_of({{'A', 3}, {'B', 2}, {'A', 1}, {'B', 7}});
    nk::Tape t1(&p.tensors), t2(&p.tensors);
    SequenceForward f1(t1, p, s1), f2(t2, p, s2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(t1.value(f1.encoder_row(Domain::kA, i)) == t2.value(f2.encoder_row(Domain::kA, i)));
    }
  }
}

TEST_CASE("split-by-join step") {
  Rng rng(8);
  const std::size_t d = 5;
  nk::ParamStore store;
  for (const char* n : {"gw", "gt", "gu", "gv", "cw", "cu", "cv"}) store.add(n, random_tensor(rng, {d, d}));
  store.add("gb", random_tensor(rng, {d}));
  store.add("cb", random_tensor(rng, {d}));
  store.add("roles", random_tensor(rng, {3, d}));
  const Tensor hs = random_tensor(rng, {d}), ht = random_tensor(rng, {d}), prev = random_tensor(rng, {d});

  auto run = [&](nk::ParamStore& st, std::size_t k) {
    auto tape = std::make_unique<nk::Tape>(&st);
    SplitWeights w;
    w.roles = tape->param("roles");
    w.gate_w_src = tape->param("gw");
    w.gate_w_tgt = tape->param("gt");
    w.gate_u = tape->param("gu");
    w.gate_v = tape->param("gv");
    w.gate_b = tape->param("gb");
    w.cand_w = tape->param("cw");
    w.cand_u = tape->param("cu");
    w.cand_v = tape->param("cv");
    w.cand_b = tape->param("cb");
    SplitUnit unit(*tape, w, k);
    auto out = psj1_step(*tape, unit, tape->constant(hs), tape->constant(ht), tape->constant(prev));
    return std::make_pair(std::move(tape), out);
  };

  SUBCASE("saturated gates output the mean candidate") {
    nk::ParamStore st = store;
    st.at("gb").fill(1e4);
    auto [tape, out] = run(st, 3);
    Tensor mean({d});
    for (Var c : out.candidates) {
      for (std::size_t i = 0; i < d; ++i) mean[i] += tape->value(c)[i] / 3.0;
    }
    check_close(tensor_vec(mean), tape->value(out.output), 1e-15);
  }
  SUBCASE("closed gates pass the previous output through") {
    nk::ParamStore st = store;
    st.at("gb").fill(-1e4);
    auto [tape, out] = run(st, 3);
    CHECK(tape->value(out.output) == prev);
  }
  SUBCASE("identical role embeddings give identical role states") {
    nk::ParamStore st = store;
    for (std::size_t k = 1; k < 3; ++k) {
      for (std::size_t i = 0; i < d; ++i) st.at("roles").at(k, i) = st.at("roles").at(0, i);
    }
    auto [tape, out] = run(st, 3);
    CHECK(tape->value(out.role_states[1]) == tape->value(out.role_states[0]));
    CHECK(tape->value(out.role_states[2]) == tape->value(out.role_states[0]));
    check_close(tensor_vec(tape->value(out.role_states[0])), tape->value(out.output), 1e-15);
  }
  SUBCASE("single role is passed through exactly") {
    nk::ParamStore st = store;
    st.at("roles") = random_tensor(rng, {1, d});
    auto [tape, out] = run(st, 1);
    CHECK(tape->value(out.output) == tape->value(out.role_states[0]));
  }
  SUBCASE("role states are convex blends of candidate and previous output") {
    for (int trial = 0; trial < 50; ++trial) {
      nk::ParamStore st = store;
      for (auto& [name, t] : st) t = random_tensor(rng, t.shape(), 2.0);
      auto [tape, out] = run(st, 3);
      for (std::size_t k = 0; k < 3; ++k) {
        const Tensor& h = tape->value(out.role_states[k]);
        const Tensor& c = tape->value(out.candidates[k]);
        const Tensor& f = tape->value(out.gates[k]);
        for (std::size_t i = 0; i < d; ++i) {
          CHECK(f[i] > 0.0);
          CHECK(f[i] < 1.0);
          CHECK(h[i] >= std::min(c[i], prev[i]) - 1e-15);
          CHECK(h[i] <= std::max(c[i], prev[i]) + 1e-15);
        }
      }
    }
  }
}

TEST_CASE("split-and-join gate normalization") {
  Rng rng(12);
  const std::size_t d = 6;
  auto run = [&](std::size_t k, double scale, bool zero) {
    nk::ParamStore st;
    for (const char* n : {"gw", "gt", "gu", "gv", "cw", "cu", "cv", "nw", "nt", "nu"}) {
      st.add(n, zero ? Tensor({d, d}) : random_tensor(rng, {d, d}, scale));
    }
    for (const char* n : {"gb", "cb", "nb"}) st.add(n, zero ? Tensor({d}) : random_tensor(rng, {d}, scale));
    st.add("roles", zero ? Tensor({k, d}) : random_tensor(rng, {k, d}, scale));
    nk::Tape tape(&st);
    SplitWeights w{tape.param("roles"), tape.param("gw"), tape.param("gt"), tape.param("gu"),
                   tape.param("gv"),    tape.param("gb"), tape.param("cw"), tape.param("cu"),
                   tape.param("cv"),    tape.param("cb")};
    const NoneGateWeights nw{tape.param("nw"), tape.param("nt"), tape.param("nu"), tape.param("nb")};
    SplitUnit unit(tape, w, k);
    std::vector<Var> prev;
    for (std::size_t i = 0; i < k; ++i) prev.push_back(tape.constant(random_tensor(rng, {d})));
    const SplitOutput out = psj2_split_step(tape, unit, &nw, tape.constant(random_tensor(rng, {d})),
                                            tape.constant(random_tensor(rng, {d})), prev);
    std::vector<Tensor> gates;
    for (Var g : out.gates) gates.push_back(tape.value(g));
    gates.push_back(tape.value(out.none_gate));
    return gates;
  };
  SUBCASE("one role plus none sums to one") {
    for (int t = 0; t < 20; ++t) {
      const auto g = run(1, 1.0, false);
      for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(g[0][i] + g[1][i] - 1.0) <= 1e-12);
    }
  }
  SUBCASE("equal raw gates share the mass equally") {
    const auto g = run(3, 1.0, true);
    for (const Tensor& t : g) {
      for (double v : t.data()) CHECK(v == 0.25);
    }
  }
  SUBCASE("random inputs, K = 4") {
    for (int t = 0; t < 50; ++t) {
      const auto g = run(4, 3.0, false);
      for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (const Tensor& x : g) {
          CHECK(x[i] > 0.0);
          CHECK(x[i] < 1.0);
          s += x[i];
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("two-stage join") {
  Rng rng(31);
  const std::size_t d = 4;
  auto weights = [&](nk::Tape& tape) {
    return std::make_pair(
        JoinWeights{tape.leaf(random_tensor(rng, {d})), tape.leaf(random_tensor(rng, {d, d})),
                    tape.leaf(random_tensor(rng, {d, d}))},
        JoinWeights{tape.leaf(random_tensor(rng, {d})), tape.leaf(random_tensor(rng, {d, d})),
                    tape.leaf(random_tensor(rng, {d, d}))});
  };
  auto rows = [&](nk::Tape& tape, std::size_t n) {
    std::vector<Var> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(tape.leaf(random_tensor(rng, {d})));
    return out;
  };

  SUBCASE("one source row is returned exactly by stage one") {
    nk::Tape tape;
    auto [s1, s2] = weights(tape);
    const std::vector<std::vector<Var>> roles{rows(tape, 1), rows(tape, 1)};
    const JoinUnit unit(tape, s1, s2, roles, rows(tape, 3));
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(tape.value(unit.role_representation(tape, k, 1, 3)) == tape.value(roles[k][0]));
    }
  }
  SUBCASE("one role is returned exactly by stage two") {
    nk::Tape tape;
    auto [s1, s2] = weights(tape);
    const std::vector<std::vector<Var>> roles{rows(tape, 4)};
    const JoinUnit unit(tape, s1, s2, roles, rows(tape, 2));
    const Tensor joined = tape.value(unit.join(tape, 4, 2));  // copy: later pushes may reallocate
    CHECK(joined == tape.value(unit.role_representation(tape, 0, 4, 2)));
  }
  SUBCASE("N=3, M=2, K=2 matches explicit loops") {
    nk::Tape tape;
    auto [s1, s2] = weights(tape);
    const std::vector<std::vector<Var>> roles{rows(tape, 3), rows(tape, 3)};
    const std::vector<Var> in = rows(tape, 2);
    const Tensor got = tape.value(psj2_join(tape, s1, s2, roles, in));

    auto stage = [&](const JoinWeights& w, const std::vector<Vec>& xs) {
      const Vec v = tensor_vec(tape.value(w.v));
      Vec best(xs.size(), -INFINITY);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (Var h : in) {
          const Vec s = plus(matvec(tape.value(w.w_row), xs[i]), matvec(tape.value(w.w_in), tensor_vec(tape.value(h))));
          best[i] = std::max(best[i], dotv(v, s));
        }
      }
      const Vec a = softmax_ref(best);
      Vec out(d, 0.0);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) out[c] += a[i] * xs[i][c];
      }
      return out;
    };
    std::vector<Vec> g;
    for (const auto& r : roles) {
      std::vector<Vec> xs;
      for (Var x : r) xs.push_back(tensor_vec(tape.value(x)));
      g.push_back(stage(s1, xs));
    }
    check_close(stage(s2, g), got, 1e-13);
  }
  SUBCASE("causal cutoff equals joining the truncated sets") {
    nk::Tape tape;
    auto [s1, s2] = weights(tape);
    const std::vector<std::vector<Var>> roles{rows(tape, 5), rows(tape, 5), rows(tape, 5)};
    const std::vector<Var> in = rows(tape, 4);
    const Tensor cut = tape.value(psj2_join(tape, s1, s2, roles, in, JoinCutoff{2, 3}));
    std::vector<std::vector<Var>> short_roles;
    for (const auto& r : roles) short_roles.push_back({r[0], r[1]});
    const Tensor trunc = tape.value(psj2_join(tape, s1, s2, short_roles, {in[0], in[1], in[2]}));
    check_close(tensor_vec(trunc), cut, 1e-15);
  }
  SUBCASE("empty sets are rejected") {
    nk::Tape tape;
    auto [s1, s2] = weights(tape);
    CHECK_THROWS_AS(psj2_join(tape, s1, s2, {rows(tape, 2)}, {}), JoinError);
    const JoinUnit unit(tape, s1, s2, {rows(tape, 2)}, rows(tape, 2));
    CHECK_THROWS_AS(unit.join(tape, 0, 1), JoinError);
    CHECK_THROWS_AS(unit.join(tape, 3, 1), JoinError);
  }
}

TEST_CASE("decoder") {
  const std::size_t d = 3, v = 100;
  Rng rng(2);
  nk::Tape tape;
  const Var h_in = tape.constant(random_tensor(rng, {d})), h_x = tape.constant(random_tensor(rng, {d}));
  SUBCASE("zero weights give the uniform distribution") {
    const Tensor p = tape.value(decode_scores(tape, {tape.constant(Tensor({v, 2 * d})), tape.constant(Tensor({v}))}, h_in, h_x));
    for (double x : p.data()) CHECK(x == doctest::Approx(1.0 / v).epsilon(1e-14));
  }
  SUBCASE("a large bias dominates") {
    Tensor b({v});
    b[17] = 10.0;
    const Tensor p = tape.value(decode_scores(tape, {tape.constant(Tensor({v, 2 * d})), tape.constant(b)}, h_in, h_x));
    CHECK(p[17] > 0.99);
  }
  SUBCASE("permuting vocabulary rows permutes the output") {
    const Tensor w = random_tensor(rng, {v, 2 * d}), b = random_tensor(rng, {v});
    std::vector<std::size_t> perm(v);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Tensor pw({v, 2 * d}), pb({v});
    for (std::size_t i = 0; i < v; ++i) {
      pb[i] = b[perm[i]];
      for (std::size_t c = 0; c < 2 * d; ++c) pw.at(i, c) = w.at(perm[i], c);
    }
    const Tensor p = tape.value(decode_scores(tape, {tape.constant(w), tape.constant(b)}, h_in, h_x));
    const Tensor q = tape.value(decode_scores(tape, {tape.constant(pw), tape.constant(pb)}, h_in, h_x));
    for (std::size_t i = 0; i < v; ++i) CHECK(q[i] == doctest::Approx(p[perm[i]]).epsilon(1e-14));
  }
}

TEST_CASE("sequence loss special values") {
  SUBCASE("uniform decoder") {
    for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
      ModelParams p = test::random_params(test::toy_config(var), 3);
      for (Domain d : kDomains) {
        p.tensors.at(names::decoder_weight(d)).fill(0.0);
        p.tensors.at(names::decoder_bias(d)).fill(0.0);
      }
      Rng rng(6);
      const MixedSequence s = test::random_sequence(rng, 20, 15, 12, 3);
      CHECK(std::abs(sequence_loss_value(p, s, LossMode::kJoint) - (std::log(20.0) + std::log(15.0))) <= 1e-9);
      CHECK(std::abs(sequence_loss_value(p, s, LossMode::kAOnly) - std::log(20.0)) <= 1e-9);
    }
  }
  SUBCASE("certain predictions give zero loss") {
    ModelParams p = test::random_params(test::toy_config(Variant::kSplitAndJoin), 3);
    for (Domain d : kDomains) {
      p.tensors.at(names::decoder_weight(d)).fill(0.0);
      p.tensors.at(names::decoder_bias(d)).fill(0.0);
      p.tensors.at(names::decoder_bias(d))[4] = 1e3;
    }
    const MixedSequence s = seq_of({{'A', 4}, {'B', 4}, {'A', 4}, {'B', 4}, {'A', 4}});
    CHECK(sequence_loss_value(p, s, LossMode::kJoint) == 0.0);
  }
  SUBCASE("no targets") {
    const ModelParams p = test::random_params(test::toy_config(Variant::kSplitAndJoin), 3);
    CHECK_THROWS_AS(sequence_loss_value(p, seq_of({{'A', 1}, {'B', 2}}), LossMode::kJoint), EmptyLossError);
    CHECK_THROWS_AS(sequence_loss_value(p, seq_of({{'A', 1}, {'A', 2}}), LossMode::kBOnly), EmptyLossError);
    CHECK_THROWS_AS(sequence_loss_value(p, seq_of({{'A', 1}, {'A', 25}}), LossMode::kJoint), VocabError);
  }
}

TEST_CASE("two-event sequence matches the loop oracle") {
  for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
    const ModelParams p = test::random_params(test::toy_config(var), 17);
    const MixedSequence s = seq_of({{'A', 6}, {'A', 11}});
    const Vec h0 = gru_ref(p, "A.enc", row_of(p.tensors.at("A.emb"), 6), Vec(8, 0.0));
    const Vec logits = plus(matvec(p.tensors.at("A.dec.w"), cat(h0, Vec(8, 0.0))), tensor_vec(p.tensors.at("A.dec.b")));
    const double expected = -std::log(softmax_ref(logits)[11]);
    CHECK(sequence_loss_value(p, s, LossMode::kJoint) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("three-event sequence with a cross-domain step matches the loop oracle") {
  const MixedSequence s = seq_of({{'A', 2}, {'B', 9}, {'A', 13}});
  const std::size_t d = 8;
  for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
    const ModelParams p = test::random_params(test::toy_config(var), 23);
    const auto& T = p.tensors;
    const Vec a0 = gru_ref(p, "A.enc", row_of(T.at("A.emb"), 2), Vec(d, 0.0));
    const Vec b0 = gru_ref(p, "B.enc", row_of(T.at("B.emb"), 9), Vec(d, 0.0));
    const Vec zero(d, 0.0);
    Vec cross(d, 0.0);
    if (var == Variant::kSplitByJoin) {
      Vec mean(d, 0.0);
      for (std::size_t k = 0; k < 2; ++k) {
        const Vec role = row_of(T.at("BA.roles"), k);
        const Vec g = plus(plus(plus(matvec(T.at("BA.gate.w_src"), b0), matvec(T.at("BA.gate.w_tgt"), a0)),
                                matvec(T.at("BA.gate.v"), role)),
                           tensor_vec(T.at("BA.gate.b")));
        const Vec c = plus(plus(matvec(T.at("BA.cand.w"), b0), matvec(T.at("BA.cand.v"), role)),
                           tensor_vec(T.at("BA.cand.b")));
        for (std::size_t i = 0; i < d; ++i) mean[i] += sig(g[i]) * std::tanh(c[i]) / 2.0;
      }
      cross = gru_ref(p, "BA.xfer", mean, zero);
    } else {
      std::vector<Vec> raw, cand;
      for (std::size_t k = 0; k < 2; ++k) {
        const Vec role = row_of(T.at("BA.roles"), k);
        Vec g = plus(plus(plus(matvec(T.at("BA.gate.w_src"), b0), matvec(T.at("BA.gate.w_tgt"), a0)),
                          matvec(T.at("BA.gate.v"), role)),
                     tensor_vec(T.at("BA.gate.b")));
        for (double& x : g) x = sig(x);
        Vec c = plus(plus(matvec(T.at("BA.cand.w"), b0), matvec(T.at("BA.cand.v"), role)),
                     tensor_vec(T.at("BA.cand.b")));
        for (double& x : c) x = std::tanh(x);
        raw.push_back(g);
        cand.push_back(c);
      }
      Vec none = plus(plus(matvec(T.at("BA.none.w_src"), b0), matvec(T.at("BA.none.w_tgt"), a0)),
                      tensor_vec(T.at("BA.none.b")));
      for (double& x : none) x = sig(x);
      std::vector<Vec> g;  // one transferred row per role; stage one over one row is the identity
      for (std::size_t k = 0; k < 2; ++k) {
        Vec out(d);
        for (std::size_t i = 0; i < d; ++i) out[i] = raw[k][i] / (raw[0][i] + raw[1][i] + none[i]) * cand[k][i];
        g.push_back(gru_ref(p, "BA.xfer" + std::to_string(k), out, zero));
      }
      const Vec v2 = tensor_vec(T.at("BA.join2.v"));
      Vec score(2);
      for (std::size_t k = 0; k < 2; ++k) {
        score[k] = dotv(v2, plus(matvec(T.at("BA.join2.w_row"), g[k]), matvec(T.at("BA.join2.w_in"), a0)));
      }
      const Vec w = softmax_ref(score);
      for (std::size_t i = 0; i < d; ++i) cross[i] = w[0] * g[0][i] + w[1] * g[1][i];
    }
    const Vec logits = plus(matvec(T.at("A.dec.w"), cat(a0, cross)), tensor_vec(T.at("A.dec.b")));
    const double expected = -std::log(softmax_ref(logits)[13]);
    CHECK(sequence_loss_value(p, s, LossMode::kJoint) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("cross-domain representation edge cases") {
  for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
    const ModelParams p = test::random_params(test::toy_config(var), 29);
    const MixedSequence s = seq_of({{'B', 1}, {'B', 2}, {'A', 3}, {'B', 4}});
    nk::Tape tape(&p.tensors);
    SequenceForward f(tape, p, s);
    // No A events before the second B event: nothing to transfer into B.
    CHECK(tape.value(f.cross_representation(Domain::kB, 1)) == Tensor({8}));
    CHECK_FALSE(tape.value(f.cross_representation(Domain::kB, 3)) == Tensor({8}));
    // A target with no earlier A rows still sees B through the fallback join.
    CHECK_FALSE(tape.value(f.cross_representation(Domain::kA, 2)) == Tensor({8}));
  }
  ModelConfig c = test::toy_config(Variant::kSplitAndJoin);
  c.ablation = Ablation::kNoParallel;
  const ModelParams p = test::random_params(c, 1);
  const MixedSequence s = seq_of({{'A', 1}, {'B', 2}, {'A', 3}});
  nk::Tape tape(&p.tensors);
  SequenceForward f(tape, p, s);
  CHECK(tape.value(f.cross_representation(Domain::kA, 2)) == Tensor({8}));
}

TEST_CASE("predictions are valid distributions") {
  Rng rng(44);
  for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
    const ModelParams p = test::random_params(test::toy_config(var), 8);
    for (int t = 0; t < 10; ++t) {
      const MixedSequence s = test::random_sequence(rng, 20, 15, 2 + rng.below(20));
      const FinalPredictions fp = final_item_distributions(p, s);
      for (Domain d : kDomains) {
        REQUIRE(fp.dist[index_of(d)].has_value());
        double sum = 0.0;
        for (double x : fp.dist[index_of(d)]->data()) {
          CHECK(x >= 0.0);
          sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("causality: later events never change earlier predictions") {
  Rng rng(77);
  for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
    const ModelParams p = test::random_params(test::toy_config(var), 9);
    for (int trial = 0; trial < 10; ++trial) {
      const MixedSequence s = test::random_sequence(rng, 20, 15, 4 + rng.below(16));
      const std::size_t cut = 1 + rng.below(s.size() - 1);
      std::vector<Event> ev(s.events().begin(), s.events().end());
      for (std::size_t i = cut; i < ev.size(); ++i) {
        ev[i].domain = rng.bernoulli(0.5) ? Domain::kA : Domain::kB;
        ev[i].item = rng.below(ev[i].domain == Domain::kA ? 20 : 15);
      }
      ev.push_back({Domain::kA, 0});
      const MixedSequence t(std::move(ev));
      for (bool training : {false, true}) {
        const ForwardOptions opts{training, 0.8, 1234};
        nk::Tape ta(&p.tensors), tb(&p.tensors);
        SequenceForward fa(ta, p, s, opts), fb(tb, p, t, opts);
        for (Domain d : kDomains) {
          CHECK(ta.value(fa.log_probs(d, cut)) == tb.value(fb.log_probs(d, cut)));
        }
      }
    }
  }
}

TEST_CASE("swapping domain labels swaps the per-domain losses") {
  Rng rng(55);
  for (Variant var : {Variant::kSplitByJoin, Variant::kSplitAndJoin}) {
    const ModelConfig c = test::toy_config(var, 12, 12);
    const ModelParams p = test::random_params(c, 4);
    ModelParams q = zero_params(c);
    for (const auto& [name, t] : p.tensors) q.tensors.at(swap_name(name)) = t;
    for (int trial = 0; trial < 5; ++trial) {
      const MixedSequence s = test::random_sequence(rng, 12, 12, 10, 2);
      std::vector<Event> ev(s.events().begin(), s.events().end());
      for (Event& e : ev) e.domain = other(e.domain);
      const MixedSequence t(std::move(ev));
      CHECK(sequence_loss_value(p, s, LossMode::kAOnly) == sequence_loss_value(q, t, LossMode::kBOnly));
      CHECK(sequence_loss_value(p, s, LossMode::kBOnly) == sequence_loss_value(q, t, LossMode::kAOnly));
    }
  }
}

TEST_CASE("full-model gradient check for every variant and ablation") {
  struct Case {
    Variant v;
    Ablation a;
    bool share = false;
    bool none_shared = false;
  };
  const Case cases[] = {
      {Variant::kSplitByJoin, Ablation::kNone},       {Variant::kSplitByJoin, Ablation::kNoParallel},
      {Variant::kSplitByJoin, Ablation::kNoSplitByJoin}, {Variant::kSplitAndJoin, Ablation::kNone},
      {Variant::kSplitAndJoin, Ablation::kNoSplit},   {Variant::kSplitAndJoin, Ablation::kNoJoin},
      {Variant::kSplitAndJoin, Ablation::kNone, true, true},
  };
  const MixedSequence s = seq_of({{'B', 3}, {'A', 1}, {'A', 5}, {'B', 0}, {'A', 9}, {'B', 7}, {'A', 2}});
  for (const Case& cs : cases) {
    ModelConfig c = test::toy_config(cs.v, 10, 8, 4, 2);
    c.ablation = cs.a;
    c.share_role_transfer = cs.share;
    c.none_gate_shares_weights = cs.none_shared;
    ModelParams p = test::random_params(c, 99);
    for (bool training : {false, true}) {
      const ForwardOptions opts{training, 0.8, 5};
      const auto f = [&](nk::Tape& tape) { return sequence_loss(tape, p, s, LossMode::kJoint, opts); };
      const nk::CheckReport r = nk::grad_check(f, p.tensors, 1e-5, 1e-4);
      CHECK_MESSAGE(r.passed, to_string(cs.v) << "/" << to_string(cs.a) << " worst " << r.worst_param
                                              << " err " << r.max_rel_err);
    }
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  Checkpoint ck;
  ck.vocab_a = Vocabulary(Domain::kA, {3, 8, 100});
  ck.vocab_b = Vocabulary(Domain::kB, {1, 2});
  ModelConfig c = test::toy_config(Variant::kSplitAndJoin, 3, 2, 4, 3);
  ck.params = test::random_params(c, 1);
  ck.meta = {{"note", "x"}};
  const std::string bytes = serialize_checkpoint(ck);
  const Checkpoint back = parse_checkpoint(bytes);
  CHECK(back.params == ck.params);
  CHECK(back.vocab_a == ck.vocab_a);
  CHECK(back.vocab_b == ck.vocab_b);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint("PSJNETv0" + bytes.substr(8)), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint(""), CheckpointError);

  test::TempDir dir("ckpt");
  save_checkpoint(dir / "m.ckpt", ck);
  CHECK(read_file(dir / "m.ckpt") == bytes);
  CHECK(load_checkpoint(dir / "m.ckpt").params == ck.params);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
}
