#include <cmath>
#include <set>

#include "doctest.h"
#include "psjnet/data/synthetic.hpp"
#include "psjnet/error.hpp"
#include "psjnet/model/network.hpp"
#include "psjnet/trainer/init.hpp"
#include "psjnet/trainer/optimizer.hpp"
#include "psjnet/trainer/train.hpp"
#include "support.hpp"

using namespace psjnet;
using nk::Tensor;

namespace {

// Small planted-role corpus shared by the training tests.
SynthDataset small_synth(std::size_t accounts = 12, std::size_t per_account = 2) {
  SynthConfig c;
  c.accounts = accounts;
  c.sequences_per_account = per_account;
  c.role_types = 4;
  c.role_items = 3;
  c.max_length = 16;
  c.seed = 3;
  return make_synthetic_benchmark(c);
}

TrainConfig small_config() {
  TrainConfig c;
  c.model.hidden = 8;
  c.model.roles = 2;
  c.batch = 8;
  c.epochs = 2;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("xavier initialisation") {
  const Tensor t = xavier_init({90, 90}, 5);
  const double bound = std::sqrt(6.0 / 180.0);
  CHECK(xavier_bound({90, 90}) == bound);
  CHECK(bound == doctest::Approx(0.1826).epsilon(1e-3));
  for (double v : t.data()) CHECK(std::abs(v) <= bound);
  CHECK(xavier_init({90, 90}, 5) == t);
  CHECK_FALSE(xavier_init({90, 90}, 6) == t);
  CHECK_THROWS_AS(xavier_init({}, 1), ShapeError);

  const Tensor big = xavier_init({100000}, 11);
  const double b = xavier_bound({100000});
  double mean = 0.0;
  for (double v : big.data()) mean += v;
  mean /= 1e5;
  const double sigma_of_mean = b / std::sqrt(3.0) / std::sqrt(1e5);
  CHECK(std::abs(mean) < 3.0 * sigma_of_mean);
}

TEST_CASE("parameter initialisation zeroes biases only") {
  const ModelConfig c = test::toy_config(Variant::kSplitAndJoin);
  const ModelParams p = init_params(c, 1);
  for (const ParamSpec& s : parameter_layout(c)) {
    const Tensor& t = p.tensors.at(s.name);
    CHECK(t.shape() == s.shape);
    double norm = 0.0;
    for (double v : t.data()) norm += std::abs(v);
    if (s.bias) {
      CHECK(norm == 0.0);
    } else {
      CHECK(norm > 0.0);
    }
  }
  CHECK(init_params(c, 1) == p);
}

TEST_CASE("gradient clipping") {
  nk::GradMap g{{"w", Tensor::vector({7, -9, 3.2, -5, 5, 0})}};
  clip_gradients(g);
  CHECK(g.at("w") == Tensor::vector({5, -5, 3.2, -5, 5, 0}));
  nk::GradMap again = g;
  clip_gradients(again);
  CHECK(again == g);
  CHECK_THROWS_AS(clip_gradients(g, 1.0, 1.0), ConfigError);

  nk::Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    nk::GradMap r{{"x", Tensor({50})}};
    for (double& v : r.at("x").storage()) v = 1e3 * (2.0 * rng.uniform() - 1.0);
    clip_gradients(r);
    for (double v : r.at("x").data()) CHECK(std::abs(v) <= 5.0);
  }
}

TEST_CASE("adam") {
  const AdamConfig cfg;
  SUBCASE("zero gradient leaves parameters unchanged") {
    nk::ParamStore p;
    p.add("w", Tensor::vector({1.5, -2}));
    AdamState s;
    adam_step(p, {{"w", Tensor({2})}}, s, cfg);
    CHECK(p.at("w") == Tensor::vector({1.5, -2}));
    CHECK(s.t == 1);
  }
  SUBCASE("first step on a scalar") {
    nk::ParamStore p;
    p.add("w", Tensor::scalar(0.0));
    AdamState s;
    adam_step(p, {{"w", Tensor::scalar(0.5)}}, s, cfg);
    CHECK(p.at("w").item() == doctest::Approx(-0.001 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
    CHECK(std::abs(p.at("w").item() + 0.001) < 1e-10);
  }
  SUBCASE("trajectory matches an independent scalar loop") {
    const double grads[] = {0.5, 0.5, -1.25, 3.0, 0.01};
    nk::ParamStore p;
    p.add("w", Tensor::scalar(0.2));
    AdamState s;
    double theta = 0.2, m = 0.0, v = 0.0, b1t = 1.0, b2t = 1.0;
    for (double g : grads) {
      adam_step(p, {{"w", Tensor::scalar(g)}}, s, cfg);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      b1t *= 0.9;
      b2t *= 0.999;
      theta -= 0.001 * (m / (1.0 - b1t)) / (std::sqrt(v / (1.0 - b2t)) + 1e-8);
      CHECK(std::abs(p.at("w").item() - theta) <= 1e-12);
    }
  }
  SUBCASE("bad gradients are rejected before any update") {
    nk::ParamStore p;
    p.add("a", Tensor::scalar(1.0));
    p.add("b", Tensor::scalar(1.0));
    AdamState s;
    CHECK_THROWS_AS(adam_step(p, {{"a", Tensor::scalar(1.0)}, {"b", Tensor::scalar(NAN)}}, s, cfg), NumericsError);
    CHECK(p.at("a").item() == 1.0);
    CHECK(s.t == 0);
    CHECK_THROWS_AS(adam_step(p, {{"c", Tensor::scalar(1.0)}}, s, cfg), ConfigError);
    CHECK_THROWS_AS(adam_step(p, {{"a", Tensor::vector({1, 2})}}, s, cfg), ShapeError);
  }
}

TEST_CASE("dropout on plain tensors") {
  const Tensor h({100000}, 2.0);
  CHECK(apply_dropout(h, 1.0, true, 3) == h);
  CHECK(apply_dropout(h, 0.5, false, 3) == h);
  const Tensor d = apply_dropout(h, 0.8, true, 3);
  std::size_t kept = 0;
  double mean = 0.0;
  for (double v : d.data()) {
    kept += v != 0.0;
    mean += v / 1e5;
  }
  CHECK(std::abs(static_cast<double>(kept) / 1e5 - 0.8) <= 0.01);
  CHECK(std::abs(mean - 2.0) <= 0.02 * 2.0);
  CHECK(apply_dropout(h, 0.8, true, 3) == d);
  CHECK_THROWS_AS(apply_dropout(h, 0.0, true, 3), ConfigError);
}

TEST_CASE("batches cover every sequence once, grouped by length") {
  const std::vector<std::size_t> lengths{5, 3, 9, 3, 7, 5, 5, 2, 8, 4, 6};
  const auto batches = make_batches(lengths, 4, 9);
  std::multiset<std::size_t> seen;
  std::vector<std::size_t> maxima;
  for (const auto& b : batches) {
    CHECK(b.size() <= 4);
    for (std::size_t i : b) seen.insert(i);
  }
  CHECK(seen.size() == lengths.size());
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == lengths.size());
  CHECK(make_batches(lengths, 4, 9) == batches);
  // Within a batch lengths are contiguous in sorted order: every batch's
  // range [min, max] overlaps another batch only at its endpoints.
  for (const auto& a : batches) {
    for (const auto& b : batches) {
      if (&a == &b) continue;
      std::size_t amax = 0, bmin = 100;
      for (std::size_t i : a) amax = std::max(amax, lengths[i]);
      for (std::size_t i : b) bmin = std::min(bmin, lengths[i]);
      std::size_t amin = 100, bmax = 0;
      for (std::size_t i : a) amin = std::min(amin, lengths[i]);
      for (std::size_t i : b) bmax = std::max(bmax, lengths[i]);
      CHECK((amax <= bmin || bmax <= amin));
    }
  }
  CHECK_THROWS_AS(make_batches(lengths, 0, 1), ConfigError);
}

TEST_CASE("one epoch over one batch equals a manual step") {
  const SynthDataset ds = small_synth(4, 1);
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  cfg.batch = 64;
  const TrainResult r = train(ds.splits.train, {}, cfg);

  const Vocabulary va = Vocabulary::from_sequences(Domain::kA, ds.splits.train);
  const Vocabulary vb = Vocabulary::from_sequences(Domain::kB, ds.splits.train);
  ModelConfig mc = cfg.model;
  mc.vocab_a = va.size();
  mc.vocab_b = vb.size();
  ModelParams p = init_params(mc, cfg.seed);
  std::vector<MixedSequence> enc;
  std::vector<std::size_t> lengths;
  for (const auto& s : ds.splits.train) {
    enc.push_back(encode(s, va, vb));
    lengths.push_back(s.size());
  }
  const auto batches = make_batches(lengths, cfg.batch, nk::mix_seed(cfg.seed, {1, 0xba7c}));
  REQUIRE(batches.size() == 1);
  const std::uint64_t seed = nk::mix_seed(cfg.seed, {1, 0, 0xd50});
  nk::GradMap sum;
  const double w = 1.0 / static_cast<double>(enc.size());
  for (std::size_t j = 0; j < batches[0].size(); ++j) {
    const ForwardOptions opts{true, cfg.keep_prob, nk::mix_seed(seed, {j})};
    const LossAndGrad lg = sequence_loss_and_grad(p, enc[batches[0][j]], LossMode::kJoint, opts);
    for (const auto& [name, g] : lg.grads) {
      auto it = sum.try_emplace(name, Tensor(g.shape())).first;
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += w * g[i];
    }
  }
  clip_gradients(sum);
  AdamState st;
  adam_step(p.tensors, sum, st, cfg.adam);
  CHECK(r.final.params.tensors == p.tensors);
  CHECK(r.history.size() == 1);
}

TEST_CASE("zero learning rate freezes the parameters") {
  const SynthDataset ds = small_synth();
  TrainConfig cfg = small_config();
  cfg.adam.lr = 0.0;
  cfg.epochs = 3;
  const TrainResult r = train(ds.splits.train, {}, cfg);
  ModelConfig mc = r.final.params.config;
  CHECK(r.final.params.tensors == init_params(mc, cfg.seed).tensors);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const SynthDataset ds = small_synth();
  TrainConfig cfg = small_config();
  cfg.threads = 2;
  cfg.batch = 20;  // several accumulation groups per batch
  const TrainResult a = train(ds.splits.train, ds.splits.valid, cfg);
  const TrainResult b = train(ds.splits.train, ds.splits.valid, cfg);
  CHECK(a.final.params == b.final.params);
  CHECK(a.best.params == b.best.params);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].train_loss == b.history[i].train_loss);
  // The worker count does not change the summation order.
  for (std::size_t threads : {1, 3}) {
    cfg.threads = threads;
    CHECK(train(ds.splits.train, ds.splits.valid, cfg).final.params == a.final.params);
  }
  cfg.threads = 2;
  cfg.seed = 2;
  CHECK_FALSE(train(ds.splits.train, ds.splits.valid, cfg).final.params == a.final.params);
}

TEST_CASE("training loss decreases on the planted benchmark") {
  const SynthDataset ds = small_synth(16, 2);
  TrainConfig cfg = small_config();
  cfg.model.hidden = 16;
  cfg.epochs = 10;
  cfg.adam.lr = 0.01;
  const TrainResult r = train(ds.splits.train, {}, cfg);
  REQUIRE(r.history.size() == 10);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK_MESSAGE(r.history[i].train_loss < r.history[i - 1].train_loss, "epoch " << i + 1);
  }
}

TEST_CASE("validation selects the best epoch and patience stops early") {
  const SynthDataset ds = small_synth();
  TrainConfig cfg = small_config();
  cfg.epochs = 6;
  cfg.patience = 0;
  std::size_t calls = 0;
  const TrainResult r = train(ds.splits.train, ds.splits.valid, cfg, [&](const EpochRecord&) { ++calls; });
  CHECK(calls == 6);
  CHECK(r.history.size() == 6);
  double best = -1.0;
  std::size_t best_epoch = 0;
  for (const EpochRecord& e : r.history) {
    CHECK(e.val_mrr20_a >= 0.0);
    CHECK(e.val_mrr20_a <= 1.0);
    if (e.val_mrr20_a + e.val_mrr20_b > best) {
      best = e.val_mrr20_a + e.val_mrr20_b;
      best_epoch = e.epoch;
    }
  }
  CHECK(r.best_epoch == best_epoch);
  CHECK(r.best.meta.at("epoch") == best_epoch);

  cfg.patience = 1;
  cfg.epochs = 50;
  const TrainResult early = train(ds.splits.train, ds.splits.valid, cfg);
  CHECK(early.history.size() < 50);
  CHECK(early.history.size() >= early.best_epoch + 1);
}

TEST_CASE("training input validation") {
  const SynthDataset ds = small_synth();
  TrainConfig cfg = small_config();
  CHECK_THROWS_AS(train({}, {}, cfg), ConfigError);
  cfg.keep_prob = 0.0;
  CHECK_THROWS_AS(train(ds.splits.train, {}, cfg), ConfigError);
  cfg = small_config();
  cfg.clip_lo = 5.0;
  CHECK_THROWS_AS(train(ds.splits.train, {}, cfg), ConfigError);

  const std::vector<MixedSequence> no_targets{MixedSequence({{Domain::kA, 1}, {Domain::kB, 2}})};
  CHECK_THROWS_AS(train(no_targets, {}, small_config()), ConfigError);

  ModelConfig mc = test::toy_config(Variant::kSplitAndJoin);
  ModelParams p = init_params(mc, 1);
  p.tensors.at("A.dec.b")[0] = NAN;
  AdamState st;
  const std::vector<MixedSequence> batch{MixedSequence({{Domain::kA, 0}, {Domain::kA, 1}})};
  CHECK_THROWS_AS(train_step(p, st, batch, small_config(), 1), TrainingError);
}

TEST_CASE("history csv layout") {
  std::vector<EpochRecord> h{{1, 2.5, 0.1, 0.2, 3.0}, {2, 2.25, 0.125, 0.25, 6.5}};
  CHECK(history_csv(h) ==
        "epoch,train_loss,val_mrr20_A,val_mrr20_B,wall_seconds\n"
        "1,2.500000,0.100000,0.200000,3.000000\n"
        "2,2.250000,0.125000,0.250000,6.500000\n");
}
