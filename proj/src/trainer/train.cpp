#include "psjnet/trainer/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "psjnet/error.hpp"
#include "psjnet/eval/evaluate.hpp"
#include "psjnet/model/network.hpp"
#include "psjnet/numkernel/random.hpp"
#include "psjnet/parallel.hpp"
#include "psjnet/trainer/init.hpp"

namespace psjnet {

void TrainConfig::validate() const {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("keep probability must lie in (0, 1]");
  if (!(clip_lo < clip_hi)) throw ConfigError("clip range needs lo < hi");
  if (batch == 0) throw ConfigError("batch size must be at least 1");
  if (!(adam.lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"model", config_to_json(c.model)},
          {"keep_prob", c.keep_prob},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps", c.adam.eps},
          {"clip", {c.clip_lo, c.clip_hi}},
          {"batch", c.batch},
          {"epochs", c.epochs},
          {"patience", c.patience},
          {"seed", c.seed}};
}

namespace {

void accumulate(nk::GradMap& into, const nk::GradMap& g, double w) {
  for (const auto& [name, t] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      it = into.emplace(name, nk::Tensor(t.shape())).first;
    }
    nk::axpy(w, t.data().data(), it->second.data().data(), t.size());
  }
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double train_step(ModelParams& params, AdamState& state, std::span<const MixedSequence> batch,
                  const TrainConfig& config, std::uint64_t dropout_seed) {
  if (batch.empty()) throw ConfigError("empty batch");
  // Gradients are summed within fixed groups of consecutive sequences and
  // then across groups in order, so the result does not depend on how many
  // workers run the groups.
  constexpr std::size_t kGroup = 8;
  const std::size_t groups = (batch.size() + kGroup - 1) / kGroup;
  const std::size_t threads = config.threads == 0 ? worker_count() : config.threads;
  const double w = 1.0 / static_cast<double>(batch.size());
  std::vector<nk::GradMap> partial(groups);
  std::vector<double> losses(batch.size(), 0.0);
  parallel_for(groups, threads, [&](std::size_t c) {
    for (std::size_t i = c * kGroup; i < std::min(batch.size(), (c + 1) * kGroup); ++i) {
      ForwardOptions opts{true, config.keep_prob, nk::mix_seed(dropout_seed, {i})};
      LossAndGrad lg = sequence_loss_and_grad(params, batch[i], LossMode::kJoint, opts);
      losses[i] = lg.loss;
      accumulate(partial[c], lg.grads, w);
    }
  });
  double loss = 0.0;
  for (double l : losses) loss += l;
  loss *= w;
  nk::GradMap grads = std::move(partial[0]);
  for (std::size_t c = 1; c < groups; ++c) accumulate(grads, partial[c], 1.0);
  if (!std::isfinite(loss)) throw TrainingError("non-finite batch loss");
  clip_gradients(grads, config.clip_lo, config.clip_hi);
  adam_step(params.tensors, grads, state, config.adam);
  return loss;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> lengths,
                                                   std::size_t batch, std::uint64_t seed) {
  if (batch == 0) throw ConfigError("batch size must be at least 1");
  nk::Rng rng(seed);
  std::vector<std::size_t> order(lengths.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch)));
  }
  rng.shuffle(out);
  return out;
}

TrainResult train(std::span<const MixedSequence> raw_train,
                  std::span<const MixedSequence> raw_valid, const TrainConfig& config_in,
                  const EpochCallback& on_epoch) {
  config_in.validate();
  if (raw_train.empty()) throw ConfigError("training split is empty");
  TrainConfig config = config_in;
  const Vocabulary va = Vocabulary::from_sequences(Domain::kA, raw_train);
  const Vocabulary vb = Vocabulary::from_sequences(Domain::kB, raw_train);
  if (va.size() == 0 || vb.size() == 0) {
    throw ConfigError("training split must contain events of both domains");
  }
  config.model.vocab_a = va.size();
  config.model.vocab_b = vb.size();
  config.model.validate();

  TrainResult result;
  std::vector<MixedSequence> data;
  std::vector<std::size_t> lengths;
  for (const MixedSequence& raw : raw_train) {
    MixedSequence s = encode(raw, va, vb);
    if (s.count(Domain::kA) < 2 && s.count(Domain::kB) < 2) {
      ++result.skipped_sequences;
      continue;
    }
    lengths.push_back(s.size());
    data.push_back(std::move(s));
  }
  if (data.empty()) throw ConfigError("no training sequence has a next-item target");

  const std::size_t threads = config.threads == 0 ? worker_count() : config.threads;
  ModelParams params = init_params(config.model, config.seed);
  AdamState state;
  const nlohmann::json meta = {{"train_config", train_config_to_json(config)}};
  auto snapshot = [&](const ModelParams& p, std::size_t epoch) {
    Checkpoint c{p, va, vb, meta};
    c.meta["epoch"] = epoch;
    return c;
  };
  result.best = snapshot(params, 0);
  double best_score = -1.0;
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(lengths, config.batch, nk::mix_seed(config.seed, {epoch, 0xba7c}));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<MixedSequence> batch;
      batch.reserve(batches[b].size());
      for (std::size_t i : batches[b]) batch.push_back(data[i]);
      double loss = 0.0;
      try {
        loss = train_step(params, state, batch, config, nk::mix_seed(config.seed, {epoch, b, 0xd50}));
      } catch (const TrainingError&) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1));
      } catch (const NumericsError& e) {
        throw TrainingError("numerical failure at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1) + ": " + e.what());
      }
      loss_sum += loss * static_cast<double>(batch.size());
      seen += batch.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    if (!raw_valid.empty()) {
      const EvalReport r =
          evaluate_raw(model_scorer(params), va, vb, raw_valid, std::vector<std::size_t>{20}, threads);
      rec.val_mrr20_a = r.at(Domain::kA).mrr(20);
      rec.val_mrr20_b = r.at(Domain::kB).mrr(20);
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double score = rec.val_mrr20_a + rec.val_mrr20_b;
    if (raw_valid.empty() || score > best_score) {
      best_score = score;
      since_best = 0;
      result.best = snapshot(params, epoch);
      result.best_epoch = epoch;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  result.final = snapshot(params, result.history.empty() ? 0 : result.history.back().epoch);
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_mrr20_A,val_mrr20_B,wall_seconds\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << "," << fixed6(r.train_loss) << "," << fixed6(r.val_mrr20_a) << ","
       << fixed6(r.val_mrr20_b) << "," << fixed6(r.wall_seconds) << "\n";
  }
  return os.str();
}

}  // namespace psjnet
