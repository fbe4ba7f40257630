#ifndef PSJNET_TRAINER_TRAIN_HPP_
#define PSJNET_TRAINER_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "psjnet/model/checkpoint.hpp"
#include "psjnet/model/params.hpp"
#include "psjnet/model/sequence.hpp"
#include "psjnet/trainer/optimizer.hpp"

namespace psjnet {

struct TrainConfig {
  // Vocabulary sizes are filled in from the training split.
  ModelConfig model;
  double keep_prob = 0.8;
  AdamConfig adam;
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  std::size_t batch = 64;
  std::size_t epochs = 30;
  std::size_t patience = 5;  // 0 disables early stopping
  std::uint64_t seed = 1;
  std::size_t threads = 0;   // 0: worker_count()

  // Throws ConfigError.
  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& c);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_mrr20_a = 0.0;
  double val_mrr20_b = 0.0;
  double wall_seconds = 0.0;  // since training started
};

struct TrainResult {
  Checkpoint best;   // highest summed validation MRR@20
  Checkpoint final;  // parameters after the last epoch run
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t skipped_sequences = 0;  // training sequences without targets
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Vocabularies come from `raw_train`. Validation uses the held-out final-item
// protocol. Throws ConfigError on an empty training split and TrainingError
// when the loss stops being finite.
TrainResult train(std::span<const MixedSequence> raw_train,
                  std::span<const MixedSequence> raw_valid, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// One optimisation step over `batch` (dense indices): mean loss gradient,
// element-wise clip, Adam. Returns the mean batch loss.
double train_step(ModelParams& params, AdamState& state, std::span<const MixedSequence> batch,
                  const TrainConfig& config, std::uint64_t dropout_seed);

// Index batches for one epoch: a seeded shuffle, a stable sort by length so
// each batch holds similar lengths, then a seeded shuffle of batch order.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> lengths,
                                                   std::size_t batch, std::uint64_t seed);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace psjnet

#endif  // PSJNET_TRAINER_TRAIN_HPP_
