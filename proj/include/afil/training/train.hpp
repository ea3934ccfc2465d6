#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "afil/data/dataset.hpp"
#include "afil/models/dag_model.hpp"
#include "afil/models/normalizer.hpp"
#include "afil/numerics/adam.hpp"

namespace afil::training {

struct TrainConfig {
  int steps = 20000;  // optimizer updates (train_dag: success/failure pairs)
  std::size_t batch_size = 128;
  numerics::AdamConfig adam;
  // Cosine decay of the learning rate down to lr * lr_final_fraction at the
  // last step; 1 keeps it constant.
  double lr_final_fraction = 1.0;
  std::uint64_t seed = 0;
  int log_every = 100;
  bool freeze_trunk = false;  // debug: update heads only
  // When set, the trained model is written here (and the last good one on
  // divergence), together with `normalizer`.
  std::filesystem::path checkpoint_path;
  models::Normalizer normalizer;
  std::string label;

  void validate() const;
};

struct LossPoint {
  int step = 0;
  double loss = 0.0;  // mean over the steps since the previous point
};

struct TrainLog {
  std::vector<LossPoint> success;
  std::vector<LossPoint> failure;
};

// Generative training of one head (plus the trunk unless frozen) on a
// normalized chunk set. The other head is never touched. On a non-finite loss
// the last logged model is restored into `model`, checkpointed if a path is
// configured, and TrainingError is thrown.
TrainLog train_head(models::DagModel& model, models::Head head, const data::ChunkSet& set,
                    const TrainConfig& cfg);

// Fresh model from (config, cfg.seed), trained on D_s with the success head.
models::DagModel train_success_only(const data::ChunkSet& success, const models::ModelConfig& config,
                                    const TrainConfig& cfg, TrainLog* log = nullptr);

// Alternates one success batch (trunk + success head) with one failure batch
// (trunk + failure head). The smaller split simply repeats. Marks the failure
// head trained.
TrainLog train_dag(models::DagModel& model, const data::ChunkSet& success, const data::ChunkSet& failure,
                   const TrainConfig& cfg);

// Mean generative loss of `head` on up to `max_rows` rows, with draws fixed by
// `seed`. Leaves the model untouched.
double evaluate_loss(const models::DagModel& model, models::Head head, const data::ChunkSet& set,
                     std::uint64_t seed, std::size_t max_rows = 1024);

}  // namespace afil::training
