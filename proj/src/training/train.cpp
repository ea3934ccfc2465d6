#include "afil/training/train.hpp"

#include <cmath>

#include "afil/core/error.hpp"
#include "afil/core/rng.hpp"
#include "afil/generative/losses.hpp"
#include "afil/models/checkpoint.hpp"

namespace afil::training {

using models::DagModel;
using models::Head;
using numerics::Tensor;

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("training steps must be non-negative");
  if (batch_size == 0) throw ConfigError("training batch size must be positive");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (log_every <= 0) throw ConfigError("log_every must be positive");
  if (!(lr_final_fraction > 0.0) || lr_final_fraction > 1.0)
    throw ConfigError("lr_final_fraction must be in (0, 1]");
}

namespace {

struct Batch {
  models::ConditionBatch cond;
  Tensor action0;
};

void check_set(const DagModel& model, const data::ChunkSet& set, const char* split) {
  const auto& c = model.config();
  if (set.size() == 0) throw ContractError(std::string(split) + " chunk set is empty");
  if (set.obs_dim != c.obs_dim || set.task_dim != c.task_dim || set.chunk_dim != c.chunk_dim())
    throw ShapeError(std::string(split) + " chunk set widths do not match the model");
}

Batch gather(const data::ChunkSet& set, std::span<const std::size_t> rows) {
  const std::size_t b = rows.size();
  std::vector<double> obs(b * set.obs_dim), task(b * set.task_dim), chunk(b * set.chunk_dim);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t r = rows[i];
    std::copy_n(set.obs.begin() + static_cast<std::ptrdiff_t>(r * set.obs_dim), set.obs_dim,
                obs.begin() + static_cast<std::ptrdiff_t>(i * set.obs_dim));
    std::copy_n(set.task.begin() + static_cast<std::ptrdiff_t>(r * set.task_dim), set.task_dim,
                task.begin() + static_cast<std::ptrdiff_t>(i * set.task_dim));
    std::copy_n(set.chunk.begin() + static_cast<std::ptrdiff_t>(r * set.chunk_dim), set.chunk_dim,
                chunk.begin() + static_cast<std::ptrdiff_t>(i * set.chunk_dim));
  }
  return {{Tensor::from({b, set.obs_dim}, std::move(obs)), Tensor::from({b, set.task_dim}, std::move(task))},
          Tensor::from({b, set.chunk_dim}, std::move(chunk))};
}

Batch sample_batch(const data::ChunkSet& set, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> rows(batch_size);
  for (auto& r : rows) r = rng.below(set.size());
  return gather(set, rows);
}

std::vector<Tensor> update_set(const DagModel& model, Head head, bool freeze_trunk) {
  std::vector<Tensor> params = freeze_trunk ? std::vector<Tensor>{} : model.trunk_parameters();
  for (auto& p : model.head_parameters(head)) params.push_back(p);
  return params;
}

// One optimizer update; returns the batch loss or NaN if it went non-finite.
double update(DagModel& model, Head head, const data::ChunkSet& set, const generative::Process& process,
              const TrainConfig& cfg, numerics::Adam& adam, Rng& rng) {
  try {
    Batch batch = sample_batch(set, cfg.batch_size, rng);
    Tensor loss = generative::generative_loss(generative::head_predictor(model, head, batch.cond),
                                              batch.action0, process, rng);
    const double value = loss.item();
    if (!std::isfinite(value)) return NAN;
    model.zero_grad();
    numerics::backward(loss);
    adam.step(update_set(model, head, cfg.freeze_trunk));
    return value;
  } catch (const NumericError&) {
    return NAN;
  }
}

void write_checkpoint(const DagModel& model, const TrainConfig& cfg) {
  if (cfg.checkpoint_path.empty()) return;
  const auto norm = cfg.normalizer.obs_dim() ? cfg.normalizer
                                             : models::Normalizer::identity(model.config().obs_dim,
                                                                            model.config().action_dim);
  models::save_checkpoint(cfg.checkpoint_path, model, norm, cfg.label);
}

double lr_at(const TrainConfig& cfg, int step) {
  if (cfg.lr_final_fraction == 1.0 || cfg.steps <= 1) return cfg.adam.lr;
  const double progress = static_cast<double>(step - 1) / static_cast<double>(cfg.steps - 1);
  const double f = cfg.lr_final_fraction;
  return cfg.adam.lr * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(M_PI * progress)));
}

[[noreturn]] void diverged(DagModel& model, const DagModel& last_good, int step, int good_step,
                           const TrainConfig& cfg) {
  model = last_good;
  write_checkpoint(model, cfg);
  throw TrainingError("training diverged at step " + std::to_string(step) +
                      "; restored the model from step " + std::to_string(good_step) +
                      (cfg.checkpoint_path.empty() ? "" : " (" + cfg.checkpoint_path.string() + ")"));
}

}  // namespace

TrainLog train_head(DagModel& model, Head head, const data::ChunkSet& set, const TrainConfig& cfg) {
  cfg.validate();
  check_set(model, set, head == Head::success ? "success" : "failure");
  const auto process = generative::Process::from(model.config().process);
  numerics::Adam adam(cfg.adam);
  Rng rng(derive_seed({cfg.seed, 0x747261696eULL, static_cast<std::uint64_t>(head)}));
  TrainLog log;
  auto& curve = head == Head::success ? log.success : log.failure;
  DagModel last_good = model;
  int good_step = 0;
  double acc = 0.0;
  int n = 0;
  for (int s = 1; s <= cfg.steps; ++s) {
    adam.set_lr(lr_at(cfg, s));
    const double l = update(model, head, set, process, cfg, adam, rng);
    if (!std::isfinite(l)) diverged(model, last_good, s, good_step, cfg);
    acc += l;
    ++n;
    if (s % cfg.log_every == 0 || s == cfg.steps) {
      curve.push_back({s, acc / n});
      acc = 0.0;
      n = 0;
      last_good = model;
      good_step = s;
    }
  }
  write_checkpoint(model, cfg);
  return log;
}

DagModel train_success_only(const data::ChunkSet& success, const models::ModelConfig& config,
                            const TrainConfig& cfg, TrainLog* log) {
  DagModel model(config, cfg.seed);
  TrainLog l = train_head(model, Head::success, success, cfg);
  if (log) *log = std::move(l);
  return model;
}

TrainLog train_dag(DagModel& model, const data::ChunkSet& success, const data::ChunkSet& failure,
                   const TrainConfig& cfg) {
  cfg.validate();
  check_set(model, success, "success");
  check_set(model, failure, "failure");
  const auto process = generative::Process::from(model.config().process);
  numerics::Adam adam(cfg.adam);
  Rng rng_s(derive_seed({cfg.seed, 0x646167ULL, 0}));
  Rng rng_f(derive_seed({cfg.seed, 0x646167ULL, 1}));
  TrainLog log;
  DagModel last_good = model;
  int good_step = 0;
  double acc_s = 0.0, acc_f = 0.0;
  int n = 0;
  for (int s = 1; s <= cfg.steps; ++s) {
    adam.set_lr(lr_at(cfg, s));
    const double ls = update(model, Head::success, success, process, cfg, adam, rng_s);
    if (!std::isfinite(ls)) diverged(model, last_good, s, good_step, cfg);
    const double lf = update(model, Head::failure, failure, process, cfg, adam, rng_f);
    if (!std::isfinite(lf)) diverged(model, last_good, s, good_step, cfg);
    acc_s += ls;
    acc_f += lf;
    ++n;
    if (s % cfg.log_every == 0 || s == cfg.steps) {
      log.success.push_back({s, acc_s / n});
      log.failure.push_back({s, acc_f / n});
      acc_s = acc_f = 0.0;
      n = 0;
      model.set_failure_head_trained(true);
      last_good = model;
      good_step = s;
    }
  }
  model.set_failure_head_trained(true);
  write_checkpoint(model, cfg);
  return log;
}

double evaluate_loss(const DagModel& model, Head head, const data::ChunkSet& set, std::uint64_t seed,
                     std::size_t max_rows) {
  check_set(model, set, "evaluation");
  numerics::NoGradGuard no_grad;
  const auto process = generative::Process::from(model.config().process);
  const std::size_t b = std::min(max_rows, set.size());
  std::vector<std::size_t> rows(b);
  for (std::size_t i = 0; i < b; ++i) rows[i] = i * set.size() / b;
  Batch batch = gather(set, rows);
  Rng rng(seed);
  return generative::generative_loss(generative::head_predictor(model, head, batch.cond), batch.action0,
                                     process, rng)
      .item();
}

}  // namespace afil::training
