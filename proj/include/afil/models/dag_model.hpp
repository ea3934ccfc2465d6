#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afil/numerics/tensor.hpp"

namespace afil::models {

using numerics::Tensor;

enum class Mode { diffusion, flow };
std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

enum class Head : int { success = 0, failure = 1 };

// Noise process bookkeeping carried with the network so a checkpoint alone is
// enough to sample from it.
struct ProcessConfig {
  Mode mode = Mode::diffusion;
  int n_steps = 50;  // diffusion steps, or Euler steps in flow mode
  double beta_start = 1e-4;
  double beta_end = 0.02;
  bool scale_betas_to_steps = true;

  bool operator==(const ProcessConfig&) const = default;
};

struct ModelConfig {
  std::size_t obs_dim = 0;
  std::size_t task_dim = 0;
  std::size_t action_dim = 2;
  std::size_t horizon = 8;
  std::size_t hidden_dim = 256;
  std::size_t step_embed_dim = 32;
  std::size_t head_layers = 2;  // hidden layers per head
  ProcessConfig process;

  std::size_t chunk_dim() const { return action_dim * horizon; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// A single query: one observation, a one-hot task and the noise step.
struct Conditioning {
  std::vector<double> observation;
  std::vector<double> task;
  int diffusion_step = 0;
};

// Row-aligned conditioning for a batch of queries.
struct ConditionBatch {
  Tensor observation;  // [B, obs_dim], normalized
  Tensor task;         // [B, task_dim], one-hot

  std::size_t size() const { return observation.dim(0); }
  static ConditionBatch single(const Conditioning& cond);
};

// Dual action generator: a shared trunk h = trunk(obs, task, step) feeding two
// architecturally identical heads that map (h, noisy chunk) to a noise or
// velocity prediction. Copies are deep.
class DagModel {
 public:
  DagModel(ModelConfig config, std::uint64_t seed);
  DagModel(const DagModel& other);
  DagModel& operator=(const DagModel& other);
  DagModel(DagModel&&) noexcept = default;
  DagModel& operator=(DagModel&&) noexcept = default;

  const ModelConfig& config() const { return config_; }

  // Sinusoidal step features, one row per step: [B, step_embed_dim].
  Tensor step_embedding(std::span<const int> steps) const;

  // Trunk features [B, hidden_dim].
  Tensor encode(const ConditionBatch& cond, std::span<const int> steps) const;
  Tensor encode(const Conditioning& cond) const;

  // Head output [B, chunk_dim] from precomputed trunk features.
  Tensor predict_from_features(Head head, const Tensor& features, const Tensor& noisy) const;
  Tensor predict(Head head, const Tensor& noisy, const ConditionBatch& cond,
                 std::span<const int> steps) const;

  Tensor predict_succ(const Tensor& noisy, const Conditioning& cond) const;
  Tensor predict_fail(const Tensor& noisy, const Conditioning& cond) const;

  std::vector<Tensor> trunk_parameters() const;
  std::vector<Tensor> head_parameters(Head head) const;
  std::vector<Tensor> parameters() const;  // trunk, success head, failure head
  std::size_t parameter_count() const;
  static std::size_t count(std::span<const Tensor> params);

  void reinit_head(Head head, std::uint64_t seed);
  void copy_head(Head from, Head to);

  // Set once a failure head has been fit to failure data; guided sampling
  // refuses failure-informed kinds otherwise.
  bool failure_head_trained() const { return failure_head_trained_; }
  void set_failure_head_trained(bool on) { failure_head_trained_ = on; }

  void zero_grad();

 private:
  struct Linear {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
  };
  struct HeadParams {
    std::vector<Linear> hidden;
    Linear out;
    Tensor skip;  // [chunk, chunk], linear path from the noisy chunk
  };

  void validate_batch(const ConditionBatch& cond, std::size_t rows) const;

  ModelConfig config_;
  Linear trunk_in_;
  Linear trunk_hidden_;
  std::array<HeadParams, 2> heads_;
  bool failure_head_trained_ = false;
};

std::uint64_t fingerprint(std::span<const Tensor> params);

}  // namespace afil::models
