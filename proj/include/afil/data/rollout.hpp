#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afil/core/rng.hpp"
#include "afil/data/trajectory.hpp"
#include "afil/generative/sampler.hpp"
#include "afil/guidance/score_fn.hpp"
#include "afil/models/dag_model.hpp"
#include "afil/models/normalizer.hpp"

namespace afil::data {

// One episode asking for its next chunk. `state` is privileged information
// only the scripted policies read; learned policies see `observation`.
struct PolicyQuery {
  const envs::TaskSpec* spec = nullptr;
  const envs::EnvState* state = nullptr;
  std::span<const double> observation;
  Rng* rng = nullptr;
};

struct PolicyChunk {
  std::vector<double> actions;  // horizon x 3, timestep-major, env units
  bool fault = false;
  std::vector<double> lambdas;  // guidance scale per sampler call
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t horizon() const = 0;
  // One chunk per query, answered together so learned policies can batch.
  virtual std::vector<PolicyChunk> act(std::span<const PolicyQuery> queries) = 0;
};

class ExpertPolicy : public Policy {
 public:
  explicit ExpertPolicy(std::size_t horizon) : horizon_(horizon) {}
  std::size_t horizon() const override { return horizon_; }
  std::vector<PolicyChunk> act(std::span<const PolicyQuery> queries) override;

 private:
  std::size_t horizon_;
};

// Expert chunk plus independent N(0, sigma^2) noise on each motion component,
// drawn from the episode's rng.
class NoisyExpertPolicy : public Policy {
 public:
  NoisyExpertPolicy(std::size_t horizon, double sigma) : horizon_(horizon), sigma_(sigma) {}
  std::size_t horizon() const override { return horizon_; }
  std::vector<PolicyChunk> act(std::span<const PolicyQuery> queries) override;

 private:
  std::size_t horizon_;
  double sigma_;
};

// Samples chunks from a trained model under a guidance rule. Holds references
// only; the model and normalizer must outlive it.
class ModelPolicy : public Policy {
 public:
  ModelPolicy(const models::DagModel& model, const models::Normalizer& normalizer,
              guidance::GuidanceSpec spec, generative::SampleOptions options = {});
  std::size_t horizon() const override { return model_.config().horizon; }
  std::vector<PolicyChunk> act(std::span<const PolicyQuery> queries) override;

 private:
  const models::DagModel& model_;
  const models::Normalizer& normalizer_;
  guidance::GuidanceSpec spec_;
  generative::SampleOptions options_;
  generative::Process process_;
};

std::uint64_t episode_seed(std::uint64_t seed, envs::TaskId task, std::int64_t config_id, std::int64_t run);

// Runs |config_ids| x n_runs episodes in lockstep (config-major order). Each
// chunk is executed open-loop, then the episode is re-observed. An episode
// whose chunk faults ends as a failure with numeric_fault set. Deterministic
// in (policy, config ids, runs, seed).
std::vector<Trajectory> collect_rollouts(Policy& policy, const envs::TaskSpec& spec,
                                         std::span<const std::int64_t> config_ids, int n_runs,
                                         std::uint64_t seed);
std::vector<Trajectory> collect_rollouts(Policy& policy, const envs::TaskSpec& spec,
                                         std::int64_t n_configs, int n_runs, std::uint64_t seed,
                                         std::int64_t first_config = 0);

}  // namespace afil::data
