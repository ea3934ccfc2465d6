#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afil/data/rollout.hpp"
#include "afil/envs/env.hpp"

namespace afil::harness {

struct EpisodeRow {
  std::string task;
  std::string arm;
  std::int64_t config_id = 0;
  int run = 0;
  std::string outcome;  // success | failure
  int steps = 0;
  double mean_lambda = 0.0;
  bool numeric_fault = false;
};

struct SummaryRow {
  std::string task;
  std::string arm;
  double success_rate_pct = 0.0;
  int n_episodes = 0;
  std::uint64_t seed = 0;
};

// Guidance scale of every sampler call of one episode, for plotting.
struct LambdaTrace {
  std::string task;
  std::string arm;
  std::int64_t config_id = 0;
  int run = 0;
  std::vector<double> lambdas;
};

struct EvalPlan {
  std::vector<envs::TaskId> tasks;
  envs::EnvParams env;
  int n_configs = 50;
  int n_runs = 3;
  std::int64_t first_config = 0;
  std::uint64_t seed = 7;
};

struct EvalResult {
  std::vector<EpisodeRow> episodes;
  std::vector<SummaryRow> summary;  // one per task, in plan order
  std::vector<LambdaTrace> traces;  // only episodes that logged a scale
};

// Rolls the policy out on configs [first_config, first_config + n_configs) x
// n_runs per task. Episode seeds depend only on (seed, task, config, run), so
// two arms evaluated with the same plan see identical episode seeds.
EvalResult evaluate(data::Policy& policy, const std::string& arm, const EvalPlan& plan);

// success_rate as count(success) / count(all) * 100 per (task, arm), in order
// of first appearance.
std::vector<SummaryRow> summarize(std::span<const EpisodeRow> episodes, std::uint64_t seed);

void append(EvalResult& into, const EvalResult& from);

}  // namespace afil::harness
