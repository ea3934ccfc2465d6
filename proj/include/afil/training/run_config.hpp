#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afil/data/dataset.hpp"
#include "afil/envs/env.hpp"
#include "afil/models/dag_model.hpp"

namespace afil::training {

struct DataConfig {
  int demos_per_task = 600;               // expert demonstrations, one run each
  std::int64_t demo_config_offset = 100000;
  int failure_configs_per_task = 300;     // stage-1 policy rollouts for D_f
  int failure_runs = 1;
  std::int64_t failure_config_offset = 200000;
  data::SplitTargets targets;             // 0 keeps everything
  data::FailureChunks failure_chunks = data::FailureChunks::full;
};

struct StageConfig {
  int stage1_steps = 10000;
  int stage2_steps = 4000;
  int stage3_steps = 6000;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double lr_final_fraction = 0.05;
};

struct EvalConfig {
  int n_configs = 50;
  int n_runs = 3;
  std::int64_t first_config = 0;
  std::uint64_t seed = 7;
};

struct GuidanceConfig {
  double static_lambda = 0.05;
  double adaptive_alpha = 1.0;
  std::vector<double> ablation_alphas{0.5, 1.0, 2.0, 5.0};
  double cos_floor = 1e-8;
};

struct RunConfig {
  models::ModelConfig model;  // obs/task/action dims are derived from env
  envs::EnvParams env;
  std::vector<envs::TaskId> tasks{envs::TaskId::pick_place, envs::TaskId::two_object_sequence};
  DataConfig data;
  StageConfig train;
  EvalConfig eval;
  GuidanceConfig guidance;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "afil_run";

  // Fills the dimensions the env dictates and checks everything else.
  void finalize();
  void validate() const;
};

RunConfig default_run_config();

// JSON text. Missing keys keep their defaults; unknown keys are a ConfigError
// so typos do not go unnoticed.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

}  // namespace afil::training
