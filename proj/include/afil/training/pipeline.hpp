#pragma once

#include <optional>
#include <string>
#include <vector>

#include "afil/data/dataset.hpp"
#include "afil/guidance/combine.hpp"
#include "afil/harness/evaluate.hpp"
#include "afil/models/dag_model.hpp"
#include "afil/training/run_config.hpp"
#include "afil/training/train.hpp"

namespace afil::training {

inline constexpr const char* kArmSuccessOnly = "success_only";
inline constexpr const char* kArmSuccessCorrection = "success_correction";
inline constexpr const char* kArmStaticFil = "dag_static_fil";
inline constexpr const char* kArmAdaptiveFil = "dag_adaptive_fil";

struct CollectionCounts {
  std::size_t demos = 0;
  std::size_t rollouts = 0;
  std::size_t rollout_successes = 0;
  std::size_t corrected = 0;
  std::size_t uncorrectable = 0;
  std::size_t failures = 0;        // in D_f after targets
  std::size_t success_split = 0;   // |D_s| after targets
  bool corrections_replay = true;  // every corrected trajectory replays to success
  bool splits_disjoint = true;
};

// Everything the stages produce, kept so callers can inspect or reuse it.
struct PipelineState {
  models::Normalizer normalizer;  // from the demonstrations, used by every stage
  std::vector<data::Trajectory> demos;
  std::vector<data::Trajectory> rollouts;  // stage-1 policy on the failure configs
  data::Datasets datasets;                 // D_s = demos + corrected, D_f = raw failures
  std::optional<models::DagModel> stage1, stage2, stage3;
  TrainLog log1, log2, log3;
  CollectionCounts counts;
};

struct PipelineReport {
  std::string failed_stage;  // empty when every stage completed
  std::string error;
  CollectionCounts counts;
  harness::EvalResult eval;  // 4 arms x tasks summary rows

  bool ok() const { return failed_stage.empty(); }
};

std::uint64_t stage_seed(const RunConfig& config, std::uint64_t stage, std::uint64_t part = 0);

// Stage 1: expert demonstrations and the success-only policy.
void run_stage1(const RunConfig& config, PipelineState& state);
// Stage 2: stage-1 rollouts, replanning corrections, D_s / D_f, and the
// success head fine-tuned on D_s.
void run_stage2(const RunConfig& config, PipelineState& state);
// Stage 3: fresh failure head, then alternating training on D_s and D_f.
void run_stage3(const RunConfig& config, PipelineState& state);

harness::EvalPlan eval_plan(const RunConfig& config);
guidance::GuidanceSpec static_spec(const RunConfig& config);
guidance::GuidanceSpec adaptive_spec(const RunConfig& config, double alpha);

// The four comparison arms under one plan.
harness::EvalResult evaluate_arms(const RunConfig& config, const PipelineState& state);

// Adaptive guidance on the stage-3 model for every configured alpha; one
// summary row per (task, alpha).
harness::EvalResult evaluate_alpha_sweep(const RunConfig& config, const PipelineState& state);

// Runs all stages and the evaluation. A stage that throws stops the run and
// is named in the report. With write_files the config, checkpoints, datasets,
// CSVs and report.json go under config.output_dir.
PipelineReport full_pipeline(const RunConfig& config, PipelineState* state = nullptr, bool write_files = true);

std::string format_report(const PipelineReport& report);

}  // namespace afil::training
