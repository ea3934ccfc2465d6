#include "afil/training/pipeline.hpp"

#include <limits>

#include <json.hpp>

#include "afil/core/error.hpp"
#include "afil/core/rng.hpp"
#include "afil/data/dataset_io.hpp"
#include "afil/data/rollout.hpp"
#include "afil/envs/correction.hpp"
#include "afil/harness/csv.hpp"
#include "afil/models/checkpoint.hpp"

namespace afil::training {

namespace {

TrainConfig stage_train_config(const RunConfig& config, int steps, std::uint64_t seed, const std::string& label) {
  TrainConfig tc;
  tc.steps = steps;
  tc.batch_size = config.train.batch_size;
  tc.adam.lr = config.train.lr;
  tc.lr_final_fraction = config.train.lr_final_fraction;
  tc.seed = seed;
  tc.log_every = std::max(1, steps / 20);
  tc.label = label;
  return tc;
}

data::ChunkSet normalized_chunks(std::span<const data::Trajectory> trajs, const RunConfig& config,
                                 const models::Normalizer& norm, data::FailureChunks mode = data::FailureChunks::full,
                                 std::span<const data::Trajectory> context = {}) {
  auto set = data::make_chunks(trajs, config.model.horizon, mode, context);
  data::normalize(set, norm);
  return set;
}

const models::DagModel& need(const std::optional<models::DagModel>& m, const char* what) {
  if (!m) throw ContractError(std::string(what) + " has not been trained");
  return *m;
}

}  // namespace

std::uint64_t stage_seed(const RunConfig& config, std::uint64_t stage, std::uint64_t part) {
  return derive_seed({config.seed, stage, part});
}

void run_stage1(const RunConfig& config, PipelineState& state) {
  config.validate();
  state.demos.clear();
  data::ExpertPolicy expert(config.model.horizon);
  for (auto task : config.tasks) {
    auto spec = envs::TaskSpec::make(task, config.env);
    auto demos = data::collect_rollouts(expert, spec, config.data.demos_per_task, 1, stage_seed(config, 1, 1),
                                        config.data.demo_config_offset);
    for (auto& d : demos) {
      if (d.outcome != data::Outcome::success) throw DataError("expert demonstration failed");
      state.demos.push_back(std::move(d));
    }
  }
  state.counts.demos = state.demos.size();
  state.normalizer = data::compute_stats(state.demos).normalizer();
  auto set = normalized_chunks(state.demos, config, state.normalizer);
  auto tc = stage_train_config(config, config.train.stage1_steps, stage_seed(config, 1, 2), "stage1");
  state.stage1.emplace(train_success_only(set, config.model, tc, &state.log1));
}

void run_stage2(const RunConfig& config, PipelineState& state) {
  const auto& base = need(state.stage1, "stage 1 model");
  data::ModelPolicy policy(base, state.normalizer, {});
  state.rollouts.clear();
  std::vector<data::Trajectory> pool = state.demos;
  auto& counts = state.counts;
  counts.rollouts = counts.rollout_successes = counts.corrected = counts.uncorrectable = 0;
  counts.corrections_replay = true;
  for (auto task : config.tasks) {
    auto spec = envs::TaskSpec::make(task, config.env);
    auto rolls = data::collect_rollouts(policy, spec, config.data.failure_configs_per_task, config.data.failure_runs,
                                        stage_seed(config, 2, 1), config.data.failure_config_offset);
    for (auto& r : rolls) {
      ++counts.rollouts;
      if (r.outcome == data::Outcome::success) {
        ++counts.rollout_successes;
        continue;
      }
      try {
        auto fixed = envs::replan_correction(r, spec);
        if (data::replay(fixed, spec).status != envs::Status::success) counts.corrections_replay = false;
        pool.push_back(std::move(fixed));
        ++counts.corrected;
      } catch (const NoCorrection&) {
        ++counts.uncorrectable;
      }
      pool.push_back(r);
    }
    state.rollouts.insert(state.rollouts.end(), rolls.begin(), rolls.end());
  }
  auto unlimited = [](std::size_t n) { return n == 0 ? std::numeric_limits<std::size_t>::max() : n; };
  const data::SplitTargets targets{unlimited(config.data.targets.success), unlimited(config.data.targets.corrected),
                                   unlimited(config.data.targets.failure)};
  auto selected = data::select_to_targets(pool, targets);
  state.datasets = data::build_datasets(selected);
  counts.success_split = state.datasets.success.size();
  counts.failures = state.datasets.failure.size();
  counts.splits_disjoint = data::disjoint(state.datasets.success, state.datasets.failure);
  if (!counts.splits_disjoint) throw DataError("D_s and D_f share trajectories");

  models::DagModel model = base;
  if (config.train.stage2_steps > 0) {
    auto set = normalized_chunks(state.datasets.success, config, state.normalizer);
    auto tc = stage_train_config(config, config.train.stage2_steps, stage_seed(config, 2, 2), "stage2");
    state.log2 = train_head(model, models::Head::success, set, tc);
  }
  state.stage2.emplace(std::move(model));
}

void run_stage3(const RunConfig& config, PipelineState& state) {
  models::DagModel model = need(state.stage2, "stage 2 model");
  if (state.datasets.success.empty() || state.datasets.failure.empty())
    throw DataError("stage 3 needs both D_s and D_f");
  model.reinit_head(models::Head::failure, stage_seed(config, 3, 1));
  auto success = normalized_chunks(state.datasets.success, config, state.normalizer);
  auto failure = normalized_chunks(state.datasets.failure, config, state.normalizer, config.data.failure_chunks,
                                   state.datasets.success);
  if (failure.size() == 0) throw DataError("failure split (D_f) has no chunks");
  auto tc = stage_train_config(config, config.train.stage3_steps, stage_seed(config, 3, 2), "stage3");
  state.log3 = train_dag(model, success, failure, tc);
  state.stage3.emplace(std::move(model));
}

harness::EvalPlan eval_plan(const RunConfig& config) {
  return {config.tasks, config.env, config.eval.n_configs, config.eval.n_runs, config.eval.first_config,
          config.eval.seed};
}

guidance::GuidanceSpec static_spec(const RunConfig& config) {
  guidance::GuidanceSpec s;
  s.kind = guidance::GuidanceKind::static_fi;
  s.lambda = config.guidance.static_lambda;
  s.cos_floor = config.guidance.cos_floor;
  return s;
}

guidance::GuidanceSpec adaptive_spec(const RunConfig& config, double alpha) {
  guidance::GuidanceSpec s;
  s.kind = guidance::GuidanceKind::adaptive_fi;
  s.alpha = alpha;
  s.cos_floor = config.guidance.cos_floor;
  return s;
}

harness::EvalResult evaluate_arms(const RunConfig& config, const PipelineState& state) {
  const auto plan = eval_plan(config);
  struct Arm {
    const char* name;
    const models::DagModel* model;
    guidance::GuidanceSpec spec;
  };
  const Arm arms[] = {
      {kArmSuccessOnly, &need(state.stage1, "stage 1 model"), {}},
      {kArmSuccessCorrection, &need(state.stage2, "stage 2 model"), {}},
      {kArmStaticFil, &need(state.stage3, "stage 3 model"), static_spec(config)},
      {kArmAdaptiveFil, &need(state.stage3, "stage 3 model"), adaptive_spec(config, config.guidance.adaptive_alpha)},
  };
  harness::EvalResult all;
  for (const auto& arm : arms) {
    data::ModelPolicy policy(*arm.model, state.normalizer, arm.spec);
    harness::append(all, harness::evaluate(policy, arm.name, plan));
  }
  return all;
}

harness::EvalResult evaluate_alpha_sweep(const RunConfig& config, const PipelineState& state) {
  const auto& model = need(state.stage3, "stage 3 model");
  const auto plan = eval_plan(config);
  harness::EvalResult all;
  for (double alpha : config.guidance.ablation_alphas) {
    data::ModelPolicy policy(model, state.normalizer, adaptive_spec(config, alpha));
    char name[64];
    std::snprintf(name, sizeof name, "adaptive_fi_alpha_%g", alpha);
    harness::append(all, harness::evaluate(policy, name, plan));
  }
  return all;
}

std::string format_report(const PipelineReport& report) {
  const auto& c = report.counts;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : report.eval.summary)
    summary.push_back({{"task", r.task}, {"arm", r.arm}, {"success_rate_pct", r.success_rate_pct},
                       {"n_episodes", r.n_episodes}});
  nlohmann::json j{
      {"status", report.ok() ? "complete" : "partial"},
      {"failed_stage", report.failed_stage},
      {"error", report.error},
      {"counts",
       {{"demos", c.demos},
        {"rollouts", c.rollouts},
        {"rollout_successes", c.rollout_successes},
        {"corrected", c.corrected},
        {"uncorrectable", c.uncorrectable},
        {"success_split", c.success_split},
        {"failure_split", c.failures},
        {"corrections_replay", c.corrections_replay},
        {"splits_disjoint", c.splits_disjoint}}},
      {"summary", summary},
  };
  return j.dump(2) + "\n";
}

PipelineReport full_pipeline(const RunConfig& config, PipelineState* state_out, bool write_files) {
  PipelineState local;
  PipelineState& state = state_out ? *state_out : local;
  PipelineReport report;
  const auto& dir = config.output_dir;
  if (write_files) harness::write_text(dir / "config.json", format_run_config(config));

  auto stage = [&](const char* name, auto&& body) {
    if (!report.ok()) return;
    try {
      body();
    } catch (const std::exception& e) {
      report.failed_stage = name;
      report.error = e.what();
    }
  };
  stage("stage1_success_only", [&] {
    run_stage1(config, state);
    if (write_files) {
      data::save_dataset(dir / "data" / "demos.afd", state.demos);
      models::save_checkpoint(dir / "checkpoints" / "stage1.ckpt", *state.stage1, state.normalizer, "stage1");
    }
  });
  stage("stage2_failure_correction", [&] {
    run_stage2(config, state);
    if (write_files) {
      data::save_dataset(dir / "data" / "d_s.afd", state.datasets.success);
      data::save_dataset(dir / "data" / "d_f.afd", state.datasets.failure);
      models::save_checkpoint(dir / "checkpoints" / "stage2.ckpt", *state.stage2, state.normalizer, "stage2");
    }
  });
  stage("stage3_dag", [&] {
    run_stage3(config, state);
    if (write_files)
      models::save_checkpoint(dir / "checkpoints" / "stage3.ckpt", *state.stage3, state.normalizer, "stage3");
  });
  stage("evaluation", [&] {
    report.eval = evaluate_arms(config, state);
    if (write_files) {
      harness::write_text(dir / "episodes.csv", harness::format_episodes(report.eval.episodes));
      harness::write_text(dir / "summary.csv", harness::format_summary(report.eval.summary));
      harness::write_text(dir / "lambda_trace.csv", harness::format_traces(report.eval.traces));
    }
  });
  report.counts = state.counts;
  if (write_files) harness::write_text(dir / "report.json", format_report(report));
  return report;
}

}  // namespace afil::training
