#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "afil/core/error.hpp"
#include "afil/core/rng.hpp"
#include "afil/data/dataset.hpp"
#include "afil/data/rollout.hpp"
#include "afil/generative/losses.hpp"
#include "afil/generative/schedule.hpp"
#include "afil/harness/csv.hpp"
#include "afil/models/checkpoint.hpp"
#include "afil/numerics/ops.hpp"
#include "afil/training/pipeline.hpp"
#include "afil/training/run_config.hpp"
#include "afil/training/train.hpp"

using namespace afil;
using namespace afil::training;
using models::Head;

namespace {

models::ModelConfig small_model(models::Mode mode, std::size_t obs = 16, std::size_t act = 3, std::size_t h = 4) {
  models::ModelConfig c;
  c.obs_dim = obs;
  c.task_dim = 3;
  c.action_dim = act;
  c.horizon = h;
  c.hidden_dim = 32;
  c.step_embed_dim = 8;
  c.process.mode = mode;
  c.process.n_steps = 10;
  return c;
}

// Normalized chunks from expert (success) and noisy-expert failures on
// pick_place, the standard small toy dataset.
struct ToyData {
  data::ChunkSet success, failure;
  models::Normalizer norm;
};

const ToyData& toy() {
  static const ToyData d = [] {
    auto spec = envs::TaskSpec::make(envs::TaskId::pick_place);
    data::ExpertPolicy expert(4);
    data::NoisyExpertPolicy noisy(4, 0.04);
    auto demos = data::collect_rollouts(expert, spec, 40, 1, 1, 1000);
    auto rolls = data::collect_rollouts(noisy, spec, 40, 1, 2, 2000);
    std::vector<data::Trajectory> all = demos;
    for (auto& r : rolls)
      if (r.outcome == data::Outcome::failure) all.push_back(r);
    auto sets = data::build_datasets(all);
    ToyData out;
    out.norm = sets.stats.normalizer();
    out.success = data::make_chunks(sets.success, 4);
    out.failure = data::make_chunks(sets.failure, 4);
    data::normalize(out.success, out.norm);
    data::normalize(out.failure, out.norm);
    return out;
  }();
  return d;
}

TrainConfig quick(int steps, std::uint64_t seed) {
  TrainConfig tc;
  tc.steps = steps;
  tc.batch_size = 64;
  tc.seed = seed;
  tc.log_every = std::max(1, steps / 10);
  return tc;
}

data::ChunkSet single_pair() {
  data::ChunkSet s;
  s.obs_dim = 3;
  s.task_dim = 3;
  s.chunk_dim = 4;
  s.obs = {0.5, -0.2, 0.1};
  s.task = {0, 1, 0};
  s.chunk = {0.3, -0.6, 0.8, 0.1};
  return s;
}

}  // namespace

TEST_CASE("a single pair is fit to near-zero loss within 2000 steps") {
  for (auto mode : {models::Mode::diffusion, models::Mode::flow}) {
    auto set = single_pair();
    auto cfg = small_model(mode, 3, 2, 2);
    cfg.hidden_dim = 64;
    auto tc = quick(2000, 3);
    tc.lr_final_fraction = 0.05;
    TrainLog log;
    auto model = train_success_only(set, cfg, tc, &log);
    REQUIRE(!log.success.empty());
    CHECK(log.success.back().step == 2000);
    CHECK(log.success.back().loss < 1e-2);
    data::ChunkSet replicas = set;
    for (int k = 0; k < 511; ++k) replicas.append(set);
    CHECK(evaluate_loss(model, Head::success, replicas, 17) < 1e-2);
  }
}

TEST_CASE("success-only training lowers the loss and leaves the failure head alone") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto cfg = small_model(models::Mode::flow);
    models::DagModel fresh(cfg, seed);
    const auto before = models::fingerprint(fresh.head_parameters(Head::failure));
    const double initial = evaluate_loss(fresh, Head::success, toy().success, 5);
    TrainLog log;
    auto model = train_success_only(toy().success, cfg, quick(400, seed), &log);
    CHECK(evaluate_loss(model, Head::success, toy().success, 5) < initial);
    CHECK(log.success.back().loss < log.success.front().loss);
    CHECK(models::fingerprint(model.head_parameters(Head::failure)) == before);
    CHECK_FALSE(model.failure_head_trained());
  }
}

TEST_CASE("train_dag lowers both losses over 500 steps") {
  for (std::uint64_t seed : {1, 2, 3}) {
    models::DagModel model(small_model(models::Mode::flow), seed);
    const double s0 = evaluate_loss(model, Head::success, toy().success, 9);
    const double f0 = evaluate_loss(model, Head::failure, toy().failure, 9);
    auto log = train_dag(model, toy().success, toy().failure, quick(500, seed));
    CHECK(log.success.size() == log.failure.size());
    CHECK(evaluate_loss(model, Head::success, toy().success, 9) < s0);
    CHECK(evaluate_loss(model, Head::failure, toy().failure, 9) < f0);
    CHECK(log.success.back().loss < log.success.front().loss);
    CHECK(log.failure.back().loss < log.failure.front().loss);
    CHECK(model.failure_head_trained());
  }
}

namespace {

// Deterministic supervision: chunk = fixed linear map of a 3-d observation.
data::ChunkSet linear_chunks(int rows, std::uint64_t seed) {
  data::ChunkSet set;
  set.obs_dim = 3;
  set.task_dim = 3;
  set.chunk_dim = 4;
  Rng rng(seed);
  const double map[4][3] = {{0.5, -0.3, 0.2}, {0.1, 0.4, -0.6}, {-0.2, 0.2, 0.3}, {0.6, 0.0, -0.1}};
  for (int r = 0; r < rows; ++r) {
    double o[3];
    for (auto& v : o) v = rng.uniform(-1, 1);
    set.obs.insert(set.obs.end(), o, o + 3);
    set.task.insert(set.task.end(), {0, 1, 0});
    for (const auto& row : map) set.chunk.push_back(row[0] * o[0] + row[1] * o[1] + row[2] * o[2]);
  }
  return set;
}

// Mean |success - failure| head output over `set`, at noisy inputs drawn the
// way training draws them.
double head_gap(const models::DagModel& model, const data::ChunkSet& set, std::uint64_t seed) {
  const auto& cfg = model.config();
  const std::size_t b = set.size(), d = set.chunk_dim;
  Rng rng(seed);
  std::vector<int> steps(b);
  for (auto& s : steps) s = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.process.n_steps)));
  std::vector<double> noise(b * d);
  for (auto& v : noise) v = rng.normal();
  const auto a0 = numerics::Tensor::from({b, d}, set.chunk);
  const auto nz = numerics::Tensor::from({b, d}, noise);
  const auto process = generative::Process::from(cfg.process);
  const auto x = cfg.process.mode == models::Mode::flow ? generative::flow_interpolate(a0, steps, nz, process.flow)
                                                        : generative::q_sample(a0, steps, nz, process.schedule);
  models::ConditionBatch cond{numerics::Tensor::from({b, set.obs_dim}, set.obs),
                              numerics::Tensor::from({b, set.task_dim}, set.task)};
  numerics::NoGradGuard guard;
  const auto ps = model.predict(Head::success, x, cond, steps);
  const auto pf = model.predict(Head::failure, x, cond, steps);
  double gap = 0.0;
  for (std::size_t i = 0; i < ps.numel(); ++i) gap += std::fabs(ps[i] - pf[i]);
  return gap / static_cast<double>(ps.numel());
}

}  // namespace

TEST_CASE("identical supervision makes the heads agree on held-out conditions") {
  const auto train = linear_chunks(1600, 12);
  const auto held = linear_chunks(400, 13);
  for (auto mode : {models::Mode::diffusion, models::Mode::flow}) {
    models::DagModel model(small_model(mode, 3, 2, 2), 4);
    const double before = head_gap(model, held, 99);
    auto tc = quick(3000, 4);
    tc.lr_final_fraction = 0.01;
    train_dag(model, train, train, tc);  // D_f is a clone of D_s
    const double after = head_gap(model, held, 99);
    CHECK(before == 0.0);  // zero-initialized output layers
    CHECK(after < 0.05);
  }
}

TEST_CASE("alternating updates keep each head isolated per step") {
  models::DagModel model(small_model(models::Mode::diffusion), 5);
  auto tc = quick(1, 5);
  auto fp_f = models::fingerprint(model.head_parameters(Head::failure));
  train_head(model, Head::success, toy().success, tc);
  CHECK(models::fingerprint(model.head_parameters(Head::failure)) == fp_f);
  auto fp_s = models::fingerprint(model.head_parameters(Head::success));
  train_head(model, Head::failure, toy().failure, tc);
  CHECK(models::fingerprint(model.head_parameters(Head::success)) == fp_s);
  CHECK(models::fingerprint(model.head_parameters(Head::failure)) != fp_f);
}

TEST_CASE("freezing the trunk keeps it bitwise constant") {
  models::DagModel model(small_model(models::Mode::flow), 6);
  const auto trunk = models::fingerprint(model.trunk_parameters());
  const auto head = models::fingerprint(model.head_parameters(Head::success));
  auto tc = quick(200, 6);
  tc.freeze_trunk = true;
  train_dag(model, toy().success, toy().failure, tc);
  CHECK(models::fingerprint(model.trunk_parameters()) == trunk);
  CHECK(models::fingerprint(model.head_parameters(Head::success)) != head);
}

TEST_CASE("same seed and config give bitwise identical checkpoints") {
  auto dir = std::filesystem::temp_directory_path() / "afil_test_ckpt";
  std::filesystem::create_directories(dir);
  std::string bytes[2];
  for (int k = 0; k < 2; ++k) {
    auto tc = quick(150, 8);
    tc.checkpoint_path = dir / ("run" + std::to_string(k) + ".ckpt");
    tc.normalizer = toy().norm;
    train_success_only(toy().success, small_model(models::Mode::diffusion), tc);
    auto ck = models::load_checkpoint(tc.checkpoint_path);
    bytes[k] = models::serialize_checkpoint(ck.model, ck.normalizer, ck.label);
    CHECK(ck.normalizer == toy().norm);
  }
  CHECK(bytes[0] == bytes[1]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("divergence restores the last good model and reports it") {
  auto dir = std::filesystem::temp_directory_path() / "afil_test_diverge";
  std::filesystem::create_directories(dir);
  // One poisoned row: the loss turns infinite as soon as a batch draws it.
  auto set = toy().success;
  set.chunk[0] = 1e300;
  models::DagModel model(small_model(models::Mode::flow), 9);
  auto tc = quick(2000, 9);
  tc.log_every = 1;
  tc.checkpoint_path = dir / "last_good.ckpt";
  std::string message;
  try {
    train_head(model, Head::success, set, tc);
  } catch (const TrainingError& e) {
    message = e.what();
  }
  REQUIRE(message.find("diverged") != std::string::npos);
  auto ck = models::load_checkpoint(tc.checkpoint_path);
  CHECK(models::fingerprint(ck.model.parameters()) == models::fingerprint(model.parameters()));
  for (const auto& p : model.parameters())
    for (double v : p.data()) REQUIRE(std::isfinite(v));
  std::filesystem::remove_all(dir);
}

TEST_CASE("training input validation") {
  models::DagModel model(small_model(models::Mode::flow), 1);
  data::ChunkSet empty;
  empty.obs_dim = 16;
  empty.task_dim = 3;
  empty.chunk_dim = 12;
  CHECK_THROWS_AS(train_head(model, Head::success, empty, quick(10, 1)), ContractError);
  CHECK_THROWS_AS(train_head(model, Head::success, single_pair(), quick(10, 1)), ShapeError);
  auto bad = quick(10, 1);
  bad.batch_size = 0;
  CHECK_THROWS_AS(train_head(model, Head::success, toy().success, bad), ConfigError);
  bad = quick(10, 1);
  bad.lr_final_fraction = 0.0;
  CHECK_THROWS_AS(train_head(model, Head::success, toy().success, bad), ConfigError);
}

TEST_CASE("run config round-trips and rejects unknown keys") {
  auto c = default_run_config();
  c.seed = 42;
  c.guidance.ablation_alphas = {0.25, 4.0};
  c.data.failure_chunks = data::FailureChunks::post_divergence;
  c.tasks = {envs::TaskId::reach};
  auto back = parse_run_config(format_run_config(c));
  CHECK(format_run_config(back) == format_run_config(c));
  CHECK(back.model == c.model);
  CHECK(back.env == c.env);
  CHECK(back.seed == 42);
  CHECK(back.model.obs_dim == envs::observation_dim(back.env));

  CHECK_NOTHROW(parse_run_config("{}"));
  CHECK_THROWS_AS(parse_run_config(R"({"sed": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"hiden_dim": 8}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"mode": "gan"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"tasks": ["stack"]})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"lr": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"lr": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
  auto env = parse_run_config(R"({"env": {"n_traps": 3}})");
  CHECK(env.model.obs_dim == envs::observation_dim(env.env));
}

namespace {
RunConfig tiny_pipeline_config(const std::filesystem::path& dir) {
  auto c = default_run_config();
  c.model.hidden_dim = 32;
  c.model.step_embed_dim = 8;
  c.data.demos_per_task = 30;
  c.data.failure_configs_per_task = 20;
  c.train.stage1_steps = 60;
  c.train.stage2_steps = 30;
  c.train.stage3_steps = 30;
  c.train.batch_size = 32;
  c.eval.n_configs = 4;
  c.eval.n_runs = 2;
  c.output_dir = dir;
  c.finalize();
  return c;
}
}  // namespace

TEST_CASE("full pipeline reports four arms per task and is reproducible") {
  auto dir = std::filesystem::temp_directory_path() / "afil_test_pipeline";
  std::filesystem::remove_all(dir);
  auto c = tiny_pipeline_config(dir);
  PipelineState state;
  auto report = full_pipeline(c, &state);
  REQUIRE_MESSAGE(report.ok(), report.error);
  CHECK(report.eval.summary.size() == 4 * c.tasks.size());
  CHECK(report.eval.episodes.size() == 4 * c.tasks.size() * 8);
  CHECK(report.counts.demos == 60);
  CHECK(report.counts.rollouts == 40);
  CHECK(report.counts.corrections_replay);
  CHECK(report.counts.splits_disjoint);
  CHECK(data::disjoint(state.datasets.success, state.datasets.failure));
  for (const char* f : {"summary.csv", "episodes.csv", "lambda_trace.csv", "report.json", "config.json",
                        "checkpoints/stage1.ckpt", "checkpoints/stage2.ckpt", "checkpoints/stage3.ckpt",
                        "data/demos.afd", "data/d_s.afd", "data/d_f.afd"})
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
  // Stage 3 starts from stage 2 with a fresh failure head; stage 1 is kept.
  CHECK(state.stage3->failure_head_trained());
  CHECK_FALSE(state.stage1->failure_head_trained());

  auto again = full_pipeline(c, nullptr, false);
  REQUIRE(again.ok());
  CHECK(harness::format_summary(again.eval.summary) == harness::format_summary(report.eval.summary));
  CHECK(harness::format_episodes(again.eval.episodes) == harness::format_episodes(report.eval.episodes));
  std::filesystem::remove_all(dir);
}

TEST_CASE("a failing stage yields a partial report naming it") {
  auto dir = std::filesystem::temp_directory_path() / "afil_test_pipeline_fail";
  std::filesystem::remove_all(dir);
  auto c = tiny_pipeline_config(dir);
  c.env.max_reset_attempts = 1;  // most demo configs cannot be sampled
  auto report = full_pipeline(c, nullptr, true);
  CHECK_FALSE(report.ok());
  CHECK(report.failed_stage == "stage1_success_only");
  CHECK(report.error.find("could not sample") != std::string::npos);
  CHECK(report.eval.summary.empty());
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "summary.csv"));
  CHECK(harness::read_text(dir / "report.json").find("\"partial\"") != std::string::npos);
  std::filesystem::remove_all(dir);
}
