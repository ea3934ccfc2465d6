#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "afil/core/error.hpp"
#include "afil/data/dataset_io.hpp"
#include "afil/data/rollout.hpp"
#include "afil/harness/commands.hpp"
#include "afil/harness/csv.hpp"
#include "afil/harness/evaluate.hpp"
#include "afil/models/checkpoint.hpp"
#include "afil/training/pipeline.hpp"
#include "afil/training/run_config.hpp"
#include "afil/training/train.hpp"

using namespace afil;
using namespace afil::harness;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "afil");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("afil_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

training::RunConfig tiny_config(const fs::path& out) {
  auto c = training::default_run_config();
  c.model.hidden_dim = 32;
  c.model.step_embed_dim = 8;
  c.data.demos_per_task = 20;
  c.data.failure_configs_per_task = 15;
  c.train.stage1_steps = 40;
  c.train.stage2_steps = 20;
  c.train.stage3_steps = 20;
  c.train.batch_size = 32;
  c.eval.n_configs = 3;
  c.eval.n_runs = 2;
  c.tasks = {envs::TaskId::pick_place};
  c.output_dir = out;
  c.finalize();
  return c;
}

// A small DAG checkpoint with a trained failure head.
const fs::path& dag_checkpoint() {
  static const fs::path path = [] {
    auto dir = scratch("ckpt");
    auto spec = envs::TaskSpec::make(envs::TaskId::pick_place);
    data::ExpertPolicy expert(4);
    data::NoisyExpertPolicy noisy(4, 0.04);
    auto all = data::collect_rollouts(expert, spec, 20, 1, 1, 1000);
    for (auto& t : data::collect_rollouts(noisy, spec, 20, 1, 2, 2000))
      if (t.outcome == data::Outcome::failure) all.push_back(t);
    auto sets = data::build_datasets(all);
    auto norm = sets.stats.normalizer();
    auto s = data::make_chunks(sets.success, 4), f = data::make_chunks(sets.failure, 4);
    data::normalize(s, norm);
    data::normalize(f, norm);
    auto cfg = tiny_config(dir).model;
    training::TrainConfig tc;
    tc.steps = 60;
    tc.batch_size = 32;
    models::DagModel model(cfg, 1);
    training::train_dag(model, s, f, tc);
    auto p = dir / "dag.ckpt";
    models::save_checkpoint(p, model, norm, "test");
    return p;
  }();
  return path;
}

std::string write_config(const fs::path& dir, const training::RunConfig& c) {
  auto p = dir / "config.json";
  write_text(p, training::format_run_config(c));
  return p.string();
}

}  // namespace

TEST_CASE("unknown subcommand exits 2 with usage") {
  auto r = cli({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("expert eval over 50 x 3 writes 150 rows and a 100% summary row") {
  auto dir = scratch("expert_eval");
  auto r = cli({"eval", "--expert", "--tasks", "pick_place", "--n-configs", "50", "--n-runs", "3", "--out",
                (dir / "out").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  auto episodes = parse_episodes(read_text(dir / "out" / "episodes.csv"));
  auto summary = parse_summary(read_text(dir / "out" / "summary.csv"));
  CHECK(episodes.size() == 150);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].success_rate_pct == 100.0);
  CHECK(summary[0].n_episodes == 150);
  for (const auto& e : episodes) CHECK(e.outcome == "success");
  fs::remove_all(dir);
}

TEST_CASE("eval leaves the checkpoint untouched and its summary matches a recount") {
  auto dir = scratch("model_eval");
  const auto before = read_text(dag_checkpoint());
  auto r = cli({"eval", "--checkpoint", dag_checkpoint().string(), "--guidance", "adaptive_fi", "--alpha", "1",
                "--n-configs", "5", "--n-runs", "2", "--tasks", "pick_place", "two_object_sequence", "--arm",
                "adaptive", "--out", (dir / "a").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(read_text(dag_checkpoint()) == before);

  auto episodes = parse_episodes(read_text(dir / "a" / "episodes.csv"));
  auto summary = parse_summary(read_text(dir / "a" / "summary.csv"));
  REQUIRE(episodes.size() == 20);
  REQUIRE(summary.size() == 2);
  std::map<std::string, std::pair<int, int>> recount;
  for (const auto& e : episodes) {
    CHECK(e.outcome != "corrected");
    recount[e.task].first += e.outcome == "success";
    recount[e.task].second += 1;
    CHECK(e.mean_lambda >= 0.0);
    CHECK(e.mean_lambda <= 2.0);
  }
  for (const auto& s : summary) {
    CHECK(s.arm == "adaptive");
    CHECK(s.n_episodes == recount[s.task].second);
    CHECK(s.success_rate_pct == 100.0 * recount[s.task].first / recount[s.task].second);
  }
  auto traces = read_text(dir / "a" / "lambda_trace.csv");
  CHECK(traces.rfind("task,arm,config_id,run,call,lambda\n", 0) == 0);
  CHECK(std::count(traces.begin(), traces.end(), '\n') > 20);
  fs::remove_all(dir);
}

TEST_CASE("arms evaluated with one plan see the same config and run pairs") {
  auto dir = scratch("paired");
  for (const char* kind : {"none", "static_fi"}) {
    auto r = cli({"eval", "--checkpoint", dag_checkpoint().string(), "--guidance", kind, "--lambda", "0.5",
                  "--n-configs", "4", "--n-runs", "3", "--tasks", "pick_place", "--out", (dir / kind).string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  }
  auto a = parse_episodes(read_text(dir / "none" / "episodes.csv"));
  auto b = parse_episodes(read_text(dir / "static_fi" / "episodes.csv"));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].config_id == b[i].config_id);
    CHECK(a[i].run == b[i].run);
  }
  fs::remove_all(dir);
}

TEST_CASE("zero-strength arms reproduce the unguided rollouts bit for bit") {
  auto ck = models::load_checkpoint(dag_checkpoint());
  auto spec = envs::TaskSpec::make(envs::TaskId::pick_place);
  data::ModelPolicy plain(ck.model, ck.normalizer, {});
  auto ref = data::collect_rollouts(plain, spec, 6, 2, 5);
  guidance::GuidanceSpec zero_static{guidance::GuidanceKind::static_fi, 0.0, 0.0};
  guidance::GuidanceSpec zero_adaptive{guidance::GuidanceKind::adaptive_fi, 0.0, 0.0};
  for (const auto& g : {zero_static, zero_adaptive}) {
    data::ModelPolicy policy(ck.model, ck.normalizer, g);
    auto got = data::collect_rollouts(policy, spec, 6, 2, 5);
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].steps == ref[i].steps);
      CHECK(got[i].outcome == ref[i].outcome);
    }
  }
}

TEST_CASE("ablate over four alphas writes four summary rows") {
  auto dir = scratch("ablate");
  auto c = tiny_config(dir / "run");
  auto cfg = write_config(dir, c);
  auto r = cli({"ablate", "--config", cfg, "--checkpoint", dag_checkpoint().string(), "--values", "0.5", "1", "2",
                "5", "--n-configs", "3", "--n-runs", "1", "--out", (dir / "abl").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  auto rows = parse_summary(read_text(dir / "abl" / "ablation.csv"));
  REQUIRE(rows.size() == 4);
  std::set<std::string> arms;
  for (const auto& row : rows) arms.insert(row.arm);
  CHECK(arms == std::set<std::string>{"adaptive_fi_alpha_0.5", "adaptive_fi_alpha_1", "adaptive_fi_alpha_2",
                                      "adaptive_fi_alpha_5"});
  fs::remove_all(dir);
}

TEST_CASE("bad flags or config exit non-zero and write nothing") {
  auto dir = scratch("bad");
  auto out = dir / "never";
  CHECK(cli({"eval", "--checkpoint", dag_checkpoint().string(), "--guidance", "bogus", "--out", out.string()}).code ==
        kExitUsage);
  CHECK(cli({"eval", "--checkpoint", dag_checkpoint().string(), "--guidance", "static_fi", "--lambda", "-1", "--out",
             out.string()})
            .code == kExitUsage);
  CHECK(cli({"eval", "--out", out.string()}).code == kExitUsage);
  CHECK(cli({"eval", "--expert", "--n-configs", "0", "--out", out.string()}).code == kExitUsage);
  CHECK(cli({"train"}).code == kExitUsage);
  CHECK(cli({"train", "--config", (dir / "missing.json").string()}).code == kExitUsage);
  write_text(dir / "typo.json", R"({"trian": {}})");
  CHECK(cli({"train", "--config", (dir / "typo.json").string()}).code == kExitUsage);
  CHECK(cli({"ablate", "--config", (dir / "typo.json").string()}).code == kExitUsage);
  CHECK_FALSE(fs::exists(out));
  fs::remove_all(dir);
}

TEST_CASE("train stages, collect and report through the CLI") {
  auto dir = scratch("stages");
  auto c = tiny_config(dir / "run");
  auto cfg = write_config(dir, c);
  for (const char* stage : {"1", "2", "3"}) {
    auto r = cli({"train", "--config", cfg, "--stage", stage});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  }
  auto ck = models::load_checkpoint(dir / "run" / "checkpoints" / "stage3.ckpt");
  CHECK(ck.model.failure_head_trained());
  CHECK(ck.label == "stage3");

  // The staged run reproduces the one-shot pipeline's stage-3 checkpoint.
  auto one_shot = c;
  one_shot.output_dir = dir / "all";
  auto r = cli({"train", "--config", write_config(dir / "all_cfg", one_shot)});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(read_text(dir / "all" / "checkpoints" / "stage3.ckpt") == read_text(dir / "run" / "checkpoints" / "stage3.ckpt"));
  CHECK(parse_summary(read_text(dir / "all" / "summary.csv")).size() == 4);

  r = cli({"collect", "--config", cfg, "--policy", "noisy_expert", "--sigma", "0.04", "--n-configs", "7", "--n-runs",
           "2", "--out", (dir / "noisy.afd").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(data::load_dataset(dir / "noisy.afd").size() == 14);

  r = cli({"report", "--input", (dir / "all").string(), "--out", (dir / "rep").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(read_text(dir / "rep" / "summary.csv") == read_text(dir / "all" / "summary.csv"));
  CHECK(fs::exists(dir / "rep" / "lambda_trace.csv"));
  fs::remove_all(dir);
}

TEST_CASE("relative outputs land under AFIL_OUTPUT_ROOT") {
  auto dir = scratch("root");
  ::setenv("AFIL_OUTPUT_ROOT", dir.c_str(), 1);
  auto r = cli({"eval", "--expert", "--tasks", "reach", "--n-configs", "2", "--n-runs", "1", "--out", "rel"});
  ::unsetenv("AFIL_OUTPUT_ROOT");
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(fs::exists(dir / "rel" / "summary.csv"));
  CHECK(output_path("/abs/path") == fs::path("/abs/path"));
  fs::remove_all(dir);
}

TEST_CASE("csv round-trips and rejects malformed input") {
  std::vector<EpisodeRow> eps{{"pick_place", "a", 3, 1, "success", 27, 0.125, false},
                              {"pick_place", "a", 4, 0, "failure", 120, 0.1 + 0.2, false}};
  auto back = parse_episodes(format_episodes(eps));
  REQUIRE(back.size() == 2);
  CHECK(back[1].mean_lambda == 0.1 + 0.2);
  CHECK(back[0].steps == 27);
  auto summary = summarize(eps, 9);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].success_rate_pct == 50.0);
  CHECK(parse_summary(format_summary(summary)).front().seed == 9);
  CHECK_THROWS_AS(parse_episodes("wrong,header\n"), ParseError);
  CHECK_THROWS_AS(parse_episodes(format_episodes(eps) + "x,y\n"), ParseError);
  CHECK_THROWS_AS(parse_episodes(format_episodes(eps) + "t,a,1,0,corrected,3,0\n"), ParseError);
}
