#include "afil/harness/commands.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "afil/core/error.hpp"
#include "afil/data/dataset_io.hpp"
#include "afil/data/rollout.hpp"
#include "afil/harness/csv.hpp"
#include "afil/harness/evaluate.hpp"
#include "afil/models/checkpoint.hpp"
#include "afil/training/pipeline.hpp"

namespace afil::harness {

namespace fs = std::filesystem;

fs::path output_path(const fs::path& path) {
  const char* root = std::getenv("AFIL_OUTPUT_ROOT");
  if (path.is_relative() && root && *root) return fs::path(root) / path;
  return path;
}

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::vector<envs::TaskId> parse_tasks(const std::vector<std::string>& names) {
  std::vector<envs::TaskId> tasks;
  for (const auto& n : names) tasks.push_back(envs::parse_task(n));
  return tasks;
}

training::RunConfig config_or_default(const std::string& path) {
  if (path.empty()) return training::default_run_config();
  auto c = training::load_run_config(path);
  c.output_dir = output_path(c.output_dir);
  return c;
}

struct EvalOptions {
  std::vector<std::string> tasks;
  int n_configs = -1, n_runs = -1;
  std::int64_t first_config = -1;
  long long seed = -1;

  void add(CLI::App* app) {
    app->add_option("--tasks", tasks, "tasks to evaluate");
    app->add_option("--n-configs", n_configs, "configs per task")->check(CLI::PositiveNumber);
    app->add_option("--n-runs", n_runs, "runs per config")->check(CLI::PositiveNumber);
    app->add_option("--first-config", first_config, "first config id")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", seed, "evaluation seed")->check(CLI::NonNegativeNumber);
  }
  EvalPlan plan(const training::RunConfig& c) const {
    auto p = training::eval_plan(c);
    if (!tasks.empty()) p.tasks = parse_tasks(tasks);
    if (n_configs > 0) p.n_configs = n_configs;
    if (n_runs > 0) p.n_runs = n_runs;
    if (first_config >= 0) p.first_config = first_config;
    if (seed >= 0) p.seed = static_cast<std::uint64_t>(seed);
    return p;
  }
};

void write_eval(const fs::path& dir, const EvalResult& r, const std::string& summary_name = "summary.csv") {
  write_text(dir / "episodes.csv", format_episodes(r.episodes));
  write_text(dir / summary_name, format_summary(r.summary));
  write_text(dir / "lambda_trace.csv", format_traces(r.traces));
}

void print_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-22s %-26s %6.1f%%  (%d episodes)\n", r.task.c_str(), r.arm.c_str(),
                  r.success_rate_pct, r.n_episodes);
    out << line;
  }
}

void load_checkpoint_into(const fs::path& path, training::PipelineState& st, int stage) {
  auto ck = models::load_checkpoint(path);
  st.normalizer = ck.normalizer;
  if (stage == 1) st.stage1.emplace(std::move(ck.model));
  if (stage == 2) st.stage2.emplace(std::move(ck.model));
}

int cmd_train(const std::string& config_path, const std::string& stage, std::ostream& out) {
  auto c = config_or_default(config_path);
  const auto& dir = c.output_dir;
  if (stage == "all") {
    auto report = training::full_pipeline(c);
    print_summary(out, report.eval.summary);
    if (!report.ok()) {
      out << "stopped in " << report.failed_stage << ": " << report.error << "\n";
      return kExitFailure;
    }
    return kExitOk;
  }
  training::PipelineState st;
  if (stage == "1") {
    training::run_stage1(c, st);
    data::save_dataset(dir / "data" / "demos.afd", st.demos);
    models::save_checkpoint(dir / "checkpoints" / "stage1.ckpt", *st.stage1, st.normalizer, "stage1");
  } else if (stage == "2") {
    st.demos = data::load_dataset(dir / "data" / "demos.afd");
    load_checkpoint_into(dir / "checkpoints" / "stage1.ckpt", st, 1);
    training::run_stage2(c, st);
    data::save_dataset(dir / "data" / "d_s.afd", st.datasets.success);
    data::save_dataset(dir / "data" / "d_f.afd", st.datasets.failure);
    models::save_checkpoint(dir / "checkpoints" / "stage2.ckpt", *st.stage2, st.normalizer, "stage2");
  } else {
    st.datasets.success = data::load_dataset(dir / "data" / "d_s.afd");
    st.datasets.failure = data::load_dataset(dir / "data" / "d_f.afd");
    load_checkpoint_into(dir / "checkpoints" / "stage2.ckpt", st, 2);
    training::run_stage3(c, st);
    models::save_checkpoint(dir / "checkpoints" / "stage3.ckpt", *st.stage3, st.normalizer, "stage3");
  }
  out << "stage " << stage << " written under " << dir.string() << "\n";
  return kExitOk;
}

guidance::GuidanceSpec guidance_from_flags(const std::string& kind, double lambda, double alpha) {
  guidance::GuidanceSpec s;
  s.kind = guidance::parse_kind(kind);
  s.lambda = lambda;
  s.alpha = alpha;
  s.validate();
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"afil: dual success/failure action generators with failure-informed guidance"};
  app.require_subcommand(1);

  std::string config_path, stage = "all";
  auto* train = app.add_subcommand("train", "run the training pipeline or one stage of it");
  train->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--stage", stage, "all | 1 | 2 | 3")->check(CLI::IsMember({"all", "1", "2", "3"}));

  std::string collect_policy = "expert", collect_ckpt, collect_out, collect_task = "pick_place";
  std::string collect_config;
  int collect_configs = 50, collect_runs = 1;
  std::int64_t collect_first = 0;
  long long collect_seed = 0;
  double sigma = 0.04;
  auto* collect = app.add_subcommand("collect", "roll out a policy and write a dataset file");
  collect->add_option("--config", collect_config, "run config for env parameters")->check(CLI::ExistingFile);
  collect->add_option("--policy", collect_policy, "expert | noisy_expert | checkpoint")
      ->check(CLI::IsMember({"expert", "noisy_expert", "checkpoint"}));
  collect->add_option("--checkpoint", collect_ckpt, "model for --policy checkpoint")->check(CLI::ExistingFile);
  collect->add_option("--sigma", sigma, "action noise for noisy_expert")->check(CLI::NonNegativeNumber);
  collect->add_option("--task", collect_task, "task name");
  collect->add_option("--n-configs", collect_configs, "configs")->check(CLI::PositiveNumber);
  collect->add_option("--n-runs", collect_runs, "runs per config")->check(CLI::PositiveNumber);
  collect->add_option("--first-config", collect_first, "first config id")->check(CLI::NonNegativeNumber);
  collect->add_option("--seed", collect_seed, "rollout seed")->check(CLI::NonNegativeNumber);
  collect->add_option("--out", collect_out, "dataset file")->required();

  std::string eval_config, eval_ckpt, eval_kind = "none", eval_arm, eval_out;
  double eval_lambda = 0.0, eval_alpha = 0.0;
  bool eval_expert = false;
  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "score one checkpoint under one guidance rule");
  eval->add_option("--config", eval_config, "run config for env and defaults")->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->check(CLI::ExistingFile);
  eval->add_flag("--expert", eval_expert, "evaluate the scripted expert instead of a checkpoint");
  eval->add_option("--guidance", eval_kind, "none | cfg | np | static_fi | adaptive_fi");
  eval->add_option("--lambda", eval_lambda, "guidance scale for cfg, np, static_fi");
  eval->add_option("--alpha", eval_alpha, "adaptive scale");
  eval->add_option("--arm", eval_arm, "arm label in the CSVs");
  eval->add_option("--out", eval_out, "output directory")->required();
  eval_opts.add(eval);

  std::string ablate_config, ablate_ckpt, ablate_param = "alpha", ablate_out;
  std::vector<double> ablate_values;
  EvalOptions ablate_opts;
  auto* ablate = app.add_subcommand("ablate", "sweep the adaptive alpha or the static lambda");
  ablate->add_option("--config", ablate_config, "run config")->required()->check(CLI::ExistingFile);
  ablate->add_option("--checkpoint", ablate_ckpt, "stage-3 checkpoint (default: from the config's output dir)")
      ->check(CLI::ExistingFile);
  ablate->add_option("--param", ablate_param, "alpha | lambda")->check(CLI::IsMember({"alpha", "lambda"}));
  ablate->add_option("--values", ablate_values, "values (default: the config's ablation alphas)");
  ablate->add_option("--out", ablate_out, "output directory (default: <output_dir>/ablation)");
  ablate_opts.add(ablate);

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "aggregate episode CSVs into a summary and lambda traces");
  report->add_option("--input", report_inputs, "directories holding episodes.csv")->required();
  report->add_option("--out", report_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  // Everything a command needs is validated before its first write.
  try {
    if (*train) return cmd_train(config_path, stage, out);

    if (*collect) {
      auto c = config_or_default(collect_config);
      auto spec = envs::TaskSpec::make(envs::parse_task(collect_task), c.env);
      std::unique_ptr<data::Policy> policy;
      std::optional<models::Checkpoint> ck;
      if (collect_policy == "expert") {
        policy = std::make_unique<data::ExpertPolicy>(c.model.horizon);
      } else if (collect_policy == "noisy_expert") {
        policy = std::make_unique<data::NoisyExpertPolicy>(c.model.horizon, sigma);
      } else {
        if (collect_ckpt.empty()) throw UsageError("--policy checkpoint needs --checkpoint");
        ck.emplace(models::load_checkpoint(collect_ckpt));
        policy = std::make_unique<data::ModelPolicy>(ck->model, ck->normalizer, guidance::GuidanceSpec{});
      }
      auto trajs = data::collect_rollouts(*policy, spec, collect_configs, collect_runs,
                                          static_cast<std::uint64_t>(collect_seed), collect_first);
      data::save_dataset(output_path(collect_out), trajs);
      std::size_t ok = 0;
      for (const auto& t : trajs) ok += t.outcome == data::Outcome::success;
      out << trajs.size() << " trajectories (" << ok << " successes) -> " << output_path(collect_out).string()
          << "\n";
      return kExitOk;
    }

    if (*eval) {
      auto c = config_or_default(eval_config);
      auto plan = eval_opts.plan(c);
      std::string arm = eval_arm;
      EvalResult result;
      if (eval_expert) {
        if (!eval_ckpt.empty()) throw UsageError("--expert and --checkpoint are exclusive");
        data::ExpertPolicy expert(c.model.horizon);
        result = evaluate(expert, arm.empty() ? "expert" : arm, plan);
      } else {
        if (eval_ckpt.empty()) throw UsageError("eval needs --checkpoint or --expert");
        auto spec = guidance_from_flags(eval_kind, eval_lambda, eval_alpha);
        auto ck = models::load_checkpoint(eval_ckpt);
        if (ck.model.config().obs_dim != envs::observation_dim(plan.env))
          throw ConfigError("checkpoint observation size does not match the env");
        data::ModelPolicy policy(ck.model, ck.normalizer, spec);
        result = evaluate(policy, arm.empty() ? spec.describe() : arm, plan);
      }
      write_eval(output_path(eval_out), result);
      print_summary(out, result.summary);
      return kExitOk;
    }

    if (*ablate) {
      auto c = config_or_default(ablate_config);
      auto plan = ablate_opts.plan(c);
      auto values = ablate_values.empty() ? c.guidance.ablation_alphas : ablate_values;
      for (double v : values)
        if (!(v >= 0.0)) throw UsageError("ablation values must be non-negative");
      fs::path ckpt = ablate_ckpt.empty() ? c.output_dir / "checkpoints" / "stage3.ckpt" : fs::path(ablate_ckpt);
      if (!fs::exists(ckpt)) throw UsageError("no checkpoint at " + ckpt.string());
      auto ck = models::load_checkpoint(ckpt);
      EvalResult all;
      for (double v : values) {
        auto spec = ablate_param == "alpha" ? training::adaptive_spec(c, v) : training::static_spec(c);
        if (ablate_param == "lambda") spec.lambda = v;
        data::ModelPolicy policy(ck.model, ck.normalizer, spec);
        std::ostringstream name;
        name << (ablate_param == "alpha" ? "adaptive_fi_alpha_" : "static_fi_lambda_") << v;
        append(all, evaluate(policy, name.str(), plan));
      }
      fs::path dir = ablate_out.empty() ? c.output_dir / "ablation" : output_path(ablate_out);
      write_eval(dir, all, "ablation.csv");
      print_summary(out, all.summary);
      return kExitOk;
    }

    if (*report) {
      std::vector<EpisodeRow> episodes;
      std::string traces;
      std::uint64_t seed = 0;
      bool have_seed = false;
      for (const auto& in : report_inputs) {
        fs::path dir = output_path(in);
        auto rows = parse_episodes(read_text(dir / "episodes.csv"));
        episodes.insert(episodes.end(), rows.begin(), rows.end());
        if (!have_seed && fs::exists(dir / "summary.csv")) {
          auto s = parse_summary(read_text(dir / "summary.csv"));
          if (!s.empty()) {
            seed = s.front().seed;
            have_seed = true;
          }
        }
        if (fs::exists(dir / "lambda_trace.csv")) {
          auto text = read_text(dir / "lambda_trace.csv");
          auto body = text.find('\n');
          if (traces.empty()) traces = text;
          else if (body != std::string::npos) traces += text.substr(body + 1);
        }
      }
      auto summary = summarize(episodes, seed);
      fs::path dir = output_path(report_out);
      write_text(dir / "summary.csv", format_summary(summary));
      if (!traces.empty()) write_text(dir / "lambda_trace.csv", traces);
      print_summary(out, summary);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace afil::harness
