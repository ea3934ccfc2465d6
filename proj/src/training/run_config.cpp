#include "afil/training/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "afil/core/error.hpp"

namespace afil::training {

using nlohmann::json;

namespace {

// Reads known keys out of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }
  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(name_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json to_json(const RunConfig& c) {
  json tasks = json::array();
  for (auto t : c.tasks) tasks.push_back(envs::to_string(t));
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"tasks", tasks},
      {"model",
       {{"mode", models::to_string(c.model.process.mode)},
        {"n_steps", c.model.process.n_steps},
        {"beta_start", c.model.process.beta_start},
        {"beta_end", c.model.process.beta_end},
        {"scale_betas_to_steps", c.model.process.scale_betas_to_steps},
        {"horizon", c.model.horizon},
        {"hidden_dim", c.model.hidden_dim},
        {"step_embed_dim", c.model.step_embed_dim},
        {"head_layers", c.model.head_layers}}},
      {"env",
       {{"max_step", c.env.max_step},
        {"grasp_radius", c.env.grasp_radius},
        {"goal_radius", c.env.goal_radius},
        {"expert_clearance", c.env.expert_clearance},
        {"horizon_short", c.env.horizon_short},
        {"horizon_long", c.env.horizon_long},
        {"n_traps", c.env.n_traps},
        {"trap_min", c.env.trap_min},
        {"trap_max", c.env.trap_max},
        {"min_separation", c.env.min_separation},
        {"max_reset_attempts", c.env.max_reset_attempts}}},
      {"data",
       {{"demos_per_task", c.data.demos_per_task},
        {"demo_config_offset", c.data.demo_config_offset},
        {"failure_configs_per_task", c.data.failure_configs_per_task},
        {"failure_runs", c.data.failure_runs},
        {"failure_config_offset", c.data.failure_config_offset},
        {"target_success", c.data.targets.success},
        {"target_corrected", c.data.targets.corrected},
        {"target_failure", c.data.targets.failure},
        {"failure_chunks", c.data.failure_chunks == data::FailureChunks::full ? "full" : "post_divergence"}}},
      {"train",
       {{"stage1_steps", c.train.stage1_steps},
        {"stage2_steps", c.train.stage2_steps},
        {"stage3_steps", c.train.stage3_steps},
        {"batch_size", c.train.batch_size},
        {"lr", c.train.lr},
        {"lr_final_fraction", c.train.lr_final_fraction}}},
      {"eval",
       {{"n_configs", c.eval.n_configs},
        {"n_runs", c.eval.n_runs},
        {"first_config", c.eval.first_config},
        {"seed", c.eval.seed}}},
      {"guidance",
       {{"static_lambda", c.guidance.static_lambda},
        {"adaptive_alpha", c.guidance.adaptive_alpha},
        {"ablation_alphas", c.guidance.ablation_alphas},
        {"cos_floor", c.guidance.cos_floor}}},
  };
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.model.process.mode = models::Mode::flow;
  c.model.process.n_steps = 10;
  c.model.horizon = 4;
  c.model.hidden_dim = 128;
  c.model.step_embed_dim = 32;
  c.finalize();
  return c;
}

void RunConfig::finalize() {
  model.obs_dim = envs::observation_dim(env);
  model.task_dim = envs::kTaskCount;
  model.action_dim = envs::kActionDim;
  validate();
}

void RunConfig::validate() const {
  model.validate();
  env.validate();
  if (model.obs_dim != envs::observation_dim(env) || model.action_dim != envs::kActionDim ||
      model.task_dim != envs::kTaskCount)
    throw ConfigError("model dimensions do not match the env");
  if (tasks.empty()) throw ConfigError("tasks: at least one task required");
  std::set<envs::TaskId> unique(tasks.begin(), tasks.end());
  if (unique.size() != tasks.size()) throw ConfigError("tasks: duplicates");
  if (data.demos_per_task <= 0) throw ConfigError("data.demos_per_task must be positive");
  if (data.failure_configs_per_task <= 0 || data.failure_runs <= 0)
    throw ConfigError("data: failure rollout counts must be positive");
  if (data.demo_config_offset < 0 || data.failure_config_offset < 0)
    throw ConfigError("data: config offsets must be non-negative");
  if (train.stage1_steps <= 0 || train.stage2_steps < 0 || train.stage3_steps <= 0)
    throw ConfigError("train: invalid stage step counts");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(train.lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(train.lr_final_fraction > 0.0 && train.lr_final_fraction <= 1.0))
    throw ConfigError("train.lr_final_fraction must be in (0, 1]");
  if (eval.n_configs <= 0 || eval.n_runs <= 0) throw ConfigError("eval: counts must be positive");
  if (eval.first_config < 0) throw ConfigError("eval.first_config must be non-negative");
  if (!(guidance.static_lambda >= 0.0) || !(guidance.adaptive_alpha >= 0.0))
    throw ConfigError("guidance: strengths must be non-negative");
  for (double a : guidance.ablation_alphas)
    if (!(a >= 0.0)) throw ConfigError("guidance.ablation_alphas must be non-negative");
  if (!(guidance.cos_floor > 0.0)) throw ConfigError("guidance.cos_floor must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  RunConfig c = default_run_config();
  Section root(j, "config");
  root.get("seed", c.seed);
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;
  if (const json* t = root.child("tasks")) {
    if (!t->is_array()) throw ConfigError("tasks: expected an array");
    c.tasks.clear();
    for (const auto& name : *t) {
      if (!name.is_string()) throw ConfigError("tasks: expected task names");
      c.tasks.push_back(envs::parse_task(name.get<std::string>()));
    }
  }
  if (const json* m = root.child("model")) {
    Section s(*m, "model");
    std::string mode = models::to_string(c.model.process.mode);
    s.get("mode", mode);
    c.model.process.mode = models::parse_mode(mode);
    s.get("n_steps", c.model.process.n_steps);
    s.get("beta_start", c.model.process.beta_start);
    s.get("beta_end", c.model.process.beta_end);
    s.get("scale_betas_to_steps", c.model.process.scale_betas_to_steps);
    s.get("horizon", c.model.horizon);
    s.get("hidden_dim", c.model.hidden_dim);
    s.get("step_embed_dim", c.model.step_embed_dim);
    s.get("head_layers", c.model.head_layers);
    s.finish();
  }
  if (const json* e = root.child("env")) {
    Section s(*e, "env");
    s.get("max_step", c.env.max_step);
    s.get("grasp_radius", c.env.grasp_radius);
    s.get("goal_radius", c.env.goal_radius);
    s.get("expert_clearance", c.env.expert_clearance);
    s.get("horizon_short", c.env.horizon_short);
    s.get("horizon_long", c.env.horizon_long);
    s.get("n_traps", c.env.n_traps);
    s.get("trap_min", c.env.trap_min);
    s.get("trap_max", c.env.trap_max);
    s.get("min_separation", c.env.min_separation);
    s.get("max_reset_attempts", c.env.max_reset_attempts);
    s.finish();
  }
  if (const json* d = root.child("data")) {
    Section s(*d, "data");
    s.get("demos_per_task", c.data.demos_per_task);
    s.get("demo_config_offset", c.data.demo_config_offset);
    s.get("failure_configs_per_task", c.data.failure_configs_per_task);
    s.get("failure_runs", c.data.failure_runs);
    s.get("failure_config_offset", c.data.failure_config_offset);
    s.get("target_success", c.data.targets.success);
    s.get("target_corrected", c.data.targets.corrected);
    s.get("target_failure", c.data.targets.failure);
    std::string chunks = "full";
    s.get("failure_chunks", chunks);
    if (chunks == "full")
      c.data.failure_chunks = data::FailureChunks::full;
    else if (chunks == "post_divergence")
      c.data.failure_chunks = data::FailureChunks::post_divergence;
    else
      throw ConfigError("data.failure_chunks: expected full or post_divergence");
    s.finish();
  }
  if (const json* t = root.child("train")) {
    Section s(*t, "train");
    s.get("stage1_steps", c.train.stage1_steps);
    s.get("stage2_steps", c.train.stage2_steps);
    s.get("stage3_steps", c.train.stage3_steps);
    s.get("batch_size", c.train.batch_size);
    s.get("lr", c.train.lr);
    s.get("lr_final_fraction", c.train.lr_final_fraction);
    s.finish();
  }
  if (const json* e = root.child("eval")) {
    Section s(*e, "eval");
    s.get("n_configs", c.eval.n_configs);
    s.get("n_runs", c.eval.n_runs);
    s.get("first_config", c.eval.first_config);
    s.get("seed", c.eval.seed);
    s.finish();
  }
  if (const json* g = root.child("guidance")) {
    Section s(*g, "guidance");
    s.get("static_lambda", c.guidance.static_lambda);
    s.get("adaptive_alpha", c.guidance.adaptive_alpha);
    s.get("ablation_alphas", c.guidance.ablation_alphas);
    s.get("cos_floor", c.guidance.cos_floor);
    s.finish();
  }
  root.finish();
  c.finalize();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read run config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string format_run_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace afil::training
