#include "afil/data/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "afil/core/error.hpp"
#include "afil/envs/expert.hpp"

namespace afil::data {

std::vector<PolicyChunk> ExpertPolicy::act(std::span<const PolicyQuery> queries) {
  std::vector<PolicyChunk> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    out[i].actions = envs::expert_chunk(*queries[i].state, *queries[i].spec, horizon_);
  return out;
}

std::vector<PolicyChunk> NoisyExpertPolicy::act(std::span<const PolicyQuery> queries) {
  std::vector<PolicyChunk> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto& a = out[i].actions;
    a = envs::expert_chunk(*queries[i].state, *queries[i].spec, horizon_);
    for (std::size_t t = 0; t < horizon_; ++t) {
      a[t * envs::kActionDim] += sigma_ * queries[i].rng->normal();
      a[t * envs::kActionDim + 1] += sigma_ * queries[i].rng->normal();
    }
  }
  return out;
}

ModelPolicy::ModelPolicy(const models::DagModel& model, const models::Normalizer& normalizer,
                         guidance::GuidanceSpec spec, generative::SampleOptions options)
    : model_(model),
      normalizer_(normalizer),
      spec_(spec),
      options_(options),
      process_(generative::Process::from(model.config().process)) {
  spec_.validate();
  if (spec_.needs_failure_head() && !model_.failure_head_trained())
    throw ConfigError("guidance '" + guidance::to_string(spec_.kind) + "' needs a trained failure head");
  if (normalizer_.obs_dim() != model_.config().obs_dim ||
      normalizer_.action_dim() != model_.config().action_dim)
    throw ConfigError("normalizer dimensions do not match the model");
  options_.normalizer = &normalizer_;
}

std::vector<PolicyChunk> ModelPolicy::act(std::span<const PolicyQuery> queries) {
  const std::size_t b = queries.size();
  std::vector<PolicyChunk> out(b);
  if (b == 0) return out;
  const auto& cfg = model_.config();
  std::vector<double> obs(b * cfg.obs_dim), task(b * cfg.task_dim, 0.0);
  std::vector<Rng> rngs;
  rngs.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    normalizer_.normalize_obs(queries[i].observation,
                              std::span<double>(obs.data() + i * cfg.obs_dim, cfg.obs_dim));
    const auto onehot = envs::task_onehot(queries[i].spec->task);
    if (onehot.size() != cfg.task_dim) throw ConfigError("model task width does not match the env");
    std::copy(onehot.begin(), onehot.end(), task.begin() + static_cast<std::ptrdiff_t>(i * cfg.task_dim));
    rngs.push_back(*queries[i].rng);
  }
  models::ConditionBatch cond{numerics::Tensor::from({b, cfg.obs_dim}, std::move(obs)),
                              numerics::Tensor::from({b, cfg.task_dim}, std::move(task))};
  guidance::GuidanceTrace trace;
  const auto score = guidance::make_score_fn(model_, cond, spec_, cfg.process.mode, &trace);
  const auto result = generative::sample(score, process_, rngs, cfg.chunk_dim(), options_);
  const auto values = result.actions.data();
  for (std::size_t i = 0; i < b; ++i) {
    *queries[i].rng = rngs[i];
    out[i].fault = result.faulted[i];
    out[i].actions.assign(values.begin() + static_cast<std::ptrdiff_t>(i * cfg.chunk_dim()),
                          values.begin() + static_cast<std::ptrdiff_t>((i + 1) * cfg.chunk_dim()));
    if (!trace.lambda.empty()) out[i].lambdas = std::move(trace.lambda[i]);
  }
  return out;
}

std::uint64_t episode_seed(std::uint64_t seed, envs::TaskId task, std::int64_t config_id, std::int64_t run) {
  return derive_seed({seed, static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(config_id),
                      static_cast<std::uint64_t>(run)});
}

namespace {

struct Episode {
  envs::EnvState state;
  Trajectory traj;
  Rng rng;
};

}  // namespace

std::vector<Trajectory> collect_rollouts(Policy& policy, const envs::TaskSpec& spec,
                                         std::span<const std::int64_t> config_ids, int n_runs,
                                         std::uint64_t seed) {
  if (n_runs <= 0) throw ConfigError("rollouts need a positive number of runs");
  const std::size_t horizon = policy.horizon();
  if (horizon == 0) throw ConfigError("policy horizon must be positive");
  const double max_step = spec.params.max_step;

  std::vector<Episode> eps;
  eps.reserve(config_ids.size() * static_cast<std::size_t>(n_runs));
  for (std::int64_t c : config_ids) {
    const envs::EnvState init = envs::reset(spec, c);
    for (int r = 0; r < n_runs; ++r) {
      const std::uint64_t s = episode_seed(seed, spec.task, c, r);
      Episode e{init, {}, Rng(s)};
      e.traj.task = spec.task;
      e.traj.config_id = c;
      e.traj.seed = s;
      e.traj.run = r;
      eps.push_back(std::move(e));
    }
  }

  std::vector<std::size_t> active(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) active[i] = i;
  while (!active.empty()) {
    std::vector<std::vector<double>> observations(active.size());
    std::vector<PolicyQuery> queries(active.size());
    for (std::size_t q = 0; q < active.size(); ++q) {
      Episode& e = eps[active[q]];
      observations[q] = envs::observe(e.state, spec);
      queries[q] = {&spec, &e.state, observations[q], &e.rng};
    }
    std::vector<PolicyChunk> chunks = policy.act(queries);
    if (chunks.size() != active.size()) throw ContractError("policy returned the wrong number of chunks");

    std::vector<std::size_t> still;
    for (std::size_t q = 0; q < active.size(); ++q) {
      Episode& e = eps[active[q]];
      PolicyChunk& ch = chunks[q];
      e.traj.lambda_log.insert(e.traj.lambda_log.end(), ch.lambdas.begin(), ch.lambdas.end());
      bool fault = ch.fault || ch.actions.size() != horizon * envs::kActionDim;
      for (double v : ch.actions) fault = fault || !std::isfinite(v);
      if (fault) {
        e.traj.numeric_fault = true;
        e.state.status = envs::Status::failure;
        continue;
      }
      std::vector<double> obs = std::move(observations[q]);
      for (std::size_t t = 0; t < horizon && !e.state.terminal(); ++t) {
        std::vector<double> a(ch.actions.begin() + static_cast<std::ptrdiff_t>(t * envs::kActionDim),
                              ch.actions.begin() + static_cast<std::ptrdiff_t>((t + 1) * envs::kActionDim));
        a[0] = std::clamp(a[0], -max_step, max_step);
        a[1] = std::clamp(a[1], -max_step, max_step);
        if (t > 0) obs = envs::observe(e.state, spec);
        envs::step(e.state, spec, a);
        e.traj.steps.push_back({std::move(obs), std::move(a)});
      }
      if (!e.state.terminal()) still.push_back(active[q]);
    }
    active.swap(still);
  }

  std::vector<Trajectory> out;
  out.reserve(eps.size());
  for (Episode& e : eps) {
    e.traj.outcome = e.state.status == envs::Status::success ? Outcome::success : Outcome::failure;
    out.push_back(std::move(e.traj));
  }
  return out;
}

std::vector<Trajectory> collect_rollouts(Policy& policy, const envs::TaskSpec& spec,
                                         std::int64_t n_configs, int n_runs, std::uint64_t seed,
                                         std::int64_t first_config) {
  std::vector<std::int64_t> ids(static_cast<std::size_t>(std::max<std::int64_t>(n_configs, 0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = first_config + static_cast<std::int64_t>(i);
  return collect_rollouts(policy, spec, ids, n_runs, seed);
}

}  // namespace afil::data
