#include "afil/harness/evaluate.hpp"

#include <map>

#include "afil/core/error.hpp"

namespace afil::harness {

EvalResult evaluate(data::Policy& policy, const std::string& arm, const EvalPlan& plan) {
  if (plan.tasks.empty()) throw ConfigError("evaluate: no tasks");
  if (plan.n_configs <= 0 || plan.n_runs <= 0) throw ConfigError("evaluate: counts must be positive");
  EvalResult result;
  for (auto task : plan.tasks) {
    auto spec = envs::TaskSpec::make(task, plan.env);
    auto trajs = data::collect_rollouts(policy, spec, plan.n_configs, plan.n_runs, plan.seed, plan.first_config);
    for (const auto& t : trajs) {
      if (t.outcome == data::Outcome::corrected) throw ContractError("evaluate: corrected episode at eval time");
      EpisodeRow row;
      row.task = envs::to_string(task);
      row.arm = arm;
      row.config_id = t.config_id;
      row.run = static_cast<int>(t.run);
      row.outcome = t.outcome == data::Outcome::success ? "success" : "failure";
      row.steps = static_cast<int>(t.steps.size());
      row.numeric_fault = t.numeric_fault;
      if (!t.lambda_log.empty()) {
        double sum = 0.0;
        for (double l : t.lambda_log) sum += l;
        row.mean_lambda = sum / static_cast<double>(t.lambda_log.size());
        result.traces.push_back({row.task, arm, t.config_id, row.run, t.lambda_log});
      }
      result.episodes.push_back(std::move(row));
    }
  }
  result.summary = summarize(result.episodes, plan.seed);
  return result;
}

std::vector<SummaryRow> summarize(std::span<const EpisodeRow> episodes, std::uint64_t seed) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, int>> index;  // -> (row, successes)
  for (const auto& e : episodes) {
    auto key = std::make_pair(e.task, e.arm);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, std::make_pair(rows.size(), 0)).first;
      rows.push_back({e.task, e.arm, 0.0, 0, seed});
    }
    rows[it->second.first].n_episodes += 1;
    it->second.second += e.outcome == "success";
  }
  for (const auto& [key, v] : index)
    rows[v.first].success_rate_pct = 100.0 * v.second / rows[v.first].n_episodes;
  return rows;
}

void append(EvalResult& into, const EvalResult& from) {
  into.episodes.insert(into.episodes.end(), from.episodes.begin(), from.episodes.end());
  into.summary.insert(into.summary.end(), from.summary.begin(), from.summary.end());
  into.traces.insert(into.traces.end(), from.traces.begin(), from.traces.end());
}

}  // namespace afil::harness
