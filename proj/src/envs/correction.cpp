#include "afil/envs/correction.hpp"

#include "afil/core/error.hpp"
#include "afil/envs/expert.hpp"

namespace afil::envs {

data::Trajectory replan_correction(const data::Trajectory& failure, const TaskSpec& spec) {
  if (failure.outcome != data::Outcome::failure)
    throw ContractError("replan_correction expects a failed trajectory, got " +
                        data::to_string(failure.outcome));
  data::check_trajectory(failure);

  std::vector<EnvState> states;
  states.reserve(failure.steps.size() + 1);
  states.push_back(reset(spec, failure.config_id, failure.seed));
  for (const auto& st : failure.steps) {
    EnvState next = states.back();
    step(next, spec, st.action);
    states.push_back(std::move(next));
  }

  for (std::size_t k = failure.steps.size() + 1; k-- > 0;) {
    const EnvState& s = states[k];
    if (s.terminal()) continue;
    bool in_trap = false;
    for (const Rect& r : s.traps) in_trap = in_trap || r.contains(s.agent);
    if (in_trap) continue;
    ExpertRun run;
    try {
      run = run_expert(s, spec);
    } catch (const PlanError&) {
      continue;
    }
    if (run.status != Status::success) continue;

    data::Trajectory out = failure;
    out.outcome = data::Outcome::corrected;
    out.correction_start = static_cast<std::int64_t>(k);
    out.numeric_fault = false;
    out.lambda_log.clear();
    out.steps.resize(k);
    for (std::size_t i = 0; i < run.actions.size(); ++i)
      out.steps.push_back({std::move(run.observations[i]), std::move(run.actions[i])});
    if (out.steps.empty()) continue;
    return out;
  }
  throw NoCorrection("no recoverable prefix for " + to_string(spec.task) + " config " +
                     std::to_string(failure.config_id));
}

}  // namespace afil::envs
