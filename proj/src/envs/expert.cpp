#include "afil/envs/expert.hpp"

#include <algorithm>

#include "afil/envs/planner.hpp"

namespace afil::envs {

std::vector<double> expert_action(const EnvState& s, const TaskSpec& spec) {
  const EnvParams& p = spec.params;
  const bool reach = spec.task == TaskId::reach;
  const Vec2 target = reach || s.holding ? current_goal(s, spec.task) : current_object(s, spec.task);

  // An empty-handed agent may stand inside a trap; it is free to walk out.
  std::vector<Rect> obstacles;
  for (const Rect& r : s.traps)
    if (reach || s.holding || !r.contains(s.agent)) obstacles.push_back(r);

  const std::vector<Vec2> path = plan_path(s.agent, target, obstacles, p.expert_clearance);
  const double remaining = path_length(path);
  const bool arrives = remaining <= p.max_step;
  const Vec2 next = arrives ? target : advance_along(path, p.max_step);
  const Vec2 d = next - s.agent;
  double grip = 0.0;
  // Closing a step early is harmless (grasping needs contact) and gives the
  // gripper channel a wider target than the single arrival step.
  if (!reach) grip = s.holding ? (arrives ? 0.0 : 1.0) : (remaining <= 2.0 * p.max_step ? 1.0 : 0.0);
  return {std::clamp(d.x, -p.max_step, p.max_step), std::clamp(d.y, -p.max_step, p.max_step), grip};
}

std::vector<double> expert_chunk(const EnvState& s, const TaskSpec& spec, std::size_t horizon) {
  std::vector<double> chunk;
  chunk.reserve(horizon * kActionDim);
  EnvState sim = s;
  double grip = s.holding ? 1.0 : 0.0;
  for (std::size_t i = 0; i < horizon; ++i) {
    if (sim.terminal()) {
      chunk.insert(chunk.end(), {0.0, 0.0, grip});
      continue;
    }
    const std::vector<double> a = expert_action(sim, spec);
    grip = a[2];
    step(sim, spec, a);
    chunk.insert(chunk.end(), a.begin(), a.end());
  }
  return chunk;
}

ExpertRun run_expert(EnvState s, const TaskSpec& spec) {
  ExpertRun run;
  while (!s.terminal()) {
    run.observations.push_back(observe(s, spec));
    run.actions.push_back(expert_action(s, spec));
    step(s, spec, run.actions.back());
  }
  run.status = s.status;
  run.final_state = std::move(s);
  return run;
}

}  // namespace afil::envs
