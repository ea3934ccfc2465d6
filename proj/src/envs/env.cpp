#include "afil/envs/env.hpp"

#include <algorithm>
#include <cmath>

#include "afil/core/error.hpp"
#include "afil/core/rng.hpp"
#include "afil/envs/expert.hpp"

namespace afil::envs {

std::string to_string(TaskId task) {
  switch (task) {
    case TaskId::reach:
      return "reach";
    case TaskId::pick_place:
      return "pick_place";
    case TaskId::two_object_sequence:
      return "two_object_sequence";
  }
  return "?";
}

TaskId parse_task(const std::string& text) {
  for (auto t : {TaskId::reach, TaskId::pick_place, TaskId::two_object_sequence})
    if (to_string(t) == text) return t;
  throw ConfigError("unknown task '" + text + "' (expected reach|pick_place|two_object_sequence)");
}

std::string to_string(Status s) {
  switch (s) {
    case Status::running:
      return "running";
    case Status::success:
      return "success";
    case Status::failure:
      return "failure";
  }
  return "?";
}

void EnvParams::validate() const {
  if (!(max_step > 0.0) || !(grasp_radius > 0.0) || !(goal_radius > 0.0))
    throw ConfigError("env step and radii must be positive");
  if (!(expert_clearance >= grasp_radius)) throw ConfigError("env expert_clearance must be >= grasp_radius");
  if (horizon_short <= 0 || horizon_long <= 0) throw ConfigError("env horizons must be positive");
  if (n_traps < 0) throw ConfigError("env n_traps must be non-negative");
  if (!(trap_min > 0.0) || trap_max < trap_min) throw ConfigError("env trap size range invalid");
  if (max_reset_attempts <= 0) throw ConfigError("env max_reset_attempts must be positive");
}

TaskSpec TaskSpec::make(TaskId task, const EnvParams& params) {
  params.validate();
  TaskSpec spec;
  spec.task = task;
  spec.params = params;
  spec.horizon_limit = task == TaskId::two_object_sequence ? params.horizon_long : params.horizon_short;
  return spec;
}

Vec2 current_object(const EnvState& s, TaskId task) {
  if (task == TaskId::reach) return s.goals.at(0);
  return s.objects.at(static_cast<std::size_t>(std::min(s.stage, 1)));
}

Vec2 current_goal(const EnvState& s, TaskId task) {
  if (task == TaskId::two_object_sequence && s.stage >= 1) return s.objects.at(0);
  return s.goals.at(0);
}

std::size_t observation_dim(const EnvParams& params) {
  return 8 + 4 * static_cast<std::size_t>(params.n_traps);
}

std::vector<double> observe(const EnvState& s, const TaskSpec& spec) {
  const Vec2 obj = current_object(s, spec.task);
  const Vec2 goal = current_goal(s, spec.task);
  const Vec2 a = s.agent;
  std::vector<double> obs{a.x,         a.y,         obj.x - a.x, obj.y - a.y, goal.x - a.x, goal.y - a.y,
                          s.holding ? 1.0 : 0.0, static_cast<double>(s.stage)};
  for (const Rect& r : s.traps) obs.insert(obs.end(), {r.x0 - a.x, r.y0 - a.y, r.x1 - a.x, r.y1 - a.y});
  return obs;
}

std::vector<double> task_onehot(TaskId task) {
  std::vector<double> v(kTaskCount, 0.0);
  v[static_cast<std::size_t>(task)] = 1.0;
  return v;
}

namespace {

bool trapped_by(const Rect& trap, Vec2 from, Vec2 to) {
  return trap.contains(to) || segment_crosses_interior(from, to, trap);
}

Rect sample_trap_between(Rng& rng, Vec2 a, Vec2 b, const EnvParams& p) {
  const Vec2 c = a + (b - a) * rng.uniform(0.35, 0.65);
  const double w = rng.uniform(p.trap_min, p.trap_max);
  const double h = rng.uniform(p.trap_min, p.trap_max);
  const Vec2 j{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)};
  return {c.x + j.x - w / 2, c.y + j.y - h / 2, c.x + j.x + w / 2, c.y + j.y + h / 2};
}

Rect sample_trap_free(Rng& rng, const EnvParams& p) {
  const Vec2 c{rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)};
  const double w = rng.uniform(p.trap_min, p.trap_max);
  const double h = rng.uniform(p.trap_min, p.trap_max);
  return {c.x - w / 2, c.y - h / 2, c.x + w / 2, c.y + h / 2};
}

Vec2 sample_point(Rng& rng, double lo, double hi) { return {rng.uniform(lo, hi), rng.uniform(lo, hi)}; }

EnvState sample_layout(const TaskSpec& spec, Rng& rng) {
  const EnvParams& p = spec.params;
  EnvState s;
  s.agent = sample_point(rng, 0.05, 0.95);
  switch (spec.task) {
    case TaskId::reach:
      s.goals = {sample_point(rng, 0.1, 0.9)};
      break;
    case TaskId::pick_place:
      s.objects = {sample_point(rng, 0.1, 0.9)};
      s.goals = {sample_point(rng, 0.1, 0.9)};
      break;
    case TaskId::two_object_sequence:
      s.objects = {sample_point(rng, 0.1, 0.9), sample_point(rng, 0.1, 0.9)};
      s.goals = {sample_point(rng, 0.1, 0.9)};
      break;
  }
  // Traps straddle the carry legs so the expert has to detour around them.
  std::vector<std::pair<Vec2, Vec2>> legs;
  if (spec.task == TaskId::reach) legs.push_back({s.agent, s.goals[0]});
  for (std::size_t i = 0; i < s.objects.size(); ++i) legs.push_back({s.objects[i], s.goals[0]});
  for (int k = 0; k < p.n_traps; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    s.traps.push_back(idx < legs.size() ? sample_trap_between(rng, legs[idx].first, legs[idx].second, p)
                                        : sample_trap_free(rng, p));
  }
  return s;
}

bool layout_acceptable(const EnvState& s, const TaskSpec& spec) {
  const EnvParams& p = spec.params;
  const double keep_out = p.expert_clearance + 0.01;
  std::vector<Vec2> points = s.objects;
  points.insert(points.end(), s.goals.begin(), s.goals.end());
  points.push_back(s.agent);
  for (const Rect& r : s.traps)
    for (Vec2 q : points)
      if (r.inflated(keep_out).contains(q)) return false;
  const Vec2 goal = s.goals[0];
  if (spec.task == TaskId::reach) return distance(s.agent, goal) >= p.min_separation;
  for (Vec2 o : s.objects)
    if (distance(o, goal) < p.min_separation || distance(o, s.agent) < 0.15) return false;
  if (s.objects.size() == 2 && distance(s.objects[0], s.objects[1]) < p.min_separation) return false;
  return true;
}

}  // namespace

bool state_valid(const EnvState& s, const TaskSpec& spec) {
  std::vector<Vec2> points = s.objects;
  points.insert(points.end(), s.goals.begin(), s.goals.end());
  points.push_back(s.agent);
  for (Vec2 q : points)
    if (!in_arena(q)) return false;
  if (s.holding) {
    if (spec.task == TaskId::reach) return false;
    if (!(distance(s.agent, current_object(s, spec.task)) < spec.params.grasp_radius)) return false;
  }
  return s.step_count >= 0;
}

EnvState reset(const TaskSpec& spec, std::int64_t config_id, std::uint64_t /*run_seed*/) {
  Rng rng(derive_seed({0x72657365ULL, static_cast<std::uint64_t>(spec.task),
                       static_cast<std::uint64_t>(config_id)}));
  for (int attempt = 0; attempt < spec.params.max_reset_attempts; ++attempt) {
    EnvState s = sample_layout(spec, rng);
    if (!layout_acceptable(s, spec)) continue;
    try {
      if (run_expert(s, spec).status != Status::success) continue;
    } catch (const PlanError&) {
      continue;
    }
    return s;
  }
  throw ConfigError("could not sample a solvable configuration for " + to_string(spec.task) +
                    " config " + std::to_string(config_id));
}

Status step(EnvState& s, const TaskSpec& spec, std::span<const double> action) {
  if (s.terminal()) return s.status;
  if (action.size() != kActionDim)
    throw ShapeError("env action has " + std::to_string(action.size()) + " components, expected 3");
  const EnvParams& p = spec.params;
  auto clip = [&](double v) { return std::isfinite(v) ? std::clamp(v, -p.max_step, p.max_step) : 0.0; };
  const bool carrying = s.holding;
  const Vec2 before = s.agent;
  s.agent = clamp_to_arena(s.agent + Vec2{clip(action[0]), clip(action[1])});
  s.step_count += 1;
  const std::size_t obj_idx = static_cast<std::size_t>(std::min(s.stage, 1));
  if (carrying) s.objects[obj_idx] = s.agent;

  if (carrying || spec.task == TaskId::reach) {
    for (const Rect& r : s.traps)
      if (trapped_by(r, before, s.agent)) {
        s.status = Status::failure;
        return s.status;
      }
  }

  if (spec.task == TaskId::reach) {
    if (distance(s.agent, s.goals[0]) <= p.goal_radius) s.status = Status::success;
  } else {
    const double g = std::isfinite(action[2]) ? action[2] : 0.0;
    if (g > 0.5 && !s.holding && distance(s.agent, s.objects[obj_idx]) <= p.grasp_radius) {
      s.holding = true;
      s.objects[obj_idx] = s.agent;
    } else if (g <= 0.5 && s.holding) {
      s.holding = false;
    }
    if (!s.holding && distance(s.objects[obj_idx], current_goal(s, spec.task)) <= p.goal_radius) {
      const int last_stage = spec.task == TaskId::two_object_sequence ? 1 : 0;
      if (s.stage == last_stage)
        s.status = Status::success;
      else
        s.stage += 1;
    }
  }
  if (s.status == Status::running && s.step_count >= spec.horizon_limit) {
    s.status = Status::failure;
    s.timed_out = true;
  }
  return s.status;
}

}  // namespace afil::envs
