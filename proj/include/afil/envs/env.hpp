#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afil/envs/geometry.hpp"

namespace afil::envs {

enum class TaskId { reach = 0, pick_place = 1, two_object_sequence = 2 };
inline constexpr std::size_t kTaskCount = 3;

std::string to_string(TaskId task);
TaskId parse_task(const std::string& text);

struct EnvParams {
  double max_step = 0.05;
  double grasp_radius = 0.04;
  double goal_radius = 0.04;
  double expert_clearance = 0.10;  // expert path margin around traps, >= grasp_radius
  int horizon_short = 120;
  int horizon_long = 240;
  int n_traps = 2;
  double trap_min = 0.10;
  double trap_max = 0.22;
  double min_separation = 0.3;  // object-goal distance at reset
  int max_reset_attempts = 2000;

  bool operator==(const EnvParams&) const = default;
  void validate() const;
};

struct TaskSpec {
  TaskId task = TaskId::pick_place;
  int horizon_limit = 120;
  EnvParams params;

  static TaskSpec make(TaskId task, const EnvParams& params = {});
};

enum class Status { running, success, failure };
std::string to_string(Status s);

// objects/goals: reach has no object and one goal; pick_place one of each;
// two_object_sequence has two objects and one goal, the second object's target
// being wherever the first one was placed.
struct EnvState {
  Vec2 agent;
  std::vector<Vec2> objects;
  std::vector<Vec2> goals;
  std::vector<Rect> traps;
  int stage = 0;
  bool holding = false;
  int step_count = 0;
  Status status = Status::running;
  bool timed_out = false;

  bool operator==(const EnvState&) const = default;
  bool terminal() const { return status != Status::running; }
};

// Current manipulation target and its destination. For reach both are the goal.
Vec2 current_object(const EnvState& s, TaskId task);
Vec2 current_goal(const EnvState& s, TaskId task);

inline constexpr std::size_t kActionDim = 3;  // dx, dy, gripper
std::size_t observation_dim(const EnvParams& params);

// [agent, object - agent, goal - agent, holding, stage, then per trap
// (x0 y0 x1 y1) - agent]. Offsets keep the mapping translation-invariant.
std::vector<double> observe(const EnvState& s, const TaskSpec& spec);
std::vector<double> task_onehot(TaskId task);

// Deterministic in (task, config_id). run_seed is accepted for the protocol's
// bookkeeping but does not influence the initial state. Rejects samples until
// the scripted expert solves the configuration.
EnvState reset(const TaskSpec& spec, std::int64_t config_id, std::uint64_t run_seed = 0);

// Applies one timestep. Inputs are clipped, never rejected; terminal states
// are absorbing (the call is a no-op).
Status step(EnvState& s, const TaskSpec& spec, std::span<const double> action);

// True when the state satisfies the reset invariants.
bool state_valid(const EnvState& s, const TaskSpec& spec);

}  // namespace afil::envs
