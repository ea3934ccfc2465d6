#pragma once

#include <vector>

#include "afil/envs/env.hpp"

namespace afil::envs {

// One timestep of the scripted expert: follow the shortest trap-avoiding path
// to the current object (or, while holding, to its goal) at full speed, close
// the gripper on arrival at the object and open it on arrival at the goal.
// Throws PlanError when no path exists.
std::vector<double> expert_action(const EnvState& s, const TaskSpec& spec);

// H expert actions, timestep-major, obtained by simulating a copy of s. Steps
// after the copy terminates repeat a motionless action with the last gripper
// value.
std::vector<double> expert_chunk(const EnvState& s, const TaskSpec& spec, std::size_t horizon);

struct ExpertRun {
  Status status = Status::running;
  std::vector<std::vector<double>> observations;  // before each action
  std::vector<std::vector<double>> actions;
  EnvState final_state;
};

// Runs the expert from s until a terminal state (the env horizon bounds it).
ExpertRun run_expert(EnvState s, const TaskSpec& spec);

}  // namespace afil::envs
