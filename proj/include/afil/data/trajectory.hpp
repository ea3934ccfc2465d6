#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afil/envs/env.hpp"

namespace afil::data {

enum class Outcome { success, failure, corrected };
std::string to_string(Outcome o);
Outcome parse_outcome(const std::string& text);

struct Step {
  std::vector<double> observation;
  std::vector<double> action;
  bool operator==(const Step&) const = default;
};

struct Trajectory {
  envs::TaskId task = envs::TaskId::pick_place;
  std::int64_t config_id = 0;
  std::uint64_t seed = 0;  // episode seed (policy stochasticity)
  std::int64_t run = 0;
  Outcome outcome = Outcome::failure;
  std::int64_t correction_start = -1;  // corrected only: first planner step
  bool numeric_fault = false;
  std::vector<Step> steps;
  std::vector<double> lambda_log;  // guidance scale per sampler call, when guided

  bool operator==(const Trajectory&) const = default;
};

// Content id: two trajectories share it only if every field matches.
std::uint64_t trajectory_id(const Trajectory& t);

// Throws ContractError when the record violates its invariants (empty steps,
// bad correction index, inconsistent vector widths).
void check_trajectory(const Trajectory& t);

// Re-executes the recorded actions from reset(task, config_id) and returns the
// terminal env state reached (or the running state if the actions run out).
envs::EnvState replay(const Trajectory& t, const envs::TaskSpec& spec);

}  // namespace afil::data
