#pragma once

#include "afil/data/trajectory.hpp"
#include "afil/envs/env.hpp"

namespace afil::envs {

// Keeps the longest prefix ending in a recoverable state (agent outside every
// trap, episode still running, and the scripted expert able to finish within
// the remaining horizon from there) and appends the expert's actions. The
// result is labeled corrected with correction_start at the splice point.
// ContractError when the input did not fail; NoCorrection when no prefix is
// recoverable.
data::Trajectory replan_correction(const data::Trajectory& failure, const TaskSpec& spec);

}  // namespace afil::envs
