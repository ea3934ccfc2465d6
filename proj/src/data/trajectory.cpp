#include "afil/data/trajectory.hpp"

#include "afil/core/error.hpp"
#include "afil/core/hash.hpp"

namespace afil::data {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::success:
      return "success";
    case Outcome::failure:
      return "failure";
    case Outcome::corrected:
      return "corrected";
  }
  return "?";
}

Outcome parse_outcome(const std::string& text) {
  for (auto o : {Outcome::success, Outcome::failure, Outcome::corrected})
    if (to_string(o) == text) return o;
  throw DataError("unknown outcome '" + text + "'");
}

std::uint64_t trajectory_id(const Trajectory& t) {
  Fnv1a h;
  h.value(static_cast<int>(t.task));
  h.value(t.config_id);
  h.value(t.seed);
  h.value(t.run);
  h.value(static_cast<int>(t.outcome));
  h.value(t.correction_start);
  h.value(static_cast<int>(t.numeric_fault));
  h.value(t.steps.size());
  for (const Step& s : t.steps) {
    h.doubles(s.observation);
    h.doubles(s.action);
  }
  h.doubles(t.lambda_log);
  return h.digest();
}

void check_trajectory(const Trajectory& t) {
  if (t.steps.empty()) {
    // A policy fault on the very first query leaves nothing to record.
    if (t.numeric_fault && t.outcome == Outcome::failure && t.correction_start == -1) return;
    throw ContractError("trajectory has no steps");
  }
  const std::size_t od = t.steps.front().observation.size();
  const std::size_t ad = t.steps.front().action.size();
  for (const Step& s : t.steps)
    if (s.observation.size() != od || s.action.size() != ad)
      throw ContractError("trajectory steps have inconsistent widths");
  const auto n = static_cast<std::int64_t>(t.steps.size());
  if (t.outcome == Outcome::corrected) {
    if (t.correction_start < 0 || t.correction_start >= n)
      throw ContractError("corrected trajectory has correction_start " +
                          std::to_string(t.correction_start) + " outside [0, " + std::to_string(n) + ")");
  } else if (t.correction_start != -1) {
    throw ContractError("only corrected trajectories carry a correction_start");
  }
}

envs::EnvState replay(const Trajectory& t, const envs::TaskSpec& spec) {
  envs::EnvState s = envs::reset(spec, t.config_id, t.seed);
  for (const Step& st : t.steps) {
    if (s.terminal()) break;
    envs::step(s, spec, st.action);
  }
  return s;
}

}  // namespace afil::data
