#include <doctest.h>

#include <cmath>
#include <set>

#include "afil/core/error.hpp"
#include "afil/data/trajectory.hpp"
#include "afil/envs/correction.hpp"
#include "afil/envs/env.hpp"
#include "afil/envs/expert.hpp"
#include "afil/envs/geometry.hpp"
#include "afil/envs/planner.hpp"

using namespace afil;
using namespace afil::envs;

namespace {

const TaskId kAllTasks[] = {TaskId::reach, TaskId::pick_place, TaskId::two_object_sequence};

data::Trajectory from_run(const ExpertRun& run, TaskId task, std::int64_t config) {
  data::Trajectory t;
  t.task = task;
  t.config_id = config;
  for (std::size_t i = 0; i < run.actions.size(); ++i) t.steps.push_back({run.observations[i], run.actions[i]});
  t.outcome = run.status == Status::success ? data::Outcome::success : data::Outcome::failure;
  return t;
}

bool in_any_trap(Vec2 p, const EnvState& s) {
  for (const auto& r : s.traps)
    if (r.contains(p)) return true;
  return false;
}

}  // namespace

TEST_CASE("geometry primitives") {
  Rect r{0.2, 0.2, 0.4, 0.4};
  CHECK(segment_crosses_interior({0.1, 0.3}, {0.5, 0.3}, r));
  CHECK_FALSE(segment_crosses_interior({0.1, 0.2}, {0.5, 0.2}, r));  // along an edge
  CHECK_FALSE(segment_crosses_interior({0.1, 0.1}, {0.2, 0.2}, r));  // touches a corner
  CHECK_FALSE(segment_crosses_interior({0.1, 0.5}, {0.5, 0.5}, r));
  CHECK(clamp_to_arena({1.2, -0.1}) == Vec2{1.0, 0.0});
  CHECK(in_arena({0.0, 1.0}));
  CHECK_FALSE(in_arena({1.0001, 0.5}));
}

TEST_CASE("planner avoids inflated rectangles") {
  Rect wall{0.4, 0.1, 0.6, 0.9};
  auto path = plan_path({0.1, 0.5}, {0.9, 0.5}, std::span(&wall, 1), 0.05);
  REQUIRE(path.size() >= 3);
  for (std::size_t i = 1; i < path.size(); ++i)
    CHECK_FALSE(segment_crosses_interior(path[i - 1], path[i], wall.inflated(0.05 - 1e-6)));
  // Around the short side: up over y = 0.95 or down under 0.05.
  CHECK(path_length(path) > 0.8);
  CHECK(advance_along(path, 0.0) == path.front());
  CHECK(advance_along(path, 100.0) == path.back());
  auto direct = plan_path({0.1, 0.1}, {0.9, 0.1}, {}, 0.05);
  CHECK(direct.size() == 2);
  CHECK_THROWS_AS(plan_path({0.5, 0.5}, {0.9, 0.5}, std::span(&wall, 1), 0.05), PlanError);
}

TEST_CASE("reset is deterministic and ignores the run seed") {
  for (auto task : kAllTasks) {
    auto spec = TaskSpec::make(task);
    for (std::int64_t c : {0, 1, 17, 123456}) {
      CHECK(reset(spec, c, 0) == reset(spec, c, 0));
      CHECK(reset(spec, c, 0) == reset(spec, c, 99));
    }
  }
}

TEST_CASE("50 configs give 50 distinct object poses") {
  for (auto task : {TaskId::pick_place, TaskId::two_object_sequence}) {
    auto spec = TaskSpec::make(task);
    std::set<std::pair<double, double>> poses;
    for (int c = 0; c < 50; ++c) {
      auto s = reset(spec, c);
      poses.insert({s.objects[0].x, s.objects[0].y});
    }
    CHECK(poses.size() == 50);
  }
}

TEST_CASE("reset invariants over 10k configs") {
  const int per_task = 10000 / 3 + 1;
  int checked = 0;
  for (auto task : kAllTasks) {
    auto spec = TaskSpec::make(task);
    for (int c = 0; c < per_task; ++c) {
      auto s = reset(spec, 500000 + c);
      bool ok = state_valid(s, spec) && in_arena(s.agent) && !s.holding && s.step_count == 0 &&
                s.status == Status::running;
      for (auto o : s.objects) ok = ok && in_arena(o) && !in_any_trap(o, s);
      for (auto g : s.goals) ok = ok && in_arena(g) && !in_any_trap(g, s);
      ok = ok && static_cast<int>(s.traps.size()) == spec.params.n_traps;
      if (!ok) FAIL("invalid reset for config " << c);
      ++checked;
    }
  }
  CHECK(checked >= 10000);
}

TEST_CASE("zero action only advances the step counter") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  auto s = reset(spec, 3);
  auto before = s;
  const double zero[3] = {0, 0, 0};
  CHECK(step(s, spec, zero) == Status::running);
  before.step_count += 1;
  CHECK(s == before);
}

TEST_CASE("actions are clipped rather than rejected") {
  auto spec = TaskSpec::make(TaskId::reach);
  auto s = reset(spec, 4);
  const Vec2 start = s.agent;
  const double big[3] = {10.0, 0.0, 0.0};
  step(s, spec, big);
  CHECK(s.agent.x == doctest::Approx(std::min(1.0, start.x + 0.05)).epsilon(1e-15));
  const double bad[3] = {std::nan(""), 0.0, 0.0};
  CHECK_NOTHROW(step(s, spec, bad));
  const double two[2] = {0, 0};
  CHECK_THROWS_AS(step(s, spec, two), ShapeError);
}

TEST_CASE("carrying the object into a trap centre fails at once") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  auto s = reset(spec, 5);
  REQUIRE(!s.traps.empty());
  const Rect trap = s.traps[0];
  // Put the agent holding the object just outside the trap's left edge and
  // step towards its centre.
  s.agent = {trap.x0 - 0.01, trap.center().y};
  s.objects[0] = s.agent;
  s.holding = true;
  const double dx = std::min(0.05, trap.center().x - s.agent.x);
  const double a[3] = {dx, 0.0, 1.0};
  CHECK(step(s, spec, a) == Status::failure);
  CHECK(s.terminal());
  CHECK_FALSE(s.timed_out);
  auto frozen = s;
  step(s, spec, a);
  CHECK(s == frozen);  // absorbing
}

TEST_CASE("empty-handed agents may cross traps except in reach") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  auto s = reset(spec, 6);
  const Rect trap = s.traps[0];
  s.agent = trap.center();
  const double a[3] = {0.01, 0.0, 0.0};
  CHECK(step(s, spec, a) == Status::running);
  auto rs = TaskSpec::make(TaskId::reach);
  auto r = reset(rs, 6);
  r.agent = {r.traps[0].x0 - 0.01, r.traps[0].center().y};
  const double in[3] = {0.03, 0.0, 0.0};
  CHECK(step(r, rs, in) == Status::failure);
}

TEST_CASE("horizon limit ends the episode as a timeout") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  auto s = reset(spec, 7);
  const double zero[3] = {0, 0, 0};
  int n = 0;
  while (!s.terminal()) {
    step(s, spec, zero);
    ++n;
  }
  CHECK(n == spec.horizon_limit);
  CHECK(s.timed_out);
  CHECK(s.status == Status::failure);
}

TEST_CASE("trap-free expert chunk heads straight for the object") {
  EnvParams p;
  p.n_traps = 0;
  auto spec = TaskSpec::make(TaskId::pick_place, p);
  auto s = reset(spec, 8);
  auto chunk = expert_chunk(s, spec, 4);
  REQUIRE(chunk.size() == 12);
  const Vec2 dir = s.objects[0] - s.agent;
  const Vec2 first{chunk[0], chunk[1]};
  const double cosang = (dir.x * first.x + dir.y * first.y) / (dir.norm() * first.norm());
  CHECK(cosang == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(first.norm() == doctest::Approx(std::min(0.05, dir.norm())));
  auto run = run_expert(s, spec);
  CHECK(run.status == Status::success);
  CHECK(static_cast<int>(run.actions.size()) < spec.horizon_limit);
}

TEST_CASE("expert solves 1000 configs per task and never carries through a trap") {
  for (auto task : kAllTasks) {
    auto spec = TaskSpec::make(task);
    int solved = 0;
    for (int c = 0; c < 1000; ++c) {
      auto s = reset(spec, c);
      auto run = run_expert(s, spec);
      solved += run.status == Status::success;
      // Replay checking every carrying step against every trap.
      for (const auto& a : run.actions) {
        const bool carrying = s.holding;
        step(s, spec, a);
        if (carrying || task == TaskId::reach)
          for (const auto& r : s.traps) CHECK_FALSE(r.contains_strict(s.agent));
      }
    }
    CHECK(solved == 1000);
  }
}

TEST_CASE("observation layout") {
  auto spec = TaskSpec::make(TaskId::two_object_sequence);
  auto s = reset(spec, 9);
  auto o = observe(s, spec);
  REQUIRE(o.size() == observation_dim(spec.params));
  CHECK(o[0] == s.agent.x);
  CHECK(o[2] == s.objects[0].x - s.agent.x);
  CHECK(o[5] == s.goals[0].y - s.agent.y);
  CHECK(o[6] == 0.0);
  CHECK(o[8] == s.traps[0].x0 - s.agent.x);
  CHECK(task_onehot(TaskId::two_object_sequence) == std::vector<double>{0, 0, 1});
}

TEST_CASE("correction of a mid-carry timeout replays to success") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  for (std::int64_t c = 0; c < 20; ++c) {
    auto s0 = reset(spec, c);
    auto run = run_expert(s0, spec);
    // Keep the expert until it has grasped, then hover with the gripper closed.
    data::Trajectory t;
    t.task = TaskId::pick_place;
    t.config_id = c;
    auto s = s0;
    std::size_t i = 0;
    while (!s.holding) {
      t.steps.push_back({observe(s, spec), run.actions[i]});
      step(s, spec, run.actions[i++]);
    }
    const std::vector<double> hover{0.0, 0.0, 1.0};
    while (!s.terminal()) {
      t.steps.push_back({observe(s, spec), hover});
      step(s, spec, hover);
    }
    REQUIRE(s.timed_out);
    t.outcome = data::Outcome::failure;
    REQUIRE(data::replay(t, spec).timed_out);

    auto fixed = replan_correction(t, spec);
    CHECK(fixed.outcome == data::Outcome::corrected);
    REQUIRE(fixed.correction_start >= 0);
    REQUIRE(fixed.correction_start < static_cast<std::int64_t>(fixed.steps.size()));
    CHECK(data::replay(fixed, spec).status == Status::success);
    for (std::int64_t k = 0; k < fixed.correction_start; ++k) CHECK(fixed.steps[k] == t.steps[k]);
    CHECK(fixed.config_id == t.config_id);
  }
}

TEST_CASE("correction of a trap entry keeps the pre-entry prefix") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  int corrected = 0;
  for (std::int64_t c = 0; c < 40; ++c) {
    auto s = reset(spec, c);
    auto run = run_expert(s, spec);
    data::Trajectory t;
    t.task = TaskId::pick_place;
    t.config_id = c;
    std::size_t i = 0;
    while (!s.holding) {
      t.steps.push_back({observe(s, spec), run.actions[i]});
      step(s, spec, run.actions[i++]);
    }
    // Drive straight at the nearest trap centre while holding.
    const Vec2 target = s.traps[0].center();
    while (!s.terminal()) {
      Vec2 d = target - s.agent;
      const double n = d.norm();
      if (n > 0.05) d = d * (0.05 / n);
      std::vector<double> a{d.x, d.y, 1.0};
      t.steps.push_back({observe(s, spec), a});
      step(s, spec, a);
    }
    if (s.timed_out) continue;
    t.outcome = data::Outcome::failure;
    auto fixed = replan_correction(t, spec);
    CHECK(data::replay(fixed, spec).status == Status::success);
    CHECK(fixed.correction_start < static_cast<std::int64_t>(t.steps.size()));
    ++corrected;
  }
  CHECK(corrected > 20);
}

TEST_CASE("correction preconditions") {
  auto spec = TaskSpec::make(TaskId::pick_place);
  auto run = run_expert(reset(spec, 1), spec);
  auto t = from_run(run, TaskId::pick_place, 1);
  REQUIRE(t.outcome == data::Outcome::success);
  CHECK_THROWS_AS(replan_correction(t, spec), ContractError);
  t.outcome = data::Outcome::corrected;
  t.correction_start = 0;
  CHECK_THROWS_AS(replan_correction(t, spec), ContractError);
}

TEST_CASE("env parameter validation") {
  EnvParams p;
  p.expert_clearance = 0.01;
  CHECK_THROWS_AS(TaskSpec::make(TaskId::reach, p), ConfigError);
  p = {};
  p.trap_max = 0.01;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK(parse_task(to_string(TaskId::two_object_sequence)) == TaskId::two_object_sequence);
  CHECK_THROWS_AS(parse_task("stack"), ConfigError);
}
