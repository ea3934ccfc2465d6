#pragma once

#include <span>
#include <vector>

#include "afil/envs/geometry.hpp"

namespace afil::envs {

// Shortest collision-free polyline from start to goal around the rectangles,
// found on the visibility graph of their corners inflated by `margin`. A
// rectangle whose inflated box already contains start or goal blocks only its
// original extent (so a start hugging a trap can still leave). Corners outside
// the arena are dropped. Throws PlanError when no path exists or when start or
// goal lies inside an original rectangle.
std::vector<Vec2> plan_path(Vec2 start, Vec2 goal, std::span<const Rect> obstacles, double margin);

double path_length(std::span<const Vec2> path);

// Point at arc length s along the polyline (clamped to its end).
Vec2 advance_along(std::span<const Vec2> path, double s);

}  // namespace afil::envs
