#include "afil/envs/planner.hpp"

#include <limits>
#include <queue>

#include "afil/core/error.hpp"

namespace afil::envs {

std::vector<Vec2> plan_path(Vec2 start, Vec2 goal, std::span<const Rect> obstacles, double margin) {
  // Corners sit a hair outside the inflated box so edges between them never
  // register as interior crossings of that same box.
  const double corner_pad = margin + 1e-7;
  std::vector<Rect> blockers;
  blockers.reserve(obstacles.size());
  for (const Rect& r : obstacles) {
    if (r.contains_strict(start) || r.contains_strict(goal))
      throw PlanError("plan endpoint lies inside an obstacle");
    const Rect big = r.inflated(margin);
    blockers.push_back(big.contains_strict(start) || big.contains_strict(goal) ? r : big);
  }
  auto visible = [&](Vec2 a, Vec2 b) {
    for (const Rect& r : blockers)
      if (segment_crosses_interior(a, b, r)) return false;
    return true;
  };

  std::vector<Vec2> nodes{start, goal};
  for (const Rect& r : obstacles) {
    const Rect c = r.inflated(corner_pad);
    for (Vec2 p : {Vec2{c.x0, c.y0}, Vec2{c.x1, c.y0}, Vec2{c.x1, c.y1}, Vec2{c.x0, c.y1}}) {
      if (!in_arena(p)) continue;
      bool inside = false;
      for (const Rect& b : blockers) inside = inside || b.contains_strict(p);
      if (!inside) nodes.push_back(p);
    }
  }

  const std::size_t n = nodes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> prev(n, n);
  std::vector<char> done(n, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[0] = 0.0;
  open.push({0.0, 0});
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (u == 1) break;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v] || !visible(nodes[u], nodes[v])) continue;
      const double nd = d + distance(nodes[u], nodes[v]);
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
        open.push({nd, v});
      }
    }
  }
  if (!done[1]) throw PlanError("no collision-free path to target");
  std::vector<Vec2> path;
  for (std::size_t v = 1; v != n; v = prev[v]) path.push_back(nodes[v]);
  return {path.rbegin(), path.rend()};
}

double path_length(std::span<const Vec2> path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += distance(path[i - 1], path[i]);
  return total;
}

Vec2 advance_along(std::span<const Vec2> path, double s) {
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double seg = distance(path[i - 1], path[i]);
    if (s <= seg) return seg == 0.0 ? path[i] : path[i - 1] + (path[i] - path[i - 1]) * (s / seg);
    s -= seg;
  }
  return path.back();
}

}  // namespace afil::envs
