#include "afil/envs/geometry.hpp"

#include <algorithm>

namespace afil::envs {

bool segment_crosses_interior(Vec2 a, Vec2 b, const Rect& r, double tol) {
  // Liang-Barsky clip against the closed rect, then test whether the clipped
  // piece leaves the boundary.
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
    if (t0 > t1) return false;
  }
  if ((t1 - t0) * d.norm() <= tol) return r.contains_strict(a + d * t0, tol);
  return r.contains_strict(a + d * ((t0 + t1) / 2.0), tol);
}

Vec2 clamp_to_arena(Vec2 p) { return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)}; }

bool in_arena(Vec2 p) { return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0; }

}  // namespace afil::envs
