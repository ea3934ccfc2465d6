#pragma once

#include <cmath>

namespace afil::envs {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Axis-aligned, closed.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool operator==(const Rect&) const = default;
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool contains_strict(Vec2 p, double tol = 1e-9) const {
    return p.x > x0 + tol && p.x < x1 - tol && p.y > y0 + tol && p.y < y1 - tol;
  }
  Rect inflated(double r) const { return {x0 - r, y0 - r, x1 + r, y1 + r}; }
  Vec2 center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
};

// True when segment ab passes through the open interior of r. Segments that
// only graze the boundary (along an edge or through a corner) do not count.
bool segment_crosses_interior(Vec2 a, Vec2 b, const Rect& r, double tol = 1e-9);

Vec2 clamp_to_arena(Vec2 p);
bool in_arena(Vec2 p);

}  // namespace afil::envs
