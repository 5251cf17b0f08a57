#pragma once

#include <algorithm>
#include <cmath>
#include <compare>

namespace meshrelay {

constexpr double kPi = 3.14159265358979323846;

/// Planar position or velocity, meters / meters per second.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.y / s}; }
  Vec2& operator+=(Vec2 b) { x += b.x; y += b.y; return *this; }
  Vec2& operator-=(Vec2 b) { x -= b.x; y -= b.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr double norm_sq(Vec2 v) { return v.x * v.x + v.y * v.y; }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 midpoint(Vec2 a, Vec2 b) { return {(a.x + b.x) * 0.5, (a.y + b.y) * 0.5}; }

inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Closed line segment between two points.
struct Segment {
  Vec2 a;
  Vec2 b;
  friend constexpr bool operator==(const Segment&, const Segment&) = default;
};

inline double length(const Segment& s) { return distance(s.a, s.b); }

/// Point of the segment closest to p.
inline Vec2 closest_point_on_segment(const Segment& s, Vec2 p) {
  const Vec2 d = s.b - s.a;
  const double len2 = norm_sq(d);
  if (len2 == 0.0) return s.a;
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return s.a + t * d;
}

inline double distance_to_segment(const Segment& s, Vec2 p) {
  return distance(p, closest_point_on_segment(s, p));
}

namespace detail {
inline double orient(Vec2 a, Vec2 b, Vec2 c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}
inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}
}  // namespace detail

/// True when segments [p,q] and [r,s] share at least one point
/// (touching endpoints and collinear overlap count).
inline bool segments_intersect(Vec2 p, Vec2 q, Vec2 r, Vec2 s) {
  using detail::on_segment;
  using detail::orient;
  const double o1 = orient(p, q, r);
  const double o2 = orient(p, q, s);
  const double o3 = orient(r, s, p);
  const double o4 = orient(r, s, q);
  if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) &&
      o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
    return true;
  }
  if (o1 == 0 && on_segment(p, q, r)) return true;
  if (o2 == 0 && on_segment(p, q, s)) return true;
  if (o3 == 0 && on_segment(r, s, p)) return true;
  if (o4 == 0 && on_segment(r, s, q)) return true;
  return false;
}

/// Axis-aligned rectangle, used for world extents.
struct Bounds {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  bool contains(Vec2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  friend constexpr bool operator==(const Bounds&, const Bounds&) = default;
};

}  // namespace meshrelay
