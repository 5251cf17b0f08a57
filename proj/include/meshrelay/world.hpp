#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "meshrelay/geometry.hpp"
#include "meshrelay/unicycle.hpp"

namespace meshrelay {

/// Static environment: wall segments inside a bounding rectangle.
struct World {
  std::vector<Segment> walls;
  Bounds bounds;
  friend bool operator==(const World&, const World&) = default;
};

struct ScanHit {
  Vec2 point{};
  double dist = 0.0;
};

/// Simulated range finder: nearest point among wall segments and other
/// robots (treated as point obstacles) within the sensor range.
inline std::optional<ScanHit> lrf_scan(const UnicyclePose& pose, const World& world,
                                       std::span<const Vec2> neighbor_positions,
                                       double range) {
  std::optional<ScanHit> best;
  auto consider = [&](Vec2 pt) {
    const double d = distance(pose.position, pt);
    if (d > range) return;
    if (!best || d < best->dist) best = ScanHit{pt, d};
  };
  for (const Segment& w : world.walls) consider(closest_point_on_segment(w, pose.position));
  for (Vec2 p : neighbor_positions) consider(p);
  return best;
}

/// Avoidance trigger: the obstacle is closer than the threshold and the
/// commanded velocity has a component toward it. Exactly at the threshold
/// the task stays off.
inline bool obstacle_active(Vec2 p, Vec2 v_cmd, Vec2 p_o, double d_threshold) {
  return distance(p, p_o) < d_threshold && dot(v_cmd, p_o - p) > 0.0;
}

/// Distance from p to the nearest wall, unbounded range.
inline double nearest_wall_distance(const World& world, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& w : world.walls) best = std::min(best, distance_to_segment(w, p));
  return best;
}

}  // namespace meshrelay
