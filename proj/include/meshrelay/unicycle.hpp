#pragma once

#include <algorithm>
#include <cmath>

#include "meshrelay/geometry.hpp"

namespace meshrelay {

/// Pose of a differential-drive vehicle abstracted as a unicycle.
struct UnicyclePose {
  Vec2 position{};
  double heading = 0.0;  // wrapped to (-pi, pi]
  friend constexpr bool operator==(const UnicyclePose&, const UnicyclePose&) = default;
};

struct VelocityLimits {
  double u_max = 0.2;       // m/s
  double omega_max = 2.0;   // rad/s
  double heading_gain = 2.0;  // 1/s
};

struct UnicycleCommand {
  double u = 0.0;
  double omega = 0.0;
};

/// Turns a planar velocity reference into advancing and angular speed.
/// The advancing speed is scaled by cos of the heading error and clamped at
/// zero, so the vehicle turns in place when the reference points backwards.
inline UnicycleCommand unicycle_track(const UnicyclePose& pose, Vec2 v_des,
                                      const VelocityLimits& lim) {
  if (v_des.x == 0.0 && v_des.y == 0.0) return {0.0, 0.0};
  const double theta_e = wrap_angle(std::atan2(v_des.y, v_des.x) - pose.heading);
  const double omega = std::clamp(lim.heading_gain * theta_e, -lim.omega_max, lim.omega_max);
  const double u = std::min(norm(v_des) * std::max(0.0, std::cos(theta_e)), lim.u_max);
  return {u, omega};
}

/// Forward Euler step of the unicycle kinematics; exact for omega = 0.
inline UnicyclePose integrate(const UnicyclePose& pose, double u, double omega, double dt) {
  UnicyclePose next;
  next.position.x = pose.position.x + u * std::cos(pose.heading) * dt;
  next.position.y = pose.position.y + u * std::sin(pose.heading) * dt;
  next.heading = wrap_angle(pose.heading + omega * dt);
  return next;
}

}  // namespace meshrelay
