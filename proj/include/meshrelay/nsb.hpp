#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "meshrelay/geometry.hpp"

namespace meshrelay {

/// Velocity-level task composition with null-space projection.
///
/// A task maps the robot position p to a value sigma = f(p) with Jacobian
/// J = df/dp (m x 2, m in {1,2}). The task velocity is
///     v = pinv(J) * (rate_d + gain * (sigma_d - sigma))
/// and lower-priority velocities are filtered through N = I - pinv(J)J of the
/// stacked higher-priority Jacobians, so they cannot disturb those tasks.

// Raised when an exact pseudo-inverse is requested for a rank-deficient
// Jacobian. Callers normally retry with damping.
struct SingularTask : std::runtime_error {
  SingularTask() : std::runtime_error("task Jacobian is singular") {}
};

// Raised when a distance-type task is evaluated at its own reference point.
struct DegeneratePosition : std::runtime_error {
  DegeneratePosition() : std::runtime_error("robot coincides with task reference point") {}
};

struct EmptyTaskList : std::runtime_error {
  EmptyTaskList() : std::runtime_error("compose called with no tasks") {}
};

// Exact-inverse rank tolerance and the threshold below which the
// damping fallback engages (both on the squared-singular-value scale).
constexpr double kSingularTol = 1e-12;
constexpr double kDampingActivation = 1e-6;

// Distance below which a point-distance task has no defined direction.
constexpr double kDefaultPosEpsilon = 1e-6;

constexpr std::size_t kMaxTaskRows = 8;

/// Task-space vector of runtime length <= kMaxTaskRows.
class TaskVec {
 public:
  TaskVec() = default;
  explicit TaskVec(double v) { push_back(v); }
  TaskVec(double v0, double v1) { push_back(v0); push_back(v1); }

  void push_back(double v) { data_[n_++] = v; }
  std::size_t size() const { return n_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  friend TaskVec operator-(const TaskVec& a, const TaskVec& b) {
    TaskVec r;
    for (std::size_t i = 0; i < a.n_; ++i) r.push_back(a.data_[i] - b.data_[i]);
    return r;
  }
  friend TaskVec operator+(const TaskVec& a, const TaskVec& b) {
    TaskVec r;
    for (std::size_t i = 0; i < a.n_; ++i) r.push_back(a.data_[i] + b.data_[i]);
    return r;
  }
  friend TaskVec operator*(double s, const TaskVec& a) {
    TaskVec r;
    for (std::size_t i = 0; i < a.n_; ++i) r.push_back(s * a.data_[i]);
    return r;
  }

  static TaskVec zeros(std::size_t n) {
    TaskVec r;
    for (std::size_t i = 0; i < n; ++i) r.push_back(0.0);
    return r;
  }

 private:
  std::array<double, kMaxTaskRows> data_{};
  std::size_t n_ = 0;
};

/// 2x2 matrix.
struct Mat2 {
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;

  static constexpr Mat2 identity() { return {1, 0, 0, 1}; }

  friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.m00 * v.x + m.m01 * v.y, m.m10 * v.x + m.m11 * v.y};
  }
  friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }
  friend constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.m00 - b.m00, a.m01 - b.m01, a.m10 - b.m10, a.m11 - b.m11};
  }
  double det() const { return m00 * m11 - m01 * m10; }
};

/// Smaller eigenvalue of a symmetric 2x2 matrix.
inline double min_eigenvalue_sym(const Mat2& m) {
  const double t = 0.5 * (m.m00 + m.m11);
  const double h = 0.5 * (m.m00 - m.m11);
  return t - std::sqrt(h * h + m.m01 * m.m01);
}

inline Mat2 inverse(const Mat2& m) {
  const double d = m.det();
  return {m.m11 / d, -m.m01 / d, -m.m10 / d, m.m00 / d};
}

/// m x 2 task Jacobian stored as gradient rows, m <= kMaxTaskRows.
class Jacobian {
 public:
  Jacobian() = default;
  explicit Jacobian(Vec2 row) { add_row(row); }
  Jacobian(Vec2 r0, Vec2 r1) { add_row(r0); add_row(r1); }

  void add_row(Vec2 r) { rows_[m_++] = r; }
  void append(const Jacobian& other) {
    for (std::size_t i = 0; i < other.m_; ++i) add_row(other.rows_[i]);
  }
  std::size_t rows() const { return m_; }
  Vec2 row(std::size_t i) const { return rows_[i]; }

  /// J * v
  TaskVec apply(Vec2 v) const {
    TaskVec r;
    for (std::size_t i = 0; i < m_; ++i) r.push_back(dot(rows_[i], v));
    return r;
  }

  /// J^T * w
  Vec2 apply_transpose(const TaskVec& w) const {
    Vec2 r{};
    for (std::size_t i = 0; i < m_; ++i) r += w[i] * rows_[i];
    return r;
  }

  /// J^T J (2x2).
  Mat2 gram() const {
    Mat2 g{};
    for (std::size_t i = 0; i < m_; ++i) {
      g.m00 += rows_[i].x * rows_[i].x;
      g.m01 += rows_[i].x * rows_[i].y;
      g.m11 += rows_[i].y * rows_[i].y;
    }
    g.m10 = g.m01;
    return g;
  }

  /// Smallest squared singular value of J that governs invertibility of the
  /// product J J^T: the 1x1 product itself for a single row, the smaller
  /// eigenvalue of the shared nonzero spectrum otherwise.
  double min_sq_singular_value() const {
    if (m_ == 0) return 0.0;
    if (m_ == 1) return norm_sq(rows_[0]);
    return min_eigenvalue_sym(gram());
  }

 private:
  std::array<Vec2, kMaxTaskRows> rows_{};
  std::size_t m_ = 0;
};

/// 2 x m pseudo-inverse stored as columns.
class PInv {
 public:
  void add_col(Vec2 c) { cols_[m_++] = c; }
  std::size_t cols() const { return m_; }
  Vec2 col(std::size_t i) const { return cols_[i]; }

  /// pinv(J) * w
  Vec2 apply(const TaskVec& w) const {
    Vec2 r{};
    for (std::size_t i = 0; i < m_; ++i) r += w[i] * cols_[i];
    return r;
  }

  /// pinv(J) * J (2x2).
  Mat2 times(const Jacobian& j) const {
    Mat2 p{};
    for (std::size_t i = 0; i < m_; ++i) {
      const Vec2 c = cols_[i];
      const Vec2 r = j.row(i);
      p.m00 += c.x * r.x;
      p.m01 += c.x * r.y;
      p.m10 += c.y * r.x;
      p.m11 += c.y * r.y;
    }
    return p;
  }

 private:
  std::array<Vec2, kMaxTaskRows> cols_{};
  std::size_t m_ = 0;
};

/// Pseudo-inverse of an m x 2 Jacobian, damped least squares when
/// damping > 0:  J^T (J J^T + damping^2 I)^-1, evaluated through the
/// equivalent 2x2 form (J^T J + damping^2 I)^-1 J^T so stacks taller than
/// two rows need no m x m inverse. With damping = 0 the exact pseudo-inverse
/// is returned; rank-2 stacks of any height use the full-column-rank form
/// (J^T J)^-1 J^T, which coincides with the Moore-Penrose inverse.
/// Throws SingularTask when damping = 0 and the Jacobian is rank deficient.
inline PInv damped_pinv(const Jacobian& j, double damping) {
  PInv p;
  const std::size_t m = j.rows();
  if (damping == 0.0) {
    if (m == 1) {
      const double s = norm_sq(j.row(0));
      if (s <= kSingularTol) throw SingularTask{};
      p.add_col(j.row(0) / s);
      return p;
    }
    if (j.min_sq_singular_value() <= kSingularTol) throw SingularTask{};
  }
  Mat2 a = j.gram();
  a.m00 += damping * damping;
  a.m11 += damping * damping;
  const Mat2 ainv = inverse(a);
  for (std::size_t i = 0; i < m; ++i) p.add_col(ainv * j.row(i));
  return p;
}

/// Null-space projector N = I - pinv(J)J of a stacked Jacobian. Exact when
/// the stack is well conditioned; the fallback damping (must be positive)
/// engages when the smallest squared singular value drops below
/// kDampingActivation, so this never throws.
inline Mat2 null_projector(const Jacobian& stack, double fallback_damping) {
  const double d = stack.min_sq_singular_value() < kDampingActivation ? fallback_damping : 0.0;
  const PInv p = damped_pinv(stack, d);
  return Mat2::identity() - p.times(stack);
}

enum class TaskKind { DistanceFromPoint, EqualDistance, MoveToGoal, ObstacleAvoid };

inline const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::DistanceFromPoint: return "distance_from_point";
    case TaskKind::EqualDistance: return "equal_distance";
    case TaskKind::MoveToGoal: return "move_to_goal";
    case TaskKind::ObstacleAvoid: return "obstacle_avoid";
  }
  return "?";
}

/// One prioritized elementary behaviour.
///   DistanceFromPoint: hold desired_distance from p1.
///   EqualDistance:     reach the perpendicular bisector of p1, p2.
///   MoveToGoal:        reach p1 (p2, desired_distance unused).
///   ObstacleAvoid:     hold desired_distance from obstacle point p1.
struct TaskRequest {
  TaskKind kind = TaskKind::MoveToGoal;
  Vec2 p1{};
  Vec2 p2{};
  double desired_distance = 0.0;
  double gain = 1.0;
};

/// Evaluated task: value sigma, Jacobian, targets and gain. The gain is the
/// scalar of a positive diagonal gain matrix.
struct TaskEval {
  TaskKind kind;
  TaskVec value;
  Jacobian jacobian;
  TaskVec desired_value;
  TaskVec desired_rate;
  double gain;
};

/// Evaluates a task at robot position p.
/// Throws DegeneratePosition when a distance-type task is evaluated within
/// eps_pos of its reference point (the unit direction is undefined there).
inline TaskEval eval_task(const TaskRequest& req, Vec2 p, double eps_pos = kDefaultPosEpsilon) {
  TaskEval e;
  e.kind = req.kind;
  e.gain = req.gain;
  switch (req.kind) {
    case TaskKind::DistanceFromPoint:
    case TaskKind::ObstacleAvoid: {
      const Vec2 r = p - req.p1;
      const double d = norm(r);
      if (d <= eps_pos) throw DegeneratePosition{};
      e.value = TaskVec(d);
      e.jacobian = Jacobian(r / d);
      e.desired_value = TaskVec(req.desired_distance);
      e.desired_rate = TaskVec(0.0);
      break;
    }
    case TaskKind::EqualDistance: {
      e.value = TaskVec(norm_sq(p - req.p1) - norm_sq(p - req.p2));
      e.jacobian = Jacobian(2.0 * (req.p2 - req.p1));
      e.desired_value = TaskVec(0.0);
      e.desired_rate = TaskVec(0.0);
      break;
    }
    case TaskKind::MoveToGoal: {
      e.value = TaskVec(p.x, p.y);
      e.jacobian = Jacobian(Vec2{1, 0}, Vec2{0, 1});
      e.desired_value = TaskVec(req.p1.x, req.p1.y);
      e.desired_rate = TaskVec::zeros(2);
      break;
    }
  }
  return e;
}

/// Closed-loop task velocity  v = pinv(J)(rate_d + gain * (sigma_d - sigma)).
/// Propagates SingularTask only when damping = 0.
inline Vec2 task_velocity(const TaskEval& e, double damping) {
  const TaskVec err = e.desired_value - e.value;
  const PInv p = damped_pinv(e.jacobian, damping);
  return p.apply(e.desired_rate + e.gain * err);
}

inline Vec2 saturate(Vec2 v, double v_max) {
  const double n = norm(v);
  if (n > v_max && n > 0.0) return v * (v_max / n);
  return v;
}

/// Prioritized composition, highest priority first:
///   v = v1 + N(J1) v2 + N([J1;J2]) v3 + ...
/// then norm-saturated to v_max. Each stage runs undamped while well
/// conditioned and switches to the given damping near rank loss.
inline Vec2 compose(std::span<const TaskEval> tasks, double damping, double v_max) {
  if (tasks.empty()) throw EmptyTaskList{};
  auto stage_damping = [&](const Jacobian& j) {
    return j.min_sq_singular_value() < kDampingActivation ? damping : 0.0;
  };
  Vec2 v = task_velocity(tasks[0], stage_damping(tasks[0].jacobian));
  Jacobian stack = tasks[0].jacobian;
  for (std::size_t k = 1; k < tasks.size(); ++k) {
    const Mat2 n = null_projector(stack, damping);
    v += n * task_velocity(tasks[k], stage_damping(tasks[k].jacobian));
    stack.append(tasks[k].jacobian);
  }
  return saturate(v, v_max);
}

}  // namespace meshrelay
