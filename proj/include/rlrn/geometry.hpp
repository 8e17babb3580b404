#pragma once

#include <cmath>
#include <numbers>

namespace rlrn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// Position + heading; doubles as a rigid transform (rotate, then translate).
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  // Local -> world.
  Vec2 apply(Vec2 local) const { return rotate(local, heading) + position(); }
  // World -> local.
  Vec2 inverse_apply(Vec2 world) const { return rotate(world - position(), -heading); }
  Pose2 compose(const Pose2& inner) const {
    const Vec2 p = apply(inner.position());
    return {p.x, p.y, wrap_angle(heading + inner.heading)};
  }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

// Separating-axis overlap test for two oriented rectangles (length along heading).
bool boxes_overlap(const Pose2& a, const Pose2& b, double length, double width);

}  // namespace rlrn
