#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace imgep {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  double norm() const { return std::hypot(x, y); }
};

/// Configuration of the arena at one instant. Positions are in the scene
/// frame [-1, 1]^2 with the arm base at the origin.
struct SceneState {
  std::vector<double> joint_angles;
  Vec2 ball;
  bool grasped = false;
  std::optional<Vec2> distractor;

  friend bool operator==(const SceneState&, const SceneState&) = default;
};

}  // namespace imgep
