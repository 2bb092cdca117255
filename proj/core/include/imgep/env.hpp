#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "imgep/random.hpp"
#include "imgep/render.hpp"
#include "imgep/scene.hpp"

namespace imgep {

enum class EnvVariant { kArmBall, kArm2Balls };

std::string to_string(EnvVariant v);
EnvVariant parse_env_variant(const std::string& name);

struct EnvConfig {
  EnvVariant variant = EnvVariant::kArmBall;
  int n_joints = 6;
  std::vector<double> link_lengths;  // sums to 1
  std::vector<double> joint_limits;  // symmetric bound per joint, radians
  double grasp_radius = 0.1;
  double ring_radius = 0.5;           // ArmBall only
  double ball_start_angle = 0.0;      // ArmBall only, radians on the ring
  Vec2 ball_start{0.0, 0.0};          // Arm2Balls only
  Vec2 distractor_start{0.0, 0.0};    // Arm2Balls only
  double distractor_step_sigma = 0.0; // Arm2Balls only, per step and per axis
  int episode_steps = 50;

  static EnvConfig arm_ball();
  static EnvConfig arm_two_balls();

  // Throws ArgumentError when an invariant is broken.
  void validate() const;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

/// Row-major [steps x joints] table of joint angles.
class JointTrajectory {
 public:
  JointTrajectory() = default;
  JointTrajectory(std::size_t steps, std::size_t joints) : steps_(steps), joints_(joints), angles_(steps * joints) {}

  std::size_t steps() const { return steps_; }
  std::size_t joints() const { return joints_; }
  std::span<double> row(std::size_t t) { return {angles_.data() + t * joints_, joints_}; }
  std::span<const double> row(std::size_t t) const { return {angles_.data() + t * joints_, joints_}; }
  double& operator()(std::size_t t, std::size_t j) { return angles_[t * joints_ + j]; }
  double operator()(std::size_t t, std::size_t j) const { return angles_[t * joints_ + j]; }

  friend bool operator==(const JointTrajectory&, const JointTrajectory&) = default;

 private:
  std::size_t steps_ = 0;
  std::size_t joints_ = 0;
  std::vector<double> angles_;
};

struct Outcome {
  SceneState final_scene;
  Image image;
  std::vector<double> engineered_features;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

// Planar chain with relative joint angles; returns the end effector.
Vec2 forward_kinematics(std::span<const double> joint_angles, std::span<const double> link_lengths);

// Base followed by every joint and the end effector (n + 1 points).
std::vector<Vec2> chain_points(std::span<const double> joint_angles, std::span<const double> link_lengths);

SceneState initial_scene(const EnvConfig& cfg);

Vec2 distractor_step(Vec2 pos, double sigma, Rng& rng);

/// One simulation tick: joints track the clipped targets, the ball is
/// grasped on contact and then follows the hand for the rest of the episode.
SceneState step(const SceneState& state, std::span<const double> joint_targets, const EnvConfig& cfg, Rng& rng);

Outcome rollout(const EnvConfig& cfg, const JointTrajectory& trajectory, const SceneState& initial, Rng& rng,
                const RenderConfig& render_cfg = {});

/// ArmBall: [hand_x, hand_y, ball_r, ball_phi] with phi in [0, 2pi).
/// Arm2Balls: [hand_x, hand_y, ball_x, ball_y, distractor_x, distractor_y].
std::vector<double> engineered_features(const SceneState& scene, const EnvConfig& cfg);

std::size_t feature_count(EnvVariant variant);

// Angle of p in [0, 2pi).
double polar_angle(Vec2 p);

}  // namespace imgep
