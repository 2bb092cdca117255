#include "imgep/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "imgep/error.hpp"

namespace imgep {

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

EnvConfig uniform_arm(int joints) {
  EnvConfig cfg;
  cfg.n_joints = joints;
  cfg.link_lengths.assign(joints, 1.0 / joints);
  cfg.joint_limits.assign(joints, std::numbers::pi / 2);
  return cfg;
}

}  // namespace

std::string to_string(EnvVariant v) { return v == EnvVariant::kArmBall ? "ArmBall" : "Arm2Balls"; }

EnvVariant parse_env_variant(const std::string& name) {
  if (name == "ArmBall") return EnvVariant::kArmBall;
  if (name == "Arm2Balls") return EnvVariant::kArm2Balls;
  throw ArgumentError("unknown environment variant: " + name);
}

EnvConfig EnvConfig::arm_ball() {
  EnvConfig cfg = uniform_arm(6);
  cfg.variant = EnvVariant::kArmBall;
  cfg.grasp_radius = 0.1;
  cfg.ring_radius = 0.5;
  cfg.ball_start_angle = std::numbers::pi / 2;
  return cfg;
}

EnvConfig EnvConfig::arm_two_balls() {
  EnvConfig cfg = uniform_arm(7);
  cfg.variant = EnvVariant::kArm2Balls;
  cfg.grasp_radius = 0.1;
  cfg.ball_start = {0.5, 0.5};
  cfg.distractor_start = {-0.5, -0.5};
  cfg.distractor_step_sigma = 0.05;
  return cfg;
}

void EnvConfig::validate() const {
  if (n_joints < 1) throw ArgumentError("n_joints must be >= 1");
  if (link_lengths.size() != static_cast<std::size_t>(n_joints) ||
      joint_limits.size() != static_cast<std::size_t>(n_joints)) {
    throw ArgumentError("link_lengths and joint_limits need one entry per joint");
  }
  for (double l : link_lengths) {
    if (!(l > 0.0)) throw ArgumentError("link lengths must be positive");
  }
  for (double l : joint_limits) {
    if (!(l > 0.0)) throw ArgumentError("joint limits must be positive");
  }
  double total = std::accumulate(link_lengths.begin(), link_lengths.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("link lengths must sum to 1");
  if (!(grasp_radius > 0.0)) throw ArgumentError("grasp_radius must be positive");
  if (episode_steps < 1) throw ArgumentError("episode_steps must be >= 1");
  if (variant == EnvVariant::kArmBall) {
    if (!(ring_radius > 0.0 && ring_radius < 1.0)) throw ArgumentError("ring_radius must lie in (0, 1)");
  } else {
    if (!(distractor_step_sigma >= 0.0)) throw ArgumentError("distractor_step_sigma must be >= 0");
  }
}

Vec2 forward_kinematics(std::span<const double> joint_angles, std::span<const double> link_lengths) {
  if (joint_angles.size() != link_lengths.size()) {
    throw ArgumentError("forward_kinematics: joint and link counts differ");
  }
  Vec2 p;
  double heading = 0.0;
  for (std::size_t i = 0; i < joint_angles.size(); ++i) {
    heading += joint_angles[i];
    p.x += link_lengths[i] * std::cos(heading);
    p.y += link_lengths[i] * std::sin(heading);
  }
  return p;
}

std::vector<Vec2> chain_points(std::span<const double> joint_angles, std::span<const double> link_lengths) {
  if (joint_angles.size() != link_lengths.size()) {
    throw ArgumentError("chain_points: joint and link counts differ");
  }
  std::vector<Vec2> points{{0.0, 0.0}};
  points.reserve(joint_angles.size() + 1);
  double heading = 0.0;
  for (std::size_t i = 0; i < joint_angles.size(); ++i) {
    heading += joint_angles[i];
    Vec2 p = points.back();
    points.push_back({p.x + link_lengths[i] * std::cos(heading), p.y + link_lengths[i] * std::sin(heading)});
  }
  return points;
}

double polar_angle(Vec2 p) {
  double phi = std::atan2(p.y, p.x);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  // A tiny negative angle rounds up to exactly 2pi.
  if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
  return phi;
}

SceneState initial_scene(const EnvConfig& cfg) {
  SceneState s;
  s.joint_angles.assign(cfg.n_joints, 0.0);
  if (cfg.variant == EnvVariant::kArmBall) {
    s.ball = {cfg.ring_radius * std::cos(cfg.ball_start_angle), cfg.ring_radius * std::sin(cfg.ball_start_angle)};
  } else {
    s.ball = cfg.ball_start;
    s.distractor = cfg.distractor_start;
  }
  return s;
}

Vec2 distractor_step(Vec2 pos, double sigma, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  double dx = noise(rng);
  double dy = noise(rng);
  return {clamp_unit(pos.x + sigma * dx), clamp_unit(pos.y + sigma * dy)};
}

SceneState step(const SceneState& state, std::span<const double> joint_targets, const EnvConfig& cfg, Rng& rng) {
  if (joint_targets.size() != static_cast<std::size_t>(cfg.n_joints)) {
    throw ArgumentError("step: expected one target per joint");
  }
  SceneState next = state;
  for (int j = 0; j < cfg.n_joints; ++j) {
    next.joint_angles[j] = std::clamp(joint_targets[j], -cfg.joint_limits[j], cfg.joint_limits[j]);
  }
  Vec2 hand = forward_kinematics(next.joint_angles, cfg.link_lengths);
  if (!next.grasped && (hand - next.ball).norm() <= cfg.grasp_radius) next.grasped = true;
  if (next.grasped) {
    if (cfg.variant == EnvVariant::kArmBall) {
      double phi = std::atan2(hand.y, hand.x);
      next.ball = {cfg.ring_radius * std::cos(phi), cfg.ring_radius * std::sin(phi)};
    } else {
      next.ball = {clamp_unit(hand.x), clamp_unit(hand.y)};
    }
  }
  if (next.distractor) next.distractor = distractor_step(*next.distractor, cfg.distractor_step_sigma, rng);
  return next;
}

Outcome rollout(const EnvConfig& cfg, const JointTrajectory& trajectory, const SceneState& initial, Rng& rng,
                const RenderConfig& render_cfg) {
  if (trajectory.steps() != static_cast<std::size_t>(cfg.episode_steps) ||
      trajectory.joints() != static_cast<std::size_t>(cfg.n_joints)) {
    throw ArgumentError("rollout: trajectory must be episode_steps x n_joints");
  }
  SceneState state = initial;
  for (std::size_t t = 0; t < trajectory.steps(); ++t) state = step(state, trajectory.row(t), cfg, rng);
  Outcome out;
  out.image = render(state, cfg.link_lengths, render_cfg);
  out.engineered_features = engineered_features(state, cfg);
  out.final_scene = std::move(state);
  return out;
}

std::size_t feature_count(EnvVariant variant) { return variant == EnvVariant::kArmBall ? 4 : 6; }

std::vector<double> engineered_features(const SceneState& scene, const EnvConfig& cfg) {
  Vec2 hand = forward_kinematics(scene.joint_angles, cfg.link_lengths);
  if (cfg.variant == EnvVariant::kArmBall) {
    return {hand.x, hand.y, scene.ball.norm(), polar_angle(scene.ball)};
  }
  Vec2 d = scene.distractor.value_or(Vec2{});
  return {hand.x, hand.y, scene.ball.x, scene.ball.y, d.x, d.y};
}

}  // namespace imgep
