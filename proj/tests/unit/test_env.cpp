#include <doctest.h>

#include <cmath>
#include <numbers>

#include "imgep/dmp.hpp"
#include "imgep/env.hpp"
#include "imgep/error.hpp"

using namespace imgep;
using std::numbers::pi;

namespace {

JointTrajectory constant_trajectory(const EnvConfig& cfg, std::span<const double> angles) {
  JointTrajectory t(cfg.episode_steps, cfg.n_joints);
  for (std::size_t s = 0; s < t.steps(); ++s)
    for (std::size_t j = 0; j < t.joints(); ++j) t(s, j) = angles[j];
  return t;
}

}  // namespace

TEST_CASE("forward kinematics of a two-link chain") {
  const std::vector<double> links{0.5, 0.5};
  Vec2 p = forward_kinematics(std::vector<double>{0.0, 0.0}, links);
  CHECK(p.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.y == doctest::Approx(0.0));

  p = forward_kinematics(std::vector<double>{pi / 2, 0.0}, links);
  CHECK(std::abs(p.x) < 1e-15);
  CHECK(p.y == doctest::Approx(1.0));

  p = forward_kinematics(std::vector<double>{pi / 4, pi / 4}, links);
  CHECK(p.x == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(p.y == doctest::Approx(0.5 / std::sqrt(2.0) + 0.5).epsilon(1e-14));

  CHECK_THROWS_AS(forward_kinematics(std::vector<double>{0.0}, links), ArgumentError);
}

TEST_CASE("end effector never leaves the unit disk") {
  auto cfg = EnvConfig::arm_two_balls();
  Rng rng(3);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> a(cfg.n_joints);
    for (auto& v : a) v = u(rng);
    CHECK(forward_kinematics(a, cfg.link_lengths).norm() <= 1.0 + 1e-12);
  }
}

TEST_CASE("default configs are valid") {
  CHECK_NOTHROW(EnvConfig::arm_ball().validate());
  CHECK_NOTHROW(EnvConfig::arm_two_balls().validate());
  CHECK(EnvConfig::arm_ball().n_joints == 6);
  CHECK(EnvConfig::arm_two_balls().n_joints == 7);

  auto bad = EnvConfig::arm_ball();
  bad.link_lengths[0] += 0.01;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = EnvConfig::arm_ball();
  bad.ring_radius = 1.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = EnvConfig::arm_ball();
  bad.grasp_radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("step clips targets and leaves a distant ball alone") {
  auto cfg = EnvConfig::arm_ball();
  auto s0 = initial_scene(cfg);
  Rng rng(1);
  std::vector<double> targets(cfg.n_joints, 0.0);
  targets[0] = -3.0;  // beyond the limit; hand ends on the negative y side
  auto s1 = step(s0, targets, cfg, rng);
  CHECK(s1.joint_angles[0] == -cfg.joint_limits[0]);
  CHECK_FALSE(s1.grasped);
  CHECK(s1.ball == s0.ball);
}

TEST_CASE("grasped ball in ArmBall is the hand's projection on the ring") {
  auto cfg = EnvConfig::arm_ball();
  SceneState s = initial_scene(cfg);
  s.grasped = true;
  Rng rng(1);
  std::vector<double> targets{0.3, 0.2, -0.1, 0.4, 0.0, 0.1};
  auto next = step(s, targets, cfg, rng);
  Vec2 hand = forward_kinematics(next.joint_angles, cfg.link_lengths);
  double phi = std::atan2(hand.y, hand.x);
  CHECK(next.ball.x == doctest::Approx(cfg.ring_radius * std::cos(phi)).epsilon(1e-15));
  CHECK(next.ball.y == doctest::Approx(cfg.ring_radius * std::sin(phi)).epsilon(1e-15));
}

TEST_CASE("distractor random walk") {
  Rng rng(5);
  CHECK(distractor_step({0.2, -0.4}, 0.0, rng) == Vec2{0.2, -0.4});

  for (int i = 0; i < 1000; ++i) {
    Vec2 p = distractor_step({1.0, 1.0}, 0.3, rng);
    CHECK(p.x <= 1.0);
    CHECK(p.y <= 1.0);
  }

  // One step equals the seeded draw.
  Rng a(17), b(17);
  std::normal_distribution<double> n(0.0, 1.0);
  double dx = n(b), dy = n(b);
  Vec2 p = distractor_step({0.0, 0.0}, 0.05, a);
  CHECK(p.x == 0.05 * dx);
  CHECK(p.y == 0.05 * dy);

  // Per-axis displacement std matches sigma.
  const double sigma = 0.05;
  for (int trials : {10000, 100000}) {
    Rng r(99);
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < trials; ++i) {
      Vec2 q = distractor_step({0.0, 0.0}, sigma, r);
      sx += q.x * q.x;
      sy += q.y * q.y;
    }
    const double tol = trials == 10000 ? 0.05 : 0.03;
    CHECK(std::abs(std::sqrt(sx / trials) - sigma) < tol * sigma);
    CHECK(std::abs(std::sqrt(sy / trials) - sigma) < tol * sigma);
  }
}

TEST_CASE("engineered features") {
  auto cfg = EnvConfig::arm_ball();
  SceneState s = initial_scene(cfg);
  s.ball = {cfg.ring_radius, 0.0};
  auto f = engineered_features(s, cfg);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(1.0));
  CHECK(f[2] == cfg.ring_radius);
  CHECK(f[3] == 0.0);

  s.ball = {0.0, -cfg.ring_radius};
  CHECK(engineered_features(s, cfg)[3] == doctest::Approx(3 * pi / 2).epsilon(1e-15));

  // Just below the positive x axis the angle is close to 2pi, not 0.
  s.ball = {cfg.ring_radius * std::cos(-1e-3), cfg.ring_radius * std::sin(-1e-3)};
  CHECK(engineered_features(s, cfg)[3] > 6.28);

  auto cfg2 = EnvConfig::arm_two_balls();
  SceneState s2 = initial_scene(cfg2);
  s2.joint_angles.assign(7, 0.0);
  s2.ball = {0.25, -0.5};
  s2.distractor = Vec2{-0.75, 0.125};
  auto g = engineered_features(s2, cfg2);
  Vec2 hand = forward_kinematics(s2.joint_angles, cfg2.link_lengths);
  CHECK(g == std::vector<double>{hand.x, hand.y, 0.25, -0.5, -0.75, 0.125});
}

TEST_CASE("rollout") {
  auto cfg = EnvConfig::arm_ball();
  auto start = initial_scene(cfg);

  SUBCASE("all-zero trajectory with the ball out of reach") {
    std::vector<double> zero(cfg.n_joints, 0.0);
    Rng rng(2);
    auto out = rollout(cfg, constant_trajectory(cfg, zero), start, rng);
    CHECK(out.final_scene.ball == start.ball);
    CHECK_FALSE(out.final_scene.grasped);
    CHECK(out.image.height() == 64);
  }

  SUBCASE("wrong trajectory shape") {
    Rng rng(2);
    CHECK_THROWS_AS(rollout(cfg, JointTrajectory(cfg.episode_steps - 1, cfg.n_joints), start, rng), ArgumentError);
    CHECK_THROWS_AS(rollout(cfg, JointTrajectory(cfg.episode_steps, cfg.n_joints + 1), start, rng), ArgumentError);
  }

  SUBCASE("sweeping through the ball grasps and drags it") {
    // Two-link reduction: joint 0 sweeps, joint 1 folds the arm so that the
    // hand sits on the ring (|hand| = 0.5 with links 0.5 + 0.5 when the
    // elbow angle is 2pi/3: 2 * 0.5 * cos(pi/3) = 0.5).
    EnvConfig two = cfg;
    two.n_joints = 2;
    two.link_lengths = {0.5, 0.5};
    two.joint_limits = {pi, pi};
    two.ball_start_angle = pi / 2;
    auto s0 = initial_scene(two);
    const double elbow = 2 * pi / 3;
    const double offset = -elbow / 2;  // hand heading = joint0 + elbow / 2
    JointTrajectory t(two.episode_steps, 2);
    for (std::size_t k = 0; k < t.steps(); ++k) {
      double heading = 0.0 + (pi - 0.0) * static_cast<double>(k) / (t.steps() - 1);
      t(k, 0) = heading + offset;
      t(k, 1) = elbow;
    }
    Rng rng(4);
    auto out = rollout(two, t, s0, rng);
    CHECK(out.final_scene.grasped);
    CHECK((out.final_scene.ball - s0.ball).norm() > 0.1);
    CHECK(std::abs(out.final_scene.ball.norm() - two.ring_radius) < 1e-9);
  }
}

TEST_CASE("rollout properties over random motor commands") {
  for (auto base : {EnvConfig::arm_ball(), EnvConfig::arm_two_balls()}) {
    auto dmp = DmpConfig::standard(base.episode_steps);
    auto start = initial_scene(base);
    Rng motor(11);
    for (int i = 0; i < 200; ++i) {
      auto params = random_params(base.n_joints, motor);
      auto traj = integrate(params, start.joint_angles, dmp, base);

      Rng r1(1000 + i), r2(1000 + i);
      auto a = rollout(base, traj, start, r1);
      auto b = rollout(base, traj, start, r2);
      CHECK(a == b);

      // Replay step by step to watch grasp monotonicity and reach.
      Rng r3(1000 + i);
      SceneState s = start;
      bool was_grasped = false;
      for (std::size_t t = 0; t < traj.steps(); ++t) {
        s = step(s, traj.row(t), base, r3);
        CHECK(forward_kinematics(s.joint_angles, base.link_lengths).norm() <= 1.0 + 1e-9);
        if (was_grasped) CHECK(s.grasped);
        was_grasped = s.grasped;
      }
      CHECK(s == a.final_scene);
      if (base.variant == EnvVariant::kArmBall && !a.final_scene.grasped) {
        CHECK(std::abs(a.final_scene.ball.norm() - base.ring_radius) < 1e-9);
      }
      if (base.variant == EnvVariant::kArmBall && a.final_scene.grasped) {
        CHECK(std::abs(a.final_scene.ball.norm() - base.ring_radius) < 1e-9);
      }
      for (double v : a.image.to_real()) REQUIRE((v >= 0.0 && v <= 1.0));
      CHECK(a.engineered_features.size() == feature_count(base.variant));
    }
  }
}

TEST_CASE("distractor trajectory does not depend on the actions") {
  auto cfg = EnvConfig::arm_two_balls();
  auto dmp = DmpConfig::standard(cfg.episode_steps);
  auto start = initial_scene(cfg);
  Rng motor(8);
  for (int i = 0; i < 20; ++i) {
    auto t1 = integrate(random_params(cfg.n_joints, motor), start.joint_angles, dmp, cfg);
    auto t2 = integrate(random_params(cfg.n_joints, motor), start.joint_angles, dmp, cfg);
    Rng r1(77 + i), r2(77 + i);
    SceneState a = start, b = start;
    for (std::size_t t = 0; t < t1.steps(); ++t) {
      a = step(a, t1.row(t), cfg, r1);
      b = step(b, t2.row(t), cfg, r2);
      REQUIRE(a.distractor.has_value());
      CHECK(*a.distractor == *b.distractor);
    }
  }
}
