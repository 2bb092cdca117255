#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imgep/dmp.hpp"
#include "imgep/error.hpp"
#include "oracles.hpp"

using namespace imgep;

TEST_CASE("basis activations") {
  auto cfg = DmpConfig::standard(50);
  CHECK(basis_activations(cfg.centers[0], cfg)[0] == 1.0);
  for (double s : {1.0, 0.7, 0.3, 0.05, 1e-6}) {
    auto psi = basis_activations(s, cfg);
    double sum = 0.0;
    // Far-away narrow kernels may underflow to exactly zero.
    CHECK(*std::max_element(psi.begin(), psi.end()) > 0.0);
    for (double p : psi) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    double norm = 0.0;
    for (double p : psi) norm += p / sum;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(basis_activations(0.0, cfg), ArgumentError);
  CHECK_THROWS_AS(basis_activations(-0.5, cfg), ArgumentError);
}

TEST_CASE("standard config: neighbours cross at half activation") {
  auto cfg = DmpConfig::standard(50);
  for (int i = 0; i + 1 < kDmpBasis; ++i) {
    double mid = 0.5 * (cfg.centers[i] + cfg.centers[i + 1]);
    double d = mid - cfg.centers[i];
    CHECK(std::exp(-cfg.widths[i] * d * d) == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(cfg.beta == cfg.alpha / 4);
  CHECK(50 * cfg.dt == doctest::Approx(cfg.tau));
  CHECK_NOTHROW(cfg.validate(50));
  CHECK_THROWS_AS(cfg.validate(40), ArgumentError);
}

TEST_CASE("parameter vector") {
  Rng rng(0);
  CHECK(random_params(6, rng).size() == 48);
  CHECK(random_params(7, rng).size() == 56);
  DmpParams clipped(std::vector<double>(8, 3.0));
  for (double v : clipped.values()) CHECK(v == 1.0);
  CHECK_THROWS_AS(DmpParams(std::vector<double>(9, 0.0)), ArgumentError);

  const int draws = 100000;
  std::vector<double> mean(48, 0.0);
  for (int i = 0; i < draws; ++i) {
    auto p = random_params(6, rng);
    for (std::size_t k = 0; k < 48; ++k) {
      REQUIRE(std::abs(p.values()[k]) <= 1.0);
      mean[k] += p.values()[k] / draws;
    }
  }
  for (double m : mean) CHECK(std::abs(m) < 0.01);
}

TEST_CASE("goal mapping is linear over the joint range") {
  const double lim = std::numbers::pi / 2;
  CHECK(dmp_goal(0.0, lim) == 0.0);
  CHECK(dmp_goal(-1.0, lim) == -lim);
  CHECK(dmp_goal(1.0, lim) == lim);
  CHECK(dmp_goal(0.5, lim) == doctest::Approx(lim / 2));
}

TEST_CASE("zero weights with the goal at the start hold still") {
  auto env = EnvConfig::arm_ball();
  auto cfg = DmpConfig::standard(env.episode_steps);
  std::vector<double> y0(env.n_joints);
  std::vector<double> raw(env.n_joints * kDmpParamsPerJoint, 0.0);
  for (int j = 0; j < env.n_joints; ++j) {
    raw[j * kDmpParamsPerJoint + kDmpBasis] = -0.8 + 0.3 * j;
    y0[j] = dmp_goal(raw[j * kDmpParamsPerJoint + kDmpBasis], env.joint_limits[j]);
  }
  auto traj = integrate(DmpParams(raw), y0, cfg, env);
  for (std::size_t t = 0; t < traj.steps(); ++t)
    for (int j = 0; j < env.n_joints; ++j) CHECK(std::abs(traj(t, j) - y0[j]) < 1e-9);
}

TEST_CASE("zero weights converge to the goal, matching the fine-step oracle") {
  auto env = EnvConfig::arm_two_balls();
  auto cfg = DmpConfig::standard(env.episode_steps);
  Rng rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<double> zero_w(kDmpBasis, 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> raw(env.n_joints * kDmpParamsPerJoint, 0.0);
    std::vector<double> y0(env.n_joints);
    for (int j = 0; j < env.n_joints; ++j) {
      raw[j * kDmpParamsPerJoint + kDmpBasis] = u(rng);
      y0[j] = 0.9 * env.joint_limits[j] * u(rng);
    }
    DmpParams params(raw);
    auto traj = integrate(params, y0, cfg, env);
    const std::size_t T = traj.steps();
    for (int j = 0; j < env.n_joints; ++j) {
      double g = dmp_goal(params.goal_weight(j), env.joint_limits[j]);
      double fine = oracle::dmp_final(zero_w, g, y0[j], cfg, env.episode_steps, 100);
      CHECK(std::abs(fine - g) < 1e-3);
      CHECK(std::abs(traj(T - 1, j) - g) < 1e-3);
      // Late steps settle monotonically.
      for (std::size_t t = T - 10; t + 1 < T; ++t) {
        double d0 = std::abs(traj(t, j) - traj(t - 1, j));
        double d1 = std::abs(traj(t + 1, j) - traj(t, j));
        CHECK(d1 <= d0 + 1e-15);
      }
    }
  }
}

TEST_CASE("forced trajectories agree with the oracle at the same step size") {
  auto env = EnvConfig::arm_ball();
  auto cfg = DmpConfig::standard(env.episode_steps);
  // Wide limits so clipping never interferes with the comparison.
  env.joint_limits.assign(env.n_joints, 100.0);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto params = random_params(env.n_joints, rng);
    std::vector<double> y0(env.n_joints, 0.0);
    auto traj = integrate(params, y0, cfg, env);
    for (int j = 0; j < env.n_joints; ++j) {
      double g = dmp_goal(params.goal_weight(j), env.joint_limits[j]);
      double ref = oracle::dmp_final(params.weights(j), g, 0.0, cfg, env.episode_steps, 1);
      CHECK(traj(traj.steps() - 1, j) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("integrate is deterministic and bounded") {
  auto env = EnvConfig::arm_ball();
  auto cfg = DmpConfig::standard(env.episode_steps);
  Rng rng(9);
  std::vector<double> y0(env.n_joints, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto params = random_params(env.n_joints, rng);
    auto a = integrate(params, y0, cfg, env);
    auto b = integrate(params, y0, cfg, env);
    CHECK(a == b);
    CHECK(a.steps() == static_cast<std::size_t>(env.episode_steps));
    for (std::size_t t = 0; t < a.steps(); ++t)
      for (int j = 0; j < env.n_joints; ++j) REQUIRE(std::abs(a(t, j)) <= env.joint_limits[j]);
  }
  CHECK_THROWS_AS(integrate(DmpParams::zeros(5), y0, cfg, env), ArgumentError);
  CHECK_THROWS_AS(integrate(DmpParams::zeros(6), std::vector<double>(3), cfg, env), ArgumentError);
}
