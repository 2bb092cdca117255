#include "imgep/dmp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imgep/error.hpp"

namespace imgep {

DmpParams::DmpParams(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() % kDmpParamsPerJoint != 0) {
    throw ArgumentError("DMP parameter count must be a multiple of " + std::to_string(kDmpParamsPerJoint));
  }
  for (double& v : values_) v = std::clamp(v, -1.0, 1.0);
}

DmpConfig DmpConfig::standard(int episode_steps, double tau) {
  DmpConfig cfg;
  cfg.tau = tau;
  cfg.dt = tau / episode_steps;
  for (int i = 0; i < kDmpBasis; ++i) {
    double t = static_cast<double>(i) / (kDmpBasis - 1);
    cfg.centers[i] = std::exp(-cfg.alpha_s * t);
  }
  // exp(-h (d/2)^2) = 1/2 at the midpoint between neighbouring centers.
  for (int i = 0; i < kDmpBasis; ++i) {
    double gap = i + 1 < kDmpBasis ? cfg.centers[i] - cfg.centers[i + 1] : cfg.centers[i - 1] - cfg.centers[i];
    cfg.widths[i] = std::numbers::ln2 / (0.25 * gap * gap);
  }
  return cfg;
}

void DmpConfig::validate(int episode_steps) const {
  if (!(dt > 0.0)) throw ArgumentError("dmp dt must be positive");
  if (!(tau > 0.0)) throw ArgumentError("dmp tau must be positive");
  for (double w : widths) {
    if (!(w > 0.0)) throw ArgumentError("dmp widths must be positive");
  }
  if (std::abs(episode_steps * dt - tau) > 1e-9 * tau) throw ArgumentError("dmp requires episode_steps * dt == tau");
}

std::array<double, kDmpBasis> basis_activations(double phase, const DmpConfig& cfg) {
  if (!(phase > 0.0)) throw ArgumentError("basis_activations: phase must be > 0");
  std::array<double, kDmpBasis> psi{};
  for (int i = 0; i < kDmpBasis; ++i) {
    double d = phase - cfg.centers[i];
    psi[i] = std::exp(-cfg.widths[i] * d * d);
  }
  return psi;
}

double dmp_goal(double goal_weight, double joint_limit) {
  double lo = -joint_limit;
  double hi = joint_limit;
  return lo + (goal_weight + 1.0) * 0.5 * (hi - lo);
}

JointTrajectory integrate(const DmpParams& params, std::span<const double> y0, const DmpConfig& cfg,
                          const EnvConfig& env) {
  const int joints = env.n_joints;
  if (params.n_joints() != joints || params.size() != static_cast<std::size_t>(joints * kDmpParamsPerJoint)) {
    throw ArgumentError("integrate: parameter count does not match n_joints x 8");
  }
  if (y0.size() != static_cast<std::size_t>(joints)) throw ArgumentError("integrate: y0 needs one angle per joint");

  const auto steps = static_cast<std::size_t>(env.episode_steps);
  JointTrajectory traj(steps, joints);
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> yd(joints, 0.0);
  std::vector<double> goal(joints);
  for (int j = 0; j < joints; ++j) goal[j] = dmp_goal(params.goal_weight(j), env.joint_limits[j]);

  double s = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    auto psi = basis_activations(s, cfg);
    double psi_sum = 0.0;
    for (double p : psi) psi_sum += p;
    for (int j = 0; j < joints; ++j) {
      auto w = params.weights(j);
      double num = 0.0;
      for (int i = 0; i < kDmpBasis; ++i) num += w[i] * psi[i];
      double forcing = cfg.weight_scale * num / psi_sum;
      double ydd = (cfg.alpha * (cfg.beta * (goal[j] - y[j]) - yd[j]) + s * forcing) / cfg.tau;
      y[j] += cfg.dt * yd[j];
      yd[j] += cfg.dt * ydd;
      if (!std::isfinite(y[j]) || !std::isfinite(yd[j])) throw NumericError("integrate: non-finite DMP state");
      traj(t, j) = std::clamp(y[j], -env.joint_limits[j], env.joint_limits[j]);
    }
    s -= cfg.dt * cfg.alpha_s * s / cfg.tau;
  }
  return traj;
}

DmpParams random_params(int n_joints, Rng& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n_joints) * kDmpParamsPerJoint);
  for (double& x : v) x = uni(rng);
  return DmpParams(std::move(v));
}

}  // namespace imgep
