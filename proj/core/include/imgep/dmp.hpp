#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "imgep/env.hpp"
#include "imgep/random.hpp"

namespace imgep {

inline constexpr int kDmpBasis = 7;
inline constexpr int kDmpParamsPerJoint = kDmpBasis + 1;

/// Flat motor parameter vector: per joint, 7 basis weights then the raw goal
/// weight. Entries are clipped to [-1, 1] on construction.
class DmpParams {
 public:
  DmpParams() = default;
  explicit DmpParams(std::vector<double> values);

  static DmpParams zeros(int n_joints) { return DmpParams(std::vector<double>(n_joints * kDmpParamsPerJoint, 0.0)); }

  std::size_t size() const { return values_.size(); }
  int n_joints() const { return static_cast<int>(values_.size() / kDmpParamsPerJoint); }
  std::span<const double> values() const { return values_; }
  std::span<const double> weights(int joint) const {
    return std::span<const double>(values_).subspan(joint * kDmpParamsPerJoint, kDmpBasis);
  }
  double goal_weight(int joint) const { return values_[joint * kDmpParamsPerJoint + kDmpBasis]; }

  friend bool operator==(const DmpParams&, const DmpParams&) = default;

 private:
  std::vector<double> values_;
};

struct DmpConfig {
  double alpha = 25.0;
  double beta = 25.0 / 4.0;
  double alpha_s = 3.0;
  double tau = 1.0;
  double dt = 1.0 / 50.0;
  std::array<double, kDmpBasis> centers{};
  std::array<double, kDmpBasis> widths{};
  double weight_scale = 200.0;

  /// Textbook gains, basis peaks equally spaced in time over `tau`, adjacent
  /// basis functions crossing at half activation.
  static DmpConfig standard(int episode_steps, double tau = 1.0);

  void validate(int episode_steps) const;

  friend bool operator==(const DmpConfig&, const DmpConfig&) = default;
};

// psi_i(s) = exp(-width_i (s - center_i)^2).
std::array<double, kDmpBasis> basis_activations(double phase, const DmpConfig& cfg);

/// Euler integration of one discrete DMP per joint, starting at rest at `y0`.
/// The goal of joint j is its raw goal weight mapped linearly onto
/// [-limit_j, limit_j]. Rows are the angles after each step, clipped to limits.
JointTrajectory integrate(const DmpParams& params, std::span<const double> y0, const DmpConfig& cfg,
                          const EnvConfig& env);

// Goal angle of one joint for a raw goal weight in [-1, 1].
double dmp_goal(double goal_weight, double joint_limit);

DmpParams random_params(int n_joints, Rng& rng);

}  // namespace imgep
