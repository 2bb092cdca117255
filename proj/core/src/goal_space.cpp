#include "imgep/goal_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imgep/error.hpp"

namespace imgep {

bool GoalBox::contains(std::span<const double> p) const {
  if (p.size() != lo.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  }
  return true;
}

GoalBox engineered_bounds(const EnvConfig& cfg) {
  if (cfg.variant == EnvVariant::kArmBall) {
    return {{-1.0, -1.0, cfg.ring_radius, 0.0}, {1.0, 1.0, cfg.ring_radius, 2.0 * std::numbers::pi}};
  }
  return {std::vector<double>(6, -1.0), std::vector<double>(6, 1.0)};
}

GoalBox empirical_bounds(std::span<const std::vector<double>> points, double expansion) {
  if (points.empty()) throw ArgumentError("empirical_bounds: no points");
  if (expansion < 0.0) throw ArgumentError("empirical_bounds: negative expansion");
  GoalBox box{points.front(), points.front()};
  for (const auto& p : points) {
    if (p.size() != box.dim()) throw ArgumentError("empirical_bounds: inconsistent dimensions");
    for (std::size_t i = 0; i < p.size(); ++i) {
      box.lo[i] = std::min(box.lo[i], p[i]);
      box.hi[i] = std::max(box.hi[i], p[i]);
    }
  }
  for (std::size_t i = 0; i < box.dim(); ++i) {
    double pad = 0.5 * expansion * (box.hi[i] - box.lo[i]);
    box.lo[i] -= pad;
    box.hi[i] += pad;
  }
  return box;
}

GoalModule::GoalModule(int id, std::string label, std::vector<std::size_t> dims, InterestTracker tracker)
    : id_(id), label_(std::move(label)), dims_(std::move(dims)), interest_(std::move(tracker)) {
  if (dims_.empty()) throw ArgumentError("goal module needs at least one dimension");
}

void GoalModule::set_bounds(const GoalBox& full_space) {
  GoalBox box;
  for (std::size_t d : dims_) {
    if (d >= full_space.dim()) throw ArgumentError("goal module dimension outside the goal space");
    if (full_space.lo[d] > full_space.hi[d]) throw ArgumentError("goal box bounds are not ordered");
    box.lo.push_back(full_space.lo[d]);
    box.hi.push_back(full_space.hi[d]);
  }
  box_ = std::move(box);
}

const GoalBox& GoalModule::bounds() const {
  if (!box_) throw StateError("goal module bounds are not initialized");
  return *box_;
}

std::vector<double> GoalModule::project(std::span<const double> embedding) const {
  std::vector<double> out;
  out.reserve(dims_.size());
  for (std::size_t d : dims_) {
    if (d >= embedding.size()) throw ArgumentError("project: embedding too short for module");
    out.push_back(embedding[d]);
  }
  return out;
}

double GoalModule::cost(std::span<const double> goal, std::span<const double> embedding) const {
  if (goal.size() != dims_.size()) throw ArgumentError("cost: goal dimension does not match module");
  double acc = 0.0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    double d = goal[i] - embedding[dims_[i]];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::vector<double> sample_goal(const GoalModule& module, Rng& rng) {
  const GoalBox& box = module.bounds();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> goal(box.dim());
  for (std::size_t i = 0; i < goal.size(); ++i) {
    double u = uni(rng);
    goal[i] = box.lo[i] == box.hi[i] ? box.lo[i] : box.lo[i] + u * (box.hi[i] - box.lo[i]);
  }
  return goal;
}

void validate_partition(std::span<const GoalModule> modules, std::size_t space_dim) {
  std::vector<int> seen(space_dim, 0);
  for (const auto& m : modules) {
    for (std::size_t d : m.dims()) {
      if (d >= space_dim) throw ArgumentError("module dimension outside the goal space");
      if (seen[d]++) throw ArgumentError("goal modules overlap");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ArgumentError("goal modules do not cover the goal space");
  }
}

std::vector<std::vector<std::size_t>> single_module_partition(std::size_t space_dim) {
  std::vector<std::size_t> all(space_dim);
  for (std::size_t i = 0; i < space_dim; ++i) all[i] = i;
  return {all};
}

std::vector<std::vector<std::size_t>> engineered_partition(EnvVariant variant) {
  if (variant == EnvVariant::kArmBall) return {{0, 1}, {2, 3}};
  return {{0, 1}, {2, 3}, {4, 5}};
}

std::vector<std::string> engineered_module_labels(EnvVariant variant) {
  if (variant == EnvVariant::kArmBall) return {"hand", "ball"};
  return {"hand", "ball", "distractor"};
}

std::vector<std::vector<std::size_t>> grouped_partition(std::size_t space_dim, std::size_t group_size) {
  if (group_size == 0) throw ArgumentError("module group size must be positive");
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t start = 0; start < space_dim; start += group_size) {
    std::vector<std::size_t> g;
    for (std::size_t d = start; d < std::min(space_dim, start + group_size); ++d) g.push_back(d);
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace imgep
