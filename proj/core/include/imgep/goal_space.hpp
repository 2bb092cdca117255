#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imgep/env.hpp"
#include "imgep/interest.hpp"
#include "imgep/random.hpp"

namespace imgep {

/// The embedding R mapping an outcome to a point of the goal space.
class Representation {
 public:
  virtual ~Representation() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const Outcome& outcome) const = 0;
  virtual std::string name() const = 0;
};

/// Goal space made of the hand-designed scene features.
class EngineeredRepresentation final : public Representation {
 public:
  explicit EngineeredRepresentation(EnvVariant variant) : variant_(variant) {}
  std::size_t dim() const override { return feature_count(variant_); }
  std::vector<double> embed(const Outcome& outcome) const override { return outcome.engineered_features; }
  std::string name() const override { return "engineered"; }

 private:
  EnvVariant variant_;
};

/// Axis-aligned sampling box.
struct GoalBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> p) const;
};

/// Known physical bounds of the engineered feature space.
GoalBox engineered_bounds(const EnvConfig& cfg);

/// Per-dimension [min, max] of `points`, widened symmetrically so the total
/// width grows by the factor (1 + expansion).
GoalBox empirical_bounds(std::span<const std::vector<double>> points, double expansion);

/// One goal module {P_k, gamma(.|k), C_k} with its interest tracker.
class GoalModule {
 public:
  GoalModule(int id, std::string label, std::vector<std::size_t> dims, InterestTracker tracker);

  int id() const { return id_; }
  const std::string& label() const { return label_; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  // Bounds are given in the full goal space and restricted to dims().
  void set_bounds(const GoalBox& full_space);
  bool has_bounds() const { return box_.has_value(); }
  const GoalBox& bounds() const;

  std::vector<double> project(std::span<const double> embedding) const;

  // Euclidean distance between the goal and the projected embedding.
  double cost(std::span<const double> goal, std::span<const double> embedding) const;

  InterestTracker& interest() { return interest_; }
  const InterestTracker& interest() const { return interest_; }

 private:
  int id_;
  std::string label_;
  std::vector<std::size_t> dims_;
  std::optional<GoalBox> box_;
  InterestTracker interest_;
};

// Uniform draw from the module's box. Throws StateError when bounds are unset.
std::vector<double> sample_goal(const GoalModule& module, Rng& rng);

/// Throws ArgumentError unless the module dims partition [0, space_dim).
void validate_partition(std::span<const GoalModule> modules, std::size_t space_dim);

/// Module dims for a goal space: one module over every dim (flat goal
/// exploration), the engineered object split, or contiguous latent groups.
std::vector<std::vector<std::size_t>> single_module_partition(std::size_t space_dim);
std::vector<std::vector<std::size_t>> engineered_partition(EnvVariant variant);
std::vector<std::string> engineered_module_labels(EnvVariant variant);
std::vector<std::vector<std::size_t>> grouped_partition(std::size_t space_dim, std::size_t group_size);

}  // namespace imgep
