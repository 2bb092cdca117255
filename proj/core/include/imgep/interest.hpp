#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "imgep/random.hpp"

namespace imgep {

/// How a goal-reaching cost maps to a competence value.
///   kLinear:      competence = -cost
///   kExponential: competence = exp(-cost / scale), saturating in [0, 1]
enum class Competence { kLinear, kExponential };

std::string to_string(Competence c);
Competence parse_competence(const std::string& name);

/// Learning-progress estimate of one goal module.
///
/// Keeps the last `window` competences achieved on goals sampled from the
/// module. Once the window is full, interest is the absolute difference between
/// the mean competence of its newest half and of its oldest half.
class InterestTracker {
 public:
  explicit InterestTracker(std::size_t window = 40, Competence mode = Competence::kLinear, double scale = 1.0);

  double competence(double cost) const;
  void push(double cost);
  double interest() const { return interest_; }
  std::size_t window() const { return window_; }
  std::size_t count() const { return competences_.size(); }
  Competence mode() const { return mode_; }
  double scale() const { return scale_; }
  const std::deque<double>& competences() const { return competences_; }

 private:
  void recompute();

  std::size_t window_;
  Competence mode_;
  double scale_;
  std::deque<double> competences_;
  double interest_ = 0.0;
};

/// epsilon-uniform mixture with interest-proportional sampling; uniform when
/// every interest is zero.
std::vector<double> module_probabilities(std::span<const double> interests, double epsilon);

std::size_t sample_module(std::span<const double> interests, double epsilon, Rng& rng);

}  // namespace imgep
