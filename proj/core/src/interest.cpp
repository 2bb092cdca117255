#include "imgep/interest.hpp"

#include <cmath>
#include <numeric>

#include "imgep/error.hpp"

namespace imgep {

std::string to_string(Competence c) { return c == Competence::kExponential ? "exponential" : "linear"; }

Competence parse_competence(const std::string& name) {
  if (name == "linear") return Competence::kLinear;
  if (name == "exponential") return Competence::kExponential;
  throw ArgumentError("unknown competence mode: " + name);
}

InterestTracker::InterestTracker(std::size_t window, Competence mode, double scale)
    : window_(window), mode_(mode), scale_(scale) {
  if (window < 2 || window % 2 != 0) throw ArgumentError("interest window must be even and >= 2");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ArgumentError("competence scale must be finite and > 0");
}

double InterestTracker::competence(double cost) const {
  if (!std::isfinite(cost) || cost < 0.0) throw ArgumentError("interest cost must be finite and >= 0");
  return mode_ == Competence::kLinear ? -cost : std::exp(-cost / scale_);
}

void InterestTracker::push(double cost) {
  competences_.push_back(competence(cost));
  if (competences_.size() > window_) competences_.pop_front();
  recompute();
}

void InterestTracker::recompute() {
  if (competences_.size() < window_) {
    interest_ = 0.0;
    return;
  }
  const std::size_t half = window_ / 2;
  double old_sum = std::accumulate(competences_.begin(), competences_.begin() + half, 0.0);
  double new_sum = std::accumulate(competences_.begin() + half, competences_.end(), 0.0);
  interest_ = std::abs(new_sum / half - old_sum / half);
}

std::vector<double> module_probabilities(std::span<const double> interests, double epsilon) {
  if (interests.empty()) throw ArgumentError("module_probabilities: no modules");
  if (epsilon < 0.0 || epsilon > 1.0) throw ArgumentError("module_probabilities: epsilon must lie in [0, 1]");
  const double n = static_cast<double>(interests.size());
  double total = 0.0;
  for (double v : interests) {
    if (v < 0.0) throw ArgumentError("module_probabilities: negative interest");
    total += v;
  }
  std::vector<double> p(interests.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double greedy = total > 0.0 ? interests[i] / total : 1.0 / n;
    p[i] = epsilon / n + (1.0 - epsilon) * greedy;
  }
  return p;
}

std::size_t sample_module(std::span<const double> interests, double epsilon, Rng& rng) {
  auto p = module_probabilities(interests, epsilon);
  if (p.size() == 1) return 0;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

}  // namespace imgep
