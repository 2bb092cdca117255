#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "imgep/exploration.hpp"
#include "imgep/scene.hpp"

namespace imgep {

inline constexpr int kCoverageBins = 30;

/// Regular grid over a box, tracking which cells have been visited.
/// Points outside the box count in the nearest edge cell.
class CoverageGrid {
 public:
  CoverageGrid(std::vector<double> lo, std::vector<double> hi, int bins = kCoverageBins);

  static CoverageGrid ball_arena(int bins = kCoverageBins) { return CoverageGrid({-1.0, -1.0}, {1.0, 1.0}, bins); }

  std::size_t dim() const { return lo_.size(); }
  int bins() const { return bins_; }
  std::size_t cell_count() const;
  std::size_t occupied() const { return occupied_.size(); }

  std::size_t cell_index(std::span<const double> point) const;
  // Returns true when the point lands in a new cell.
  bool add(std::span<const double> point);

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
  int bins_;
  std::set<std::size_t> occupied_;
};

std::size_t coverage(std::span<const Vec2> points, std::span<const double> lo, std::span<const double> hi,
                     int bins = kCoverageBins);

// Final ball positions of the history, in episode order.
std::vector<Vec2> ball_positions(const History& history);
// Hand positions, read from the first two engineered features.
std::vector<Vec2> hand_positions(const History& history);

/// series[i] = number of ball cells reached during episodes 0..i.
std::vector<std::size_t> exploration_curve(std::span<const Vec2> ball_positions, std::span<const double> lo,
                                           std::span<const double> hi, int bins = kCoverageBins);
std::vector<std::size_t> exploration_curve(const History& history, int bins = kCoverageBins);

struct SlopeChange {
  double rate_before = 0.0;
  double rate_after = 0.0;
};

/// Least-squares slopes of the series over [switch - window, switch] and
/// [switch, switch + window], indices being 0-based episodes.
SlopeChange slope_change(std::span<const std::size_t> series, std::size_t switch_episode, std::size_t window = 500);

// Least-squares slope of y against x = 0, 1, ...
double least_squares_slope(std::span<const double> y);

/// Writes `scatter.csv` (episode,end_x,end_y,ball_x,ball_y[,distractor_x,distractor_y])
/// and `curve.csv` (episode,cells_occupied) into `dir`.
void export_history(const History& history, const std::filesystem::path& dir, int bins = kCoverageBins);

}  // namespace imgep
