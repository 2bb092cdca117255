#include "imgep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "imgep/csv.hpp"
#include "imgep/error.hpp"

namespace imgep {

CoverageGrid::CoverageGrid(std::vector<double> lo, std::vector<double> hi, int bins)
    : lo_(std::move(lo)), hi_(std::move(hi)), bins_(bins) {
  if (lo_.empty() || lo_.size() != hi_.size()) throw ArgumentError("coverage grid: bounds dimension mismatch");
  if (bins_ < 1) throw ArgumentError("coverage grid: bins must be >= 1");
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] < hi_[i])) throw ArgumentError("coverage grid: degenerate bounds");
  }
}

std::size_t CoverageGrid::cell_count() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < dim(); ++i) n *= static_cast<std::size_t>(bins_);
  return n;
}

std::size_t CoverageGrid::cell_index(std::span<const double> point) const {
  if (point.size() != dim()) throw ArgumentError("coverage grid: point dimension mismatch");
  std::size_t index = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (std::isnan(point[i])) throw ArgumentError("coverage grid: NaN coordinate");
    double u = (point[i] - lo_[i]) / (hi_[i] - lo_[i]) * bins_;
    long long cell = static_cast<long long>(std::floor(std::clamp(u, 0.0, static_cast<double>(bins_))));
    cell = std::clamp<long long>(cell, 0, bins_ - 1);
    index = index * bins_ + static_cast<std::size_t>(cell);
  }
  return index;
}

bool CoverageGrid::add(std::span<const double> point) { return occupied_.insert(cell_index(point)).second; }

std::size_t coverage(std::span<const Vec2> points, std::span<const double> lo, std::span<const double> hi, int bins) {
  CoverageGrid grid({lo.begin(), lo.end()}, {hi.begin(), hi.end()}, bins);
  if (grid.dim() != 2) throw ArgumentError("coverage: expected 2-D bounds");
  for (Vec2 p : points) {
    const double xy[2] = {p.x, p.y};
    grid.add(xy);
  }
  return grid.occupied();
}

std::vector<Vec2> ball_positions(const History& history) {
  std::vector<Vec2> out;
  out.reserve(history.size());
  for (const auto& e : history) out.push_back(e.outcome.final_scene.ball);
  return out;
}

std::vector<Vec2> hand_positions(const History& history) {
  std::vector<Vec2> out;
  out.reserve(history.size());
  for (const auto& e : history) {
    const auto& f = e.outcome.engineered_features;
    if (f.size() < 2) throw ArgumentError("hand_positions: missing engineered features");
    out.push_back({f[0], f[1]});
  }
  return out;
}

std::vector<std::size_t> exploration_curve(std::span<const Vec2> balls, std::span<const double> lo,
                                           std::span<const double> hi, int bins) {
  CoverageGrid grid({lo.begin(), lo.end()}, {hi.begin(), hi.end()}, bins);
  std::vector<std::size_t> series;
  series.reserve(balls.size());
  for (Vec2 p : balls) {
    const double xy[2] = {p.x, p.y};
    grid.add(xy);
    series.push_back(grid.occupied());
  }
  return series;
}

std::vector<std::size_t> exploration_curve(const History& history, int bins) {
  const double lo[2] = {-1.0, -1.0};
  const double hi[2] = {1.0, 1.0};
  auto balls = ball_positions(history);
  return exploration_curve(balls, lo, hi, bins);
}

double least_squares_slope(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) throw ArgumentError("least_squares_slope: need at least two points");
  double x_mean = (n - 1) / 2.0;
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = i - x_mean;
    sxy += dx * (y[i] - y_mean);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SlopeChange slope_change(std::span<const std::size_t> series, std::size_t switch_episode, std::size_t window) {
  if (window < 1) throw ArgumentError("slope_change: window must be >= 1");
  if (switch_episode < window || switch_episode + window >= series.size()) {
    throw ArgumentError("slope_change: window exceeds the series");
  }
  auto slope_of = [&](std::size_t begin) {
    std::vector<double> y(window + 1);
    for (std::size_t i = 0; i <= window; ++i) y[i] = static_cast<double>(series[begin + i]);
    return least_squares_slope(y);
  };
  return {slope_of(switch_episode - window), slope_of(switch_episode)};
}

void export_history(const History& history, const std::filesystem::path& dir, int bins) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("export: cannot create " + dir.string() + ": " + ec.message());

  const bool has_distractor = !history.empty() && history.front().outcome.final_scene.distractor.has_value();
  auto hands = hand_positions(history);

  std::ofstream scatter(dir / "scatter.csv", std::ios::binary);
  if (!scatter) throw IoError("export: cannot write " + (dir / "scatter.csv").string());
  scatter << "episode,end_x,end_y,ball_x,ball_y" << (has_distractor ? ",distractor_x,distractor_y" : "") << "\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& s = history[i].outcome.final_scene;
    scatter << history[i].episode + 1 << ',' << csv::format(hands[i].x) << ',' << csv::format(hands[i].y) << ','
            << csv::format(s.ball.x) << ',' << csv::format(s.ball.y);
    if (has_distractor) {
      Vec2 d = s.distractor.value_or(Vec2{});
      scatter << ',' << csv::format(d.x) << ',' << csv::format(d.y);
    }
    scatter << "\n";
  }

  auto series = exploration_curve(history, bins);
  std::ofstream curve(dir / "curve.csv", std::ios::binary);
  if (!curve) throw IoError("export: cannot write " + (dir / "curve.csv").string());
  curve << "episode,cells_occupied\n";
  for (std::size_t i = 0; i < series.size(); ++i) curve << history[i].episode + 1 << ',' << series[i] << "\n";
  if (!scatter || !curve) throw IoError("export: write failed in " + dir.string());
}

}  // namespace imgep
