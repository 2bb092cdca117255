#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imgep/scene.hpp"

namespace imgep {

/// Square grayscale image with 8-bit storage. Intensities are exposed as
/// reals in [0, 1] (`stored / 255`).
class Image {
 public:
  Image() = default;
  Image(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  double at(int row, int col) const { return pixels_[index(row, col)] / 255.0; }
  void set(int row, int col, double intensity);

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> bytes() { return pixels_; }

  // Intensities in [0,1], row-major.
  std::vector<double> to_real() const;
  void write_real(std::span<double> out) const;
  void write_real(std::span<float> out) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width_ + col; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct RenderConfig {
  int resolution = 64;
  double ball_radius_px = 4.0;
  double distractor_radius_px = 2.5;
  bool arm_rendered = false;
  double background = 0.0;
  double foreground = 1.0;

  void validate() const;

  friend bool operator==(const RenderConfig&, const RenderConfig&) = default;
};

/// Rasterizes the scene with hard edges. The frame [-1,1]^2 maps onto the
/// pixel grid with +y pointing up (row 0 is y = +1). A pixel is lit when its
/// center lies inside a disk, or within half a pixel of an arm segment.
Image render(const SceneState& scene, std::span<const double> link_lengths, const RenderConfig& cfg);

// Scene point -> continuous pixel coordinates (col, row) of that point.
Vec2 scene_to_pixel(Vec2 p, int resolution);

}  // namespace imgep
