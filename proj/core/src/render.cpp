#include "imgep/render.hpp"

#include <algorithm>
#include <cmath>

#include "imgep/env.hpp"
#include "imgep/error.hpp"

namespace imgep {

Image::Image(int height, int width) : height_(height), width_(width), pixels_(static_cast<std::size_t>(height) * width, 0) {
  if (height < 0 || width < 0) throw ArgumentError("image dimensions must be non-negative");
}

void Image::set(int row, int col, double intensity) {
  double v = std::clamp(intensity, 0.0, 1.0);
  pixels_[index(row, col)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
}

std::vector<double> Image::to_real() const {
  std::vector<double> out(pixels_.size());
  write_real(out);
  return out;
}

void Image::write_real(std::span<double> out) const {
  for (std::size_t i = 0; i < pixels_.size(); ++i) out[i] = pixels_[i] / 255.0;
}

void Image::write_real(std::span<float> out) const {
  for (std::size_t i = 0; i < pixels_.size(); ++i) out[i] = static_cast<float>(pixels_[i] / 255.0);
}

void RenderConfig::validate() const {
  if (resolution < 8) throw ArgumentError("render resolution must be >= 8");
  if (ball_radius_px < 1.0 || distractor_radius_px < 1.0) throw ArgumentError("render radii must be >= 1 px");
  if (background < 0.0 || background > 1.0 || foreground < 0.0 || foreground > 1.0) {
    throw ArgumentError("render intensities must lie in [0, 1]");
  }
}

Vec2 scene_to_pixel(Vec2 p, int resolution) {
  double scale = resolution / 2.0;
  return {(p.x + 1.0) * scale, (1.0 - p.y) * scale};
}

namespace {

void fill_disk(Image& img, Vec2 center_px, double radius_px, double value) {
  int n = img.height();
  int r0 = std::max(0, static_cast<int>(std::floor(center_px.y - radius_px)));
  int r1 = std::min(n - 1, static_cast<int>(std::ceil(center_px.y + radius_px)));
  int c0 = std::max(0, static_cast<int>(std::floor(center_px.x - radius_px)));
  int c1 = std::min(n - 1, static_cast<int>(std::ceil(center_px.x + radius_px)));
  double r2 = radius_px * radius_px;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      double dx = c + 0.5 - center_px.x;
      double dy = r + 0.5 - center_px.y;
      if (dx * dx + dy * dy <= r2) img.set(r, c, value);
    }
  }
}

void draw_segment(Image& img, Vec2 a, Vec2 b, double value) {
  int n = img.height();
  int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - 1)));
  int r1 = std::min(n - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + 1)));
  int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - 1)));
  int c1 = std::min(n - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + 1)));
  Vec2 ab = b - a;
  double len2 = ab.x * ab.x + ab.y * ab.y;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      Vec2 p{c + 0.5, r + 0.5};
      Vec2 ap = p - a;
      double t = len2 > 0.0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
      Vec2 d = p - (a + t * ab);
      if (d.x * d.x + d.y * d.y <= 0.25) img.set(r, c, value);
    }
  }
}

}  // namespace

Image render(const SceneState& scene, std::span<const double> link_lengths, const RenderConfig& cfg) {
  cfg.validate();
  Image img(cfg.resolution, cfg.resolution);
  if (cfg.background != 0.0) {
    for (int r = 0; r < cfg.resolution; ++r) {
      for (int c = 0; c < cfg.resolution; ++c) img.set(r, c, cfg.background);
    }
  }
  if (cfg.arm_rendered && !scene.joint_angles.empty()) {
    auto points = chain_points(scene.joint_angles, link_lengths);
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      draw_segment(img, scene_to_pixel(points[i], cfg.resolution), scene_to_pixel(points[i + 1], cfg.resolution),
                   cfg.foreground);
    }
  }
  if (scene.distractor) {
    fill_disk(img, scene_to_pixel(*scene.distractor, cfg.resolution), cfg.distractor_radius_px, cfg.foreground);
  }
  fill_disk(img, scene_to_pixel(scene.ball, cfg.resolution), cfg.ball_radius_px, cfg.foreground);
  return img;
}

}  // namespace imgep
