#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imgep/exploration.hpp"

namespace imgep {

/// History CSV, one row per episode (1-based), columns:
///   episode, ctx_*, theta_*, joint_*, feat_*, ball_x, ball_y, grasped,
///   distractor_x, distractor_y, emb_*, goal_*, module, cost
/// Missing values (no distractor, random episodes) are empty fields.
/// Rendered images are not stored.
void write_history_csv(const std::filesystem::path& path, const History& history);
History read_history_csv(const std::filesystem::path& path);

struct RunManifest {
  std::string environment;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t episodes = 0;
  std::size_t rollouts = 0;
  std::size_t final_coverage = 0;
  std::vector<std::string> module_labels;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

// episode (1-based), cells_occupied
void write_curve_csv(const std::filesystem::path& path, std::span<const std::size_t> series);
std::vector<std::size_t> read_curve_csv(const std::filesystem::path& path);

// episode (1-based), one column per module label.
void write_interest_csv(const std::filesystem::path& path, std::span<const std::string> labels,
                        std::span<const std::vector<double>> trace, std::size_t first_episode);

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace imgep
