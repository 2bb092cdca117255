#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imgep/dmp.hpp"
#include "imgep/env.hpp"
#include "imgep/exploration.hpp"
#include "imgep/render.hpp"
#include "imgep/vae.hpp"

namespace imgep {

struct EvaluationConfig {
  int bins = 30;
  std::vector<double> lo{-1.0, -1.0};
  std::vector<double> hi{1.0, 1.0};

  void validate() const;

  friend bool operator==(const EvaluationConfig&, const EvaluationConfig&) = default;
};

struct RepresentationConfig {
  VaeArchitecture architecture = VaeArchitecture::desk();
  TrainConfig train;
  int dataset_size = 5000;     // images rendered when no checkpoint is given
  std::string checkpoint;      // pre-trained weights for RGE-VAE / MGE-VAE; empty = train on demand

  friend bool operator==(const RepresentationConfig&, const RepresentationConfig&) = default;
};

/// Everything a run needs. Serialized as JSON; every key is optional and
/// falls back to the defaults below (environment defaults follow the variant).
struct ExperimentConfig {
  EnvConfig env = EnvConfig::arm_ball();
  DmpConfig dmp = DmpConfig::standard(50);
  RenderConfig render;
  RepresentationConfig representation;
  TrainConfig online_train = default_online_train();  // RGE-Online, trained on the bootstrap images
  ExplorationConfig exploration;
  EvaluationConfig evaluation;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string output_dir = "runs";
  int jobs = 1;  // seeds run in parallel on this many threads

  static TrainConfig default_online_train();

  // Throws ArgumentError on any inconsistency between blocks.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

// 64-bit FNV-1a of the serialized config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace imgep
