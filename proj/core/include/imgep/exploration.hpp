#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imgep/dmp.hpp"
#include "imgep/env.hpp"
#include "imgep/goal_space.hpp"
#include "imgep/meta_policy.hpp"
#include "imgep/render.hpp"

namespace imgep {

enum class Strategy { kRpe, kRgeEfr, kRgeVae, kRgeOnline, kMgeEfr, kMgeVae };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);  // "RPE", "RGE-EFR", ...

bool uses_goals(Strategy s);
bool is_modular(Strategy s);
bool uses_pretrained_representation(Strategy s);

struct ExplorationConfig {
  Strategy strategy = Strategy::kRgeEfr;
  int budget = 5000;
  int bootstrap = 200;            // random episodes before goal exploration
  int online_bootstrap = 2000;    // RGE-Online switch point
  double noise_sigma = 0.05;
  int module_group_size = 2;      // latent dims per module for MGE-VAE
  int interest_window = 40;
  double interest_epsilon = 0.2;
  Competence interest_competence = Competence::kExponential;
  // Exponential competence scale as a fraction of the module's goal-box diagonal.
  double interest_competence_scale = 0.035;
  double goal_bound_expansion = 0.2;
  bool retain_images = false;

  // Bootstrap length actually used by the strategy.
  int bootstrap_episodes() const;
  void validate() const;

  friend bool operator==(const ExplorationConfig&, const ExplorationConfig&) = default;
};

struct HistoryEntry {
  std::size_t episode = 0;  // 0-based
  std::vector<double> context;
  DmpParams params;
  Outcome outcome;
  std::vector<double> embedding;  // R(o) in the active goal space; empty for RPE
  std::vector<double> goal;       // empty for random episodes
  int module = -1;                // -1 for random episodes
  double cost = std::numeric_limits<double>::quiet_NaN();
};

using History = std::vector<HistoryEntry>;

// Trains a goal-space representation from images (RGE-Online).
using RepresentationTrainer = std::function<std::shared_ptr<const Representation>(std::span<const Image>)>;

struct ExplorationSetup {
  EnvConfig env = EnvConfig::arm_ball();
  DmpConfig dmp = DmpConfig::standard(50);
  RenderConfig render;
  std::shared_ptr<const Representation> representation;  // required by RGE-VAE and MGE-VAE
  RepresentationTrainer online_trainer;                    // required by RGE-Online
  std::uint64_t seed = 0;
};

struct ExplorationResult {
  History history;
  std::size_t rollouts = 0;
  std::vector<std::string> module_labels;
  std::shared_ptr<const Representation> representation;  // goal space used after the bootstrap
  std::vector<std::vector<double>> interest_trace;       // per exploration episode, per module (MGE only)
};

/// Random motor babbling: `n` episodes with uniform parameters.
History bootstrap(int n, const ExplorationSetup& setup, Rng& motor_rng, const RenderConfig& render);

/// Runs one full exploration of `cfg.budget` episodes with the given strategy.
/// Episode i uses rollout stream derive_seed(seed, kEnvironment, i); random
/// parameters always come from the kMotor stream, so every strategy's
/// bootstrap equals the same-seed RPE run episode for episode.
ExplorationResult run_exploration(const ExplorationConfig& cfg, const ExplorationSetup& setup);

/// Context observed at the start of every episode (the initial scene features).
std::vector<double> observe_context(const EnvConfig& env);

/// Performs one episode with the given motor parameters.
Outcome perform_episode(const ExplorationSetup& setup, const DmpParams& params, std::size_t episode,
                        const RenderConfig& render);

}  // namespace imgep
