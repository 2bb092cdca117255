#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "imgep/config.hpp"
#include "imgep/vae.hpp"

namespace imgep {

/// Renders `n` scenes with objects placed uniformly over their valid domains:
/// ArmBall puts the ball uniformly on the ring, Arm2Balls puts both balls
/// uniformly in [-1, 1]^2. The arm posture is uniform within the joint limits
/// (visible only when the arm is rendered). Scene sampling uses the kDataset
/// stream of `seed`.
std::vector<SceneState> sample_dataset_scenes(const EnvConfig& env, int n, std::uint64_t seed);
std::vector<Image> generate_dataset(const ExperimentConfig& cfg, int n, std::uint64_t seed);

void cmd_gen_dataset(const ExperimentConfig& cfg, int n, const std::filesystem::path& out_file, std::uint64_t seed);

struct TrainOutputs {
  std::filesystem::path checkpoint;  // vae.ckpt
  std::filesystem::path config;      // config.json (holds the architecture)
  std::filesystem::path curve;       // train_curve.csv: iteration,nll,kl,loss
  double initial_loss = 0.0;         // smoothed
  double final_loss = 0.0;
};

/// Trains the configured representation on a model of the configured
/// precision. The returned model is always held in double precision.
Vae train_representation(std::span<const Image> images, const VaeArchitecture& arch, const TrainConfig& cfg,
                         std::vector<TrainRecord>* curve = nullptr, std::vector<ElboParts>* steps = nullptr);

TrainOutputs cmd_train_repr(const ExperimentConfig& cfg, const std::filesystem::path& dataset,
                            const std::filesystem::path& out_dir, std::ostream* log = nullptr);

void write_train_curve(const std::filesystem::path& path, std::span<const TrainRecord> curve);

struct SummaryRow {
  std::string environment;
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t final_coverage = 0;
  std::string curve;  // relative to the summary's directory

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

void write_summary(const std::filesystem::path& path, std::span<const SummaryRow> rows);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

// Directory holding the per-seed outputs and the summary of one strategy.
std::filesystem::path strategy_dir(const std::filesystem::path& out_dir, Strategy strategy);
std::filesystem::path seed_dir(const std::filesystem::path& out_dir, Strategy strategy, std::uint64_t seed);

/// Runs the configured strategy once per seed. Layout under `out_dir`:
///   <STRATEGY>/config.json
///   <STRATEGY>/summary.csv            environment,strategy,seed,final_coverage,curve
///   <STRATEGY>/seed_<s>/history.csv
///   <STRATEGY>/seed_<s>/curve.csv
///   <STRATEGY>/seed_<s>/manifest.json
///   <STRATEGY>/seed_<s>/interest.csv  (modular strategies)
/// The summary is rewritten after every completed seed and lists only
/// completed seeds, in config order.
std::vector<SummaryRow> cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

struct CompareRow {
  std::string environment;
  std::string strategy;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::vector<double> mean_curve;
};

/// Aggregates final coverage per strategy over seeds. Rows repeated across
/// summaries (same strategy and seed) count once. Writes compare.csv and
/// mean_curve.csv into `out_dir` when it is non-empty.
std::vector<CompareRow> cmd_compare(std::span<const std::filesystem::path> summaries,
                                    const std::filesystem::path& out_dir);

/// Writes scatter.csv and curve.csv for a history file.
void cmd_export(const std::filesystem::path& history_csv, const std::filesystem::path& out_dir, int bins = 30);

}  // namespace imgep
