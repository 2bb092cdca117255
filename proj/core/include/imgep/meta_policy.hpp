#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imgep/dmp.hpp"
#include "imgep/random.hpp"

namespace imgep {

/// Inverse-model meta-policy: one nearest-neighbour database per goal module.
///
/// Each database stores (c, theta, P_k R(o)) for every episode, whichever
/// module the episode's goal came from. Queries use the Euclidean distance on
/// the concatenated (c, tau) key; ties go to the earliest episode.
class MetaPolicy {
 public:
  MetaPolicy(std::vector<std::vector<std::size_t>> projections, std::size_t context_dim, double noise_sigma);

  std::size_t module_count() const { return databases_.size(); }
  std::size_t database_size(std::size_t module) const { return databases_.at(module).episodes.size(); }
  double noise_sigma() const { return noise_sigma_; }

  /// Adds the episode to every module database.
  void update(std::size_t episode, std::span<const double> context, const DmpParams& params,
              std::span<const double> embedding);

  struct Match {
    std::size_t record = 0;   // position in the database
    std::size_t episode = 0;
    double squared_distance = 0.0;
  };

  // Throws StateError on an empty database.
  Match nearest(std::size_t module, std::span<const double> context, std::span<const double> goal) const;

  const DmpParams& params(std::size_t module, std::size_t record) const { return databases_.at(module).params.at(record); }
  std::span<const double> key(std::size_t module, std::size_t record) const;

  /// Nearest record's parameters plus N(0, sigma^2) noise, clipped to [-1, 1].
  DmpParams infer(std::size_t module, std::span<const double> context, std::span<const double> goal, Rng& rng) const;

 private:
  struct Database {
    std::vector<std::size_t> dims;
    std::size_t stride = 0;
    std::vector<double> keys;  // row-major [records x stride]
    std::vector<std::size_t> episodes;
    std::vector<DmpParams> params;
  };

  std::vector<Database> databases_;
  std::size_t context_dim_;
  double noise_sigma_;
};

}  // namespace imgep
