#pragma once

#include <cstdint>
#include <random>

namespace imgep {

using Rng = std::mt19937_64;

/// Independent random streams derived from one master seed.
///
/// Every stream seed is `splitmix64(master + offset)`; the offsets are fixed
/// and part of the reproducibility contract of history files.
enum class Stream : std::uint64_t {
  kEnvironment = 1,      // per-episode rollout streams (distractor walk)
  kMotor = 2,            // random motor parameters
  kExplorationNoise = 3, // meta-policy noise
  kGoal = 4,             // goal sampling
  kModule = 5,           // module selection
  kRepresentation = 6,   // VAE init, minibatches, reparameterization
  kDataset = 7,          // dataset scene sampling
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream) {
  return splitmix64(master + static_cast<std::uint64_t>(stream));
}

// Seed of the sub-stream used for episode `episode` of a stream.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t episode) {
  return splitmix64(derive_seed(master, stream) ^ splitmix64(episode));
}

inline Rng make_rng(std::uint64_t master, Stream stream) { return Rng(derive_seed(master, stream)); }

}  // namespace imgep
