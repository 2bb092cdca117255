#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "imgep/goal_space.hpp"
#include "imgep/random.hpp"
#include "imgep/render.hpp"
#include "imgep/tensor/adam.hpp"
#include "imgep/tensor/graph.hpp"

namespace imgep {

/// Convolutional VAE layout. Encoder: `conv_layers` stride-2 convolutions of
/// `channels` maps, `dense_layers` rectified dense layers, then one dense head
/// with 2 * latent_dim outputs (means, then log-variances). The decoder mirrors
/// it with transposed convolutions and outputs Bernoulli logits per pixel.
struct VaeArchitecture {
  int image_size = 64;
  int conv_layers = 2;
  int channels = 16;
  int kernel = 4;
  int dense_layers = 2;
  int dense_units = 256;
  int latent_dim = 10;
  double beta = 1.0;  // KL weight; > 1 gives a beta-VAE

  // 4 x 32-channel convolutions, 2 x 256 dense, 10 latents.
  static VaeArchitecture full();
  // 2 x 16-channel convolutions, 2 x 256 dense, 10 latents.
  static VaeArchitecture desk();

  int feature_map_size() const { return image_size >> conv_layers; }
  std::size_t flat_features() const;
  void validate() const;

  friend bool operator==(const VaeArchitecture&, const VaeArchitecture&) = default;
};

enum class Precision { kDouble, kFloat };

std::string to_string(Precision p);
Precision parse_precision(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int iterations = 10000;
  std::uint64_t seed = 0;
  Precision precision = Precision::kFloat;  // gradient checks use kDouble
  int log_every = 100;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Output shape of every layer for a batch, encoder then decoder.
std::vector<tensor::Shape> layer_shapes(const VaeArchitecture& arch, std::size_t batch);

template <typename T>
class BasicVae {
 public:
  // Glorot-uniform weights, zero biases.
  BasicVae(const VaeArchitecture& arch, Rng& init_rng);

  const VaeArchitecture& architecture() const { return arch_; }
  std::vector<tensor::Parameter<T>>& parameters() { return params_; }
  const std::vector<tensor::Parameter<T>>& parameters() const { return params_; }

  std::vector<tensor::Tensor<T>> tensors() const;
  // Replaces every parameter value; shapes must match the architecture.
  void load(const std::vector<tensor::Tensor<T>>& tensors);

  struct EncoderNodes {
    tensor::NodeId input;
    tensor::NodeId mu;
    tensor::NodeId logvar;
  };
  EncoderNodes add_encoder(tensor::Graph<T>& g, std::size_t batch);
  tensor::NodeId add_decoder(tensor::Graph<T>& g, tensor::NodeId z);

  /// Posterior means for a batch of images [B,1,H,W], without a graph.
  tensor::Tensor<T> encode_mean(const tensor::Tensor<T>& images) const;

  /// The goal-space embedding R(o): the posterior mean, never a sample.
  std::vector<double> embed(const Image& image) const;
  std::vector<std::vector<double>> embed_batch(std::span<const Image> images) const;

 private:
  std::size_t add(std::string name, tensor::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  tensor::NodeId param_node(tensor::Graph<T>& g, std::size_t index);

  VaeArchitecture arch_;
  std::vector<tensor::Parameter<T>> params_;
  std::vector<std::size_t> encoder_conv_, encoder_dense_, decoder_dense_, decoder_conv_;  // weight indices
  std::size_t head_ = 0;
};

using Vae = BasicVae<double>;

extern template class BasicVae<float>;
extern template class BasicVae<double>;

// Images -> tensor [B,1,H,W] of intensities.
template <typename T>
tensor::Tensor<T> image_batch(std::span<const Image> images);

/// Graph computing the batch-mean ELBO terms:
/// loss = nll + beta * kl, nll and kl being per-image means.
template <typename T>
struct ElboGraph {
  tensor::Graph<T> graph;
  std::size_t batch = 0;
  double beta = 1.0;
  tensor::NodeId input = 0, eps = 0, mu = 0, logvar = 0, z = 0, logits = 0;
  tensor::NodeId nll = 0, kl = 0, loss = 0;
};

template <typename T>
ElboGraph<T> build_elbo_graph(BasicVae<T>& model, std::size_t batch, double beta);

struct ElboParts {
  double loss = 0.0;
  double nll = 0.0;
  double kl = 0.0;
};

/// Evaluates the ELBO on a batch; the reparameterization noise comes from `rng`.
template <typename T>
ElboParts elbo_loss(ElboGraph<T>& g, const tensor::Tensor<T>& images, Rng& rng);
template <typename T>
ElboParts elbo_loss(BasicVae<T>& model, std::span<const Image> images, double beta, Rng& rng);

struct TrainRecord {
  int iteration = 0;
  double nll = 0.0;
  double kl = 0.0;
  double loss = 0.0;
};

template <typename T>
struct TrainResult {
  BasicVae<T> model;
  std::vector<ElboParts> steps;      // one per iteration
  std::vector<TrainRecord> curve;    // every log_every iterations
};

/// Adam on minibatches drawn uniformly with replacement. All randomness
/// (initialization, batches, noise) flows from `cfg.seed`.
template <typename T>
TrainResult<T> train(std::span<const Image> dataset, const VaeArchitecture& arch, const TrainConfig& cfg);

// Mean loss of the first / last `window` iterations.
double smoothed_initial_loss(std::span<const ElboParts> steps, std::size_t window = 50);
double smoothed_final_loss(std::span<const ElboParts> steps, std::size_t window = 50);

/// Per-dimension [min, max] of the embeddings of `images`.
GoalBox latent_ranges(const Vae& model, std::span<const Image> images);

/// Learned goal space backed by a trained VAE.
class VaeRepresentation final : public Representation {
 public:
  explicit VaeRepresentation(std::shared_ptr<const Vae> model) : model_(std::move(model)) {}
  std::size_t dim() const override { return static_cast<std::size_t>(model_->architecture().latent_dim); }
  std::vector<double> embed(const Outcome& outcome) const override { return model_->embed(outcome.image); }
  std::string name() const override { return "vae"; }
  const Vae& model() const { return *model_; }

 private:
  std::shared_ptr<const Vae> model_;
};

// Converts a model of either precision to a double model.
template <typename T>
Vae to_double(const BasicVae<T>& model);

void save_vae(const std::filesystem::path& checkpoint, const Vae& model);
Vae load_vae(const std::filesystem::path& checkpoint, const VaeArchitecture& arch);

}  // namespace imgep
