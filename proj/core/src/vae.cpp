#include "imgep/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

#include "imgep/error.hpp"
#include "imgep/tensor/checkpoint.hpp"

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace imgep {

using tensor::Conv2dSpec;
using tensor::Graph;
using tensor::NodeId;
using tensor::Parameter;
using tensor::Shape;
using tensor::Tensor;

namespace {

Conv2dSpec conv_spec(const VaeArchitecture& arch) {
  auto k = static_cast<std::size_t>(arch.kernel);
  return Conv2dSpec{k, 2, (k - 2) / 2};
}

}  // namespace

VaeArchitecture VaeArchitecture::full() {
  VaeArchitecture a;
  a.conv_layers = 4;
  a.channels = 32;
  return a;
}

VaeArchitecture VaeArchitecture::desk() { return VaeArchitecture{}; }

std::size_t VaeArchitecture::flat_features() const {
  auto s = static_cast<std::size_t>(feature_map_size());
  return static_cast<std::size_t>(channels) * s * s;
}

void VaeArchitecture::validate() const {
  if (image_size <= 0) throw ArgumentError("vae image_size must be positive");
  if (conv_layers < 1) throw ArgumentError("vae needs at least one convolution");
  if (image_size % (1 << conv_layers) != 0) {
    throw ArgumentError("vae image_size must be divisible by 2^conv_layers");
  }
  if (channels < 1) throw ArgumentError("vae channels must be positive");
  if (kernel < 2 || kernel % 2 != 0) throw ArgumentError("vae kernel must be even and >= 2");
  if (dense_layers < 0) throw ArgumentError("vae dense_layers must be >= 0");
  if (dense_units < 1) throw ArgumentError("vae dense_units must be positive");
  if (latent_dim < 1) throw ArgumentError("vae latent_dim must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ArgumentError("vae beta must be finite and >= 0");
}

std::string to_string(Precision p) { return p == Precision::kFloat ? "float" : "double"; }

Precision parse_precision(const std::string& name) {
  if (name == "double") return Precision::kDouble;
  if (name == "float") return Precision::kFloat;
  throw ArgumentError("unknown precision: " + name);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be > 0");
  if (batch_size < 1) throw ArgumentError("batch size must be positive");
  if (iterations < 0) throw ArgumentError("iterations must be >= 0");
  if (log_every < 1) throw ArgumentError("log_every must be positive");
}

std::vector<Shape> layer_shapes(const VaeArchitecture& arch, std::size_t batch) {
  arch.validate();
  std::vector<Shape> out;
  auto c = static_cast<std::size_t>(arch.channels);
  auto units = static_cast<std::size_t>(arch.dense_units);
  auto latent = static_cast<std::size_t>(arch.latent_dim);
  auto s = static_cast<std::size_t>(arch.image_size);
  for (int i = 0; i < arch.conv_layers; ++i) {
    s /= 2;
    out.push_back({batch, c, s, s});
  }
  for (int i = 0; i < arch.dense_layers; ++i) out.push_back({batch, units});
  out.push_back({batch, 2 * latent});
  for (int i = 0; i < arch.dense_layers; ++i) out.push_back({batch, units});
  out.push_back({batch, c, s, s});
  for (int i = 0; i < arch.conv_layers; ++i) {
    s *= 2;
    out.push_back({batch, i + 1 == arch.conv_layers ? std::size_t{1} : c, s, s});
  }
  return out;
}

template <typename T>
std::size_t BasicVae<T>::add(std::string name, Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor<T> w(shape);
  for (auto& v : w.values()) v = static_cast<T>(u(rng));
  std::size_t index = params_.size();
  Shape bias_shape{shape[0]};
  if (name.starts_with("dec_tconv")) bias_shape = {shape[1]};
  params_.emplace_back(name + ".w", std::move(w));
  params_.emplace_back(name + ".b", Tensor<T>(bias_shape));
  return index;
}

template <typename T>
BasicVae<T>::BasicVae(const VaeArchitecture& arch, Rng& init_rng) : arch_(arch) {
  arch_.validate();
  auto c = static_cast<std::size_t>(arch_.channels);
  auto k = static_cast<std::size_t>(arch_.kernel);
  auto units = static_cast<std::size_t>(arch_.dense_units);
  auto latent = static_cast<std::size_t>(arch_.latent_dim);
  std::size_t flat = arch_.flat_features();

  std::size_t in = 1;
  for (int i = 0; i < arch_.conv_layers; ++i) {
    encoder_conv_.push_back(add("enc_conv" + std::to_string(i), {c, in, k, k}, in * k * k, c * k * k, init_rng));
    in = c;
  }
  in = flat;
  for (int i = 0; i < arch_.dense_layers; ++i) {
    encoder_dense_.push_back(add("enc_dense" + std::to_string(i), {units, in}, in, units, init_rng));
    in = units;
  }
  head_ = add("enc_head", {2 * latent, in}, in, 2 * latent, init_rng);

  in = latent;
  for (int i = 0; i < arch_.dense_layers; ++i) {
    decoder_dense_.push_back(add("dec_dense" + std::to_string(i), {units, in}, in, units, init_rng));
    in = units;
  }
  decoder_dense_.push_back(add("dec_dense" + std::to_string(arch_.dense_layers), {flat, in}, in, flat, init_rng));
  for (int i = 0; i < arch_.conv_layers; ++i) {
    std::size_t out = i + 1 == arch_.conv_layers ? 1 : c;
    decoder_conv_.push_back(add("dec_tconv" + std::to_string(i), {c, out, k, k}, c * k * k, out * k * k, init_rng));
  }
}

template <typename T>
std::vector<Tensor<T>> BasicVae<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

template <typename T>
void BasicVae<T>::load(const std::vector<Tensor<T>>& tensors) {
  if (tensors.size() != params_.size()) {
    throw ArgumentError("vae load: expected " + std::to_string(params_.size()) + " tensors, got " +
                        std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].shape() != params_[i].value.shape()) {
      throw ArgumentError("vae load: " + params_[i].name + " expects " + tensor::shape_string(params_[i].value.shape()) +
                          ", got " + tensor::shape_string(tensors[i].shape()));
    }
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    params_[i].value = tensors[i];
    params_[i].zero_grad();
  }
}

template <typename T>
NodeId BasicVae<T>::param_node(Graph<T>& g, std::size_t index) {
  return g.parameter(params_[index]);
}

template <typename T>
typename BasicVae<T>::EncoderNodes BasicVae<T>::add_encoder(Graph<T>& g, std::size_t batch) {
  auto size = static_cast<std::size_t>(arch_.image_size);
  auto latent = static_cast<std::size_t>(arch_.latent_dim);
  Conv2dSpec spec = conv_spec(arch_);
  EncoderNodes nodes{};
  nodes.input = g.input(Tensor<T>({batch, 1, size, size}));
  NodeId h = nodes.input;
  for (std::size_t w : encoder_conv_) {
    h = g.relu(g.conv2d(h, param_node(g, w), param_node(g, w + 1), spec));
  }
  h = g.flatten(h);
  for (std::size_t w : encoder_dense_) h = g.relu(g.dense(h, param_node(g, w), param_node(g, w + 1)));
  NodeId head = g.dense(h, param_node(g, head_), param_node(g, head_ + 1));
  nodes.mu = g.slice_columns(head, 0, latent);
  nodes.logvar = g.slice_columns(head, latent, 2 * latent);
  return nodes;
}

template <typename T>
NodeId BasicVae<T>::add_decoder(Graph<T>& g, NodeId z) {
  std::size_t batch = g.shape(z).at(0);
  auto s = static_cast<std::size_t>(arch_.feature_map_size());
  Conv2dSpec spec = conv_spec(arch_);
  NodeId h = z;
  for (std::size_t w : decoder_dense_) h = g.relu(g.dense(h, param_node(g, w), param_node(g, w + 1)));
  h = g.reshape(h, {batch, static_cast<std::size_t>(arch_.channels), s, s});
  for (std::size_t i = 0; i < decoder_conv_.size(); ++i) {
    std::size_t w = decoder_conv_[i];
    h = g.conv_transpose2d(h, param_node(g, w), param_node(g, w + 1), spec);
    if (i + 1 < decoder_conv_.size()) h = g.relu(h);
  }
  return h;  // logits
}

template <typename T>
Tensor<T> BasicVae<T>::encode_mean(const Tensor<T>& images) const {
  auto size = static_cast<std::size_t>(arch_.image_size);
  if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != size || images.dim(3) != size) {
    throw ArgumentError("vae encode: expected [B,1," + std::to_string(size) + "," + std::to_string(size) + "], got " +
                        tensor::shape_string(images.shape()));
  }
  std::size_t batch = images.dim(0);
  Conv2dSpec spec = conv_spec(arch_);
  Tensor<T> h = images;
  for (std::size_t w : encoder_conv_) {
    h = tensor::relu(tensor::conv2d_forward(h, params_[w].value, params_[w + 1].value, spec));
  }
  h.reshape({batch, h.size() / batch});
  for (std::size_t w : encoder_dense_) {
    h = tensor::relu(tensor::dense_forward(h, params_[w].value, params_[w + 1].value));
  }
  Tensor<T> head = tensor::dense_forward(h, params_[head_].value, params_[head_ + 1].value);
  auto latent = static_cast<std::size_t>(arch_.latent_dim);
  Tensor<T> mu({batch, latent});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < latent; ++j) mu(b, j) = head(b, j);
  }
  return mu;
}

template <typename T>
std::vector<double> BasicVae<T>::embed(const Image& image) const {
  auto mu = encode_mean(image_batch<T>(std::span<const Image>(&image, 1)));
  return std::vector<double>(mu.values().begin(), mu.values().end());
}

template <typename T>
std::vector<std::vector<double>> BasicVae<T>::embed_batch(std::span<const Image> images) const {
  // One image per pass: a batched GEMM sums in a different order, and the
  // embedding must not depend on which other images share the call.
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  for (const auto& image : images) out.push_back(embed(image));
  return out;
}

template class BasicVae<float>;
template class BasicVae<double>;

template <typename T>
Tensor<T> image_batch(std::span<const Image> images) {
  if (images.empty()) throw ArgumentError("image batch is empty");
  auto h = static_cast<std::size_t>(images.front().height());
  auto w = static_cast<std::size_t>(images.front().width());
  Tensor<T> out({images.size(), 1, h, w});
  T* dst = out.data();
  for (const auto& img : images) {
    if (static_cast<std::size_t>(img.height()) != h || static_cast<std::size_t>(img.width()) != w) {
      throw ArgumentError("image batch: images differ in size");
    }
    for (std::uint8_t v : img.bytes()) *dst++ = static_cast<T>(v) / T(255);
  }
  return out;
}

template Tensor<float> image_batch(std::span<const Image>);
template Tensor<double> image_batch(std::span<const Image>);

template <typename T>
ElboGraph<T> build_elbo_graph(BasicVae<T>& model, std::size_t batch, double beta) {
  if (batch == 0) throw ArgumentError("elbo batch must be positive");
  ElboGraph<T> e;
  e.batch = batch;
  e.beta = beta;
  auto& g = e.graph;
  auto enc = model.add_encoder(g, batch);
  e.input = enc.input;
  e.mu = enc.mu;
  e.logvar = enc.logvar;
  e.eps = g.input(Tensor<T>(g.shape(enc.mu)));
  e.z = g.reparameterize(e.mu, e.logvar, e.eps);
  e.logits = model.add_decoder(g, e.z);
  const T inv = T(1) / static_cast<T>(batch);
  e.nll = g.scale(g.bernoulli_nll(e.logits, e.input), inv);
  e.kl = g.scale(g.kl_gaussian(e.mu, e.logvar), inv);
  e.loss = g.add(e.nll, g.scale(e.kl, static_cast<T>(beta)));
  return e;
}

template <typename T>
ElboParts elbo_loss(ElboGraph<T>& e, const Tensor<T>& images, Rng& rng) {
  e.graph.set_input(e.input, images);
  e.graph.set_input(e.eps, tensor::standard_normal<T>(e.graph.shape(e.mu), rng));
  e.graph.forward();
  ElboParts parts{static_cast<double>(e.graph.value(e.loss)[0]), static_cast<double>(e.graph.value(e.nll)[0]),
                  static_cast<double>(e.graph.value(e.kl)[0])};
  if (!std::isfinite(parts.loss)) throw NumericError("non-finite ELBO");
  return parts;
}

template <typename T>
ElboParts elbo_loss(BasicVae<T>& model, std::span<const Image> images, double beta, Rng& rng) {
  auto e = build_elbo_graph(model, images.size(), beta);
  return elbo_loss(e, image_batch<T>(images), rng);
}

template ElboGraph<float> build_elbo_graph(BasicVae<float>&, std::size_t, double);
template ElboGraph<double> build_elbo_graph(BasicVae<double>&, std::size_t, double);
template ElboParts elbo_loss(ElboGraph<float>&, const Tensor<float>&, Rng&);
template ElboParts elbo_loss(ElboGraph<double>&, const Tensor<double>&, Rng&);
template ElboParts elbo_loss(BasicVae<float>&, std::span<const Image>, double, Rng&);
template ElboParts elbo_loss(BasicVae<double>&, std::span<const Image>, double, Rng&);

namespace {

// Denormal weights and gradients appear as training settles and cost ~100x
// per operation in float. MXCSR is per thread, so the guard is thread-local.
class FlushDenormals {
 public:
  explicit FlushDenormals(bool on) {
#if defined(__SSE2__)
    if (!on) return;
    saved_ = _mm_getcsr();
    active_ = true;
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
#else
    (void)on;
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE2__)
    if (active_) _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_ = 0;
  bool active_ = false;
};

}  // namespace

template <typename T>
TrainResult<T> train(std::span<const Image> dataset, const VaeArchitecture& arch, const TrainConfig& cfg) {
  if (dataset.empty()) throw ArgumentError("cannot train on an empty dataset");
  FlushDenormals ftz(std::is_same_v<T, float>);
  arch.validate();
  cfg.validate();
  for (const auto& img : dataset) {
    if (img.height() != arch.image_size || img.width() != arch.image_size) {
      throw ArgumentError("dataset image size does not match the architecture");
    }
  }
  Rng rng = make_rng(cfg.seed, Stream::kRepresentation);
  TrainResult<T> result{BasicVae<T>(arch, rng), {}, {}};
  auto& model = result.model;
  auto batch = static_cast<std::size_t>(cfg.batch_size);
  auto e = build_elbo_graph(model, batch, arch.beta);
  tensor::AdamState<T> adam(std::span<const Parameter<T>>(model.parameters()), cfg.learning_rate);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);

  auto size = static_cast<std::size_t>(arch.image_size);
  std::size_t pixels = size * size;
  Tensor<T> images({batch, 1, size, size});
  result.steps.reserve(static_cast<std::size_t>(cfg.iterations));
  TrainRecord window{};
  int in_window = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    T* dst = images.data();
    for (std::size_t b = 0; b < batch; ++b) {
      auto bytes = dataset[pick(rng)].bytes();
      for (std::size_t p = 0; p < pixels; ++p) *dst++ = static_cast<T>(bytes[p]) / T(255);
    }
    ElboParts parts = elbo_loss(e, images, rng);
    for (auto& p : model.parameters()) p.zero_grad();
    e.graph.backward(e.loss);
    tensor::adam_step(adam, std::span<Parameter<T>>(model.parameters()));
    result.steps.push_back(parts);

    window.nll += parts.nll;
    window.kl += parts.kl;
    window.loss += parts.loss;
    ++in_window;
    if ((it + 1) % cfg.log_every == 0 || it + 1 == cfg.iterations) {
      // Logged values are means over the iterations since the previous record.
      TrainRecord rec{it + 1, window.nll / in_window, window.kl / in_window, window.loss / in_window};
      result.curve.push_back(rec);
      window = {};
      in_window = 0;
    }
  }
  return result;
}

template TrainResult<float> train(std::span<const Image>, const VaeArchitecture&, const TrainConfig&);
template TrainResult<double> train(std::span<const Image>, const VaeArchitecture&, const TrainConfig&);

namespace {

double mean_loss(std::span<const ElboParts> steps) {
  if (steps.empty()) throw ArgumentError("no training steps to average");
  double s = 0.0;
  for (const auto& p : steps) s += p.loss;
  return s / static_cast<double>(steps.size());
}

}  // namespace

double smoothed_initial_loss(std::span<const ElboParts> steps, std::size_t window) {
  return mean_loss(steps.first(std::min(window, steps.size())));
}

double smoothed_final_loss(std::span<const ElboParts> steps, std::size_t window) {
  return mean_loss(steps.last(std::min(window, steps.size())));
}

GoalBox latent_ranges(const Vae& model, std::span<const Image> images) {
  if (images.empty()) throw ArgumentError("latent ranges need at least one image");
  auto points = model.embed_batch(images);
  return empirical_bounds(points, 0.0);
}

template <typename T>
Vae to_double(const BasicVae<T>& model) {
  Rng unused(0);
  Vae out(model.architecture(), unused);
  std::vector<Tensor<double>> values;
  for (const auto& p : model.parameters()) {
    values.emplace_back(p.value.shape(), std::vector<double>(p.value.values().begin(), p.value.values().end()));
  }
  out.load(values);
  return out;
}

template Vae to_double(const BasicVae<float>&);
template Vae to_double(const BasicVae<double>&);

void save_vae(const std::filesystem::path& checkpoint, const Vae& model) {
  tensor::write_checkpoint(checkpoint, model.tensors());
}

Vae load_vae(const std::filesystem::path& checkpoint, const VaeArchitecture& arch) {
  Rng unused(0);
  Vae model(arch, unused);
  auto tensors = tensor::read_checkpoint<double>(checkpoint);
  try {
    model.load(tensors);
  } catch (const ArgumentError& e) {
    throw IoError(std::string("checkpoint does not match the architecture: ") + e.what());
  }
  return model;
}

}  // namespace imgep
