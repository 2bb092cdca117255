#pragma once

// Finite-difference gradient checks over randomized graph instances.

#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "imgep/tensor/graph.hpp"
#include "imgep/vae.hpp"
#include "oracles.hpp"

namespace gradcheck {

using imgep::Rng;
using imgep::tensor::Conv2dSpec;
using imgep::tensor::Graph;
using imgep::tensor::NodeId;
using imgep::tensor::Parameter;
using imgep::tensor::Shape;
using imgep::tensor::Tensor;

struct Result {
  std::string name;
  double max_error = 0.0;
  std::size_t coordinates = 0;
};

// Compares backward() with central differences for every parameter leaf.
inline Result check(const std::string& name, Graph<double>& g, NodeId loss, std::deque<Parameter<double>>& params,
                    double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  g.forward();
  g.backward(loss);
  Result r{name, 0.0, 0};
  auto eval = [&] {
    g.forward();
    return g.value(loss)[0];
  };
  for (auto& p : params) {
    std::vector<double> analytic(p.grad.values().begin(), p.grad.values().end());
    r.max_error = std::max(r.max_error, oracle::max_relative_error(p.value.values(), analytic, eval, h));
    r.coordinates += analytic.size();
  }
  return r;
}

inline Tensor<double> uniform(Shape shape, Rng& rng, double lo, double hi) {
  return oracle::random_tensor<double>(std::move(shape), rng, lo, hi);
}

// Values with magnitude in [0.1, 1] so relu kinks sit far from every sample.
inline Tensor<double> off_zero(Shape shape, Rng& rng) {
  Tensor<double> t = uniform(std::move(shape), rng, 0.1, 1.0);
  std::bernoulli_distribution flip(0.5);
  for (auto& v : t.values()) v = flip(rng) ? -v : v;
  return t;
}

inline NodeId half_sum_of_squares(Graph<double>& g, NodeId x) { return g.sum(g.scale(g.square(x), 0.5)); }

// One randomized instance of the named op. Returns the worst relative error.
inline Result check_op(const std::string& op, Rng& rng) {
  std::deque<Parameter<double>> ps;
  Graph<double> g;
  auto param = [&](const char* name, Tensor<double> v) {
    ps.emplace_back(name, std::move(v));
    return g.parameter(ps.back());
  };
  std::uniform_int_distribution<std::size_t> small(1, 3);
  NodeId out = 0;
  if (op == "conv2d" || op == "conv_transpose2d") {
    Conv2dSpec spec;
    spec.kernel = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
    spec.stride = small(rng) == 1 ? 1 : 2;
    spec.padding = std::uniform_int_distribution<std::size_t>(0, spec.kernel / 2)(rng);
    const std::size_t B = small(rng), C = small(rng), O = small(rng);
    const std::size_t H = std::uniform_int_distribution<std::size_t>(4, 7)(rng);
    const std::size_t W = std::uniform_int_distribution<std::size_t>(4, 7)(rng);
    NodeId x = param("x", uniform({B, C, H, W}, rng, -1, 1));
    if (op == "conv2d") {
      NodeId k = param("k", uniform({O, C, spec.kernel, spec.kernel}, rng, -1, 1));
      NodeId b = param("b", uniform({O}, rng, -1, 1));
      out = g.conv2d(x, k, b, spec);
    } else {
      NodeId k = param("k", uniform({C, O, spec.kernel, spec.kernel}, rng, -1, 1));
      NodeId b = param("b", uniform({O}, rng, -1, 1));
      out = g.conv_transpose2d(x, k, b, spec);
    }
  } else if (op == "dense") {
    const std::size_t B = small(rng), N = small(rng) + 2, M = small(rng) + 1;
    NodeId x = param("x", uniform({B, N}, rng, -1, 1));
    NodeId w = param("w", uniform({M, N}, rng, -1, 1));
    NodeId b = param("b", uniform({M}, rng, -1, 1));
    out = g.dense(x, w, b);
  } else if (op == "relu") {
    out = g.relu(param("x", off_zero({small(rng), 5}, rng)));
  } else if (op == "sigmoid") {
    out = g.sigmoid(param("x", uniform({small(rng), 5}, rng, -4, 4)));
  } else if (op == "reshape") {
    const std::size_t B = small(rng);
    NodeId x = param("x", uniform({B, 2, 3, 2}, rng, -1, 1));
    NodeId flat = g.flatten(x);
    NodeId back = g.reshape(flat, {B, 3, 4});
    // Weight positions unevenly so a wrong permutation would show.
    NodeId w = g.input(uniform({B, 3, 4}, rng, 0.5, 2.0));
    out = g.add(g.square(back), w);
    out = g.add(out, back);
  } else if (op == "slice_columns") {
    NodeId x = param("x", uniform({small(rng), 7}, rng, -1, 1));
    out = g.slice_columns(x, 2, 5);
  } else if (op == "add_scale") {
    NodeId a = param("a", uniform({2, 4}, rng, -1, 1));
    NodeId b = param("b", uniform({2, 4}, rng, -1, 1));
    out = g.add(g.scale(a, -1.7), g.square(b));
  } else if (op == "reparameterize") {
    const std::size_t B = small(rng), L = small(rng) + 1;
    NodeId mu = param("mu", uniform({B, L}, rng, -1, 1));
    NodeId lv = param("logvar", uniform({B, L}, rng, -2, 1));
    NodeId eps = g.input(imgep::tensor::standard_normal<double>({B, L}, rng));
    out = g.reparameterize(mu, lv, eps);
  } else if (op == "kl_gaussian") {
    const std::size_t B = small(rng), L = small(rng) + 1;
    NodeId mu = param("mu", uniform({B, L}, rng, -2, 2));
    NodeId lv = param("logvar", uniform({B, L}, rng, -3, 2));
    NodeId loss = g.kl_gaussian(mu, lv);
    return check(op, g, loss, ps);
  } else if (op == "bernoulli_nll") {
    const std::size_t B = small(rng), N = small(rng) + 2;
    NodeId l = param("logits", uniform({B, N}, rng, -6, 6));
    NodeId t = g.input(uniform({B, N}, rng, 0, 1));
    NodeId loss = g.bernoulli_nll(l, t);
    return check(op, g, loss, ps);
  } else {
    throw std::invalid_argument("unknown op " + op);
  }
  NodeId loss = half_sum_of_squares(g, out);
  return check(op, g, loss, ps);
}

inline const std::vector<std::string>& op_names() {
  static const std::vector<std::string> names{"conv2d", "conv_transpose2d", "dense",         "relu",
                                              "sigmoid", "reshape",         "slice_columns", "add_scale",
                                              "reparameterize", "kl_gaussian", "bernoulli_nll"};
  return names;
}

// A randomly sized VAE with two convolutions and four latents, checked on the
// full ELBO with fixed reparameterization noise.
inline Result check_small_vae(Rng& rng) {
  imgep::VaeArchitecture arch;
  arch.image_size = 8;
  arch.conv_layers = 2;
  arch.channels = std::uniform_int_distribution<int>(1, 3)(rng);
  arch.kernel = 4;
  arch.dense_layers = std::uniform_int_distribution<int>(1, 2)(rng);
  arch.dense_units = std::uniform_int_distribution<int>(3, 8)(rng);
  arch.latent_dim = 4;
  arch.beta = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  imgep::Vae model(arch, rng);
  // Non-zero biases so every code path carries gradient.
  for (auto& p : model.parameters())
    for (auto& v : p.value.values()) v += std::uniform_real_distribution<double>(-0.1, 0.1)(rng);

  const std::size_t batch = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
  auto eg = imgep::build_elbo_graph(model, batch, arch.beta);
  eg.graph.set_input(eg.input, uniform({batch, 1, 8, 8}, rng, 0, 1));
  eg.graph.set_input(eg.eps, imgep::tensor::standard_normal<double>({batch, 4}, rng));

  auto& params = model.parameters();
  for (auto& p : params) p.zero_grad();
  eg.graph.forward();
  eg.graph.backward(eg.loss);
  Result r{"small_vae", 0.0, 0};
  auto eval = [&] {
    eg.graph.forward();
    return eg.graph.value(eg.loss)[0];
  };
  for (auto& p : params) {
    std::vector<double> analytic(p.grad.values().begin(), p.grad.values().end());
    r.max_error = std::max(r.max_error, oracle::max_relative_error(p.value.values(), analytic, eval));
    r.coordinates += analytic.size();
  }
  return r;
}

}  // namespace gradcheck
