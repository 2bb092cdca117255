#include "imgep/tensor/graph.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "imgep/error.hpp"

namespace imgep::tensor {

template <typename T>
NodeId Graph<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  forward_done_ = false;
  return nodes_.size() - 1;
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(NodeId id) const {
  if (id >= nodes_.size()) throw ArgumentError("graph: unknown node id " + std::to_string(id));
  return nodes_[id];
}

template <typename T>
const Tensor<T>& Graph<T>::val(NodeId id) const {
  const Node& n = nodes_[id];
  return n.op == Op::kParameter ? n.param->value : n.value;
}

template <typename T>
NodeId Graph<T>::input(Tensor<T> value) {
  Node n = make_node(Op::kInput);
  n.shape = value.shape();
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::parameter(Parameter<T>& p) {
  Node n = make_node(Op::kParameter);
  n.shape = p.value.shape();
  n.param = &p;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::conv2d(NodeId x, NodeId kernel, NodeId bias, const Conv2dSpec& spec) {
  const Shape& xs = node(x).shape;
  const Shape& ks = node(kernel).shape;
  const Shape& bs = node(bias).shape;
  if (xs.size() != 4 || ks.size() != 4 || ks[1] != xs[1] || ks[2] != spec.kernel || ks[3] != spec.kernel) {
    throw ArgumentError("graph conv2d: input " + shape_string(xs) + " incompatible with kernel " + shape_string(ks));
  }
  if (bs != Shape{ks[0]}) throw ArgumentError("graph conv2d: bias must be [" + std::to_string(ks[0]) + "]");
  Node n = make_node(Op::kConv2d, x, kernel, bias);
  n.conv = spec;
  n.shape = {xs[0], ks[0], spec.output_size(xs[2]), spec.output_size(xs[3])};
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::conv_transpose2d(NodeId x, NodeId kernel, NodeId bias, const Conv2dSpec& spec) {
  const Shape& xs = node(x).shape;
  const Shape& ks = node(kernel).shape;
  const Shape& bs = node(bias).shape;
  if (xs.size() != 4 || ks.size() != 4 || ks[0] != xs[1] || ks[2] != spec.kernel || ks[3] != spec.kernel) {
    throw ArgumentError("graph conv_transpose2d: input " + shape_string(xs) + " incompatible with kernel " +
                        shape_string(ks));
  }
  if (bs != Shape{ks[1]}) throw ArgumentError("graph conv_transpose2d: bias must be [" + std::to_string(ks[1]) + "]");
  Node n = make_node(Op::kConvTranspose2d, x, kernel, bias);
  n.conv = spec;
  n.shape = {xs[0], ks[1], spec.transposed_output_size(xs[2]), spec.transposed_output_size(xs[3])};
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::dense(NodeId x, NodeId weight, NodeId bias) {
  const Shape& xs = node(x).shape;
  const Shape& ws = node(weight).shape;
  if (xs.size() != 2 || ws.size() != 2 || ws[1] != xs[1]) {
    throw ArgumentError("graph dense: input " + shape_string(xs) + " incompatible with weight " + shape_string(ws));
  }
  if (node(bias).shape != Shape{ws[0]}) throw ArgumentError("graph dense: bias must be [" + std::to_string(ws[0]) + "]");
  Node n = make_node(Op::kDense, x, weight, bias);
  n.shape = {xs[0], ws[0]};
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::relu(NodeId x) {
  Node n = make_node(Op::kRelu, x);
  n.shape = node(x).shape;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::sigmoid(NodeId x) {
  Node n = make_node(Op::kSigmoid, x);
  n.shape = node(x).shape;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::reshape(NodeId x, Shape shape) {
  if (element_count(shape) != element_count(node(x).shape)) {
    throw ArgumentError("graph reshape: " + shape_string(node(x).shape) + " -> " + shape_string(shape));
  }
  Node n = make_node(Op::kReshape, x);
  n.shape = std::move(shape);
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::flatten(NodeId x) {
  const Shape& s = node(x).shape;
  if (s.empty()) throw ArgumentError("graph flatten: scalar input");
  return reshape(x, {s[0], element_count(s) / std::max<std::size_t>(s[0], 1)});
}

template <typename T>
NodeId Graph<T>::slice_columns(NodeId x, std::size_t begin, std::size_t end) {
  const Shape& s = node(x).shape;
  if (s.size() != 2 || begin >= end || end > s[1]) throw ArgumentError("graph slice_columns: bad range");
  Node n = make_node(Op::kSliceColumns, x);
  n.begin = begin;
  n.end = end;
  n.shape = {s[0], end - begin};
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b) {
  if (node(a).shape != node(b).shape) throw ArgumentError("graph add: shape mismatch");
  Node n = make_node(Op::kAdd, a, b);
  n.shape = node(a).shape;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::scale(NodeId x, T factor) {
  Node n = make_node(Op::kScale, x);
  n.factor = factor;
  n.shape = node(x).shape;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::square(NodeId x) {
  Node n = make_node(Op::kSquare, x);
  n.shape = node(x).shape;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::sum(NodeId x) {
  Node n = make_node(Op::kSum, x);
  n.shape = {1};
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::reparameterize(NodeId mu, NodeId logvar, NodeId eps) {
  if (node(mu).shape != node(logvar).shape || node(mu).shape != node(eps).shape) {
    throw ArgumentError("graph reparameterize: shape mismatch");
  }
  Node n = make_node(Op::kReparameterize, mu, logvar, eps);
  n.shape = node(mu).shape;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::kl_gaussian(NodeId mu, NodeId logvar) {
  if (node(mu).shape != node(logvar).shape) throw ArgumentError("graph kl_gaussian: shape mismatch");
  Node n = make_node(Op::kKlGaussian, mu, logvar);
  n.shape = {1};
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::bernoulli_nll(NodeId logits, NodeId target) {
  if (node(logits).shape != node(target).shape) throw ArgumentError("graph bernoulli_nll: shape mismatch");
  Node n = make_node(Op::kBernoulliNll, logits, target);
  n.shape = {1};
  return push(std::move(n));
}

template <typename T>
void Graph<T>::set_input(NodeId id, Tensor<T> value) {
  Node& n = nodes_.at(id);
  if (n.op != Op::kInput) throw ArgumentError("graph set_input: node is not an input");
  if (value.shape() != n.shape) {
    throw ArgumentError("graph set_input: expected " + shape_string(n.shape) + ", got " + shape_string(value.shape()));
  }
  n.value = std::move(value);
  forward_done_ = false;
}

template <typename T>
void Graph<T>::compute(Node& n) {
  switch (n.op) {
    case Op::kInput:
    case Op::kParameter:
      return;
    case Op::kConv2d:
      n.value = conv2d_forward(val(n.a), val(n.b), val(n.c), n.conv);
      break;
    case Op::kConvTranspose2d:
      n.value = conv_transpose2d_forward(val(n.a), val(n.b), val(n.c), n.conv);
      break;
    case Op::kDense:
      n.value = dense_forward(val(n.a), val(n.b), val(n.c));
      break;
    case Op::kRelu:
      n.value = tensor::relu(val(n.a));
      break;
    case Op::kSigmoid:
      n.value = tensor::sigmoid(val(n.a));
      break;
    case Op::kReshape:
      n.value = val(n.a).reshaped(n.shape);
      break;
    case Op::kSliceColumns: {
      const Tensor<T>& x = val(n.a);
      n.value = Tensor<T>(n.shape);
      for (std::size_t r = 0; r < n.shape[0]; ++r) {
        for (std::size_t c = n.begin; c < n.end; ++c) n.value(r, c - n.begin) = x(r, c);
      }
      break;
    }
    case Op::kAdd: {
      n.value = val(n.a);
      n.value.accumulate(val(n.b));
      break;
    }
    case Op::kScale:
      n.value = val(n.a);
      for (T& v : n.value.values()) v *= n.factor;
      break;
    case Op::kSquare:
      n.value = val(n.a);
      for (T& v : n.value.values()) v *= v;
      break;
    case Op::kSum: {
      T acc = 0;
      for (T v : val(n.a).values()) acc += v;
      n.value = Tensor<T>::scalar(acc);
      break;
    }
    case Op::kReparameterize:
      n.value = tensor::reparameterize(val(n.a), val(n.b), val(n.c));
      break;
    case Op::kKlGaussian:
      n.value = Tensor<T>::scalar(tensor::kl_gaussian(val(n.a), val(n.b)));
      break;
    case Op::kBernoulliNll:
      n.value = Tensor<T>::scalar(tensor::bernoulli_nll(val(n.a), val(n.b)));
      break;
  }
  assert(n.value.all_finite() && "non-finite value in graph");
}

template <typename T>
void Graph<T>::forward() {
  for (Node& n : nodes_) compute(n);
  forward_done_ = true;
}

template <typename T>
Tensor<T>& Graph<T>::grad_slot(NodeId id) {
  return nodes_[id].grad;
}

template <typename T>
void Graph<T>::propagate(Node& n) {
  const Tensor<T>& g = n.grad;
  auto slot = [&](NodeId id) -> Tensor<T>* {
    if (id == kNone) return nullptr;
    Node& in = nodes_[id];
    return in.grad.empty() ? nullptr : &in.grad;
  };
  switch (n.op) {
    case Op::kInput:
      return;
    case Op::kParameter:
      n.param->grad.accumulate(g);
      return;
    case Op::kConv2d:
      conv2d_backward(val(n.a), val(n.b), g, n.conv, slot(n.a), slot(n.b), slot(n.c));
      return;
    case Op::kConvTranspose2d:
      conv_transpose2d_backward(val(n.a), val(n.b), g, n.conv, slot(n.a), slot(n.b), slot(n.c));
      return;
    case Op::kDense:
      dense_backward(val(n.a), val(n.b), g, slot(n.a), slot(n.b), slot(n.c));
      return;
    case Op::kRelu:
      if (auto* dx = slot(n.a)) {
        const Tensor<T>& x = val(n.a);
        for (std::size_t i = 0; i < x.size(); ++i) (*dx)[i] += x[i] > T(0) ? g[i] : T(0);
      }
      return;
    case Op::kSigmoid:
      if (auto* dx = slot(n.a)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          T s = n.value[i];
          (*dx)[i] += g[i] * s * (T(1) - s);
        }
      }
      return;
    case Op::kReshape:
      if (auto* dx = slot(n.a)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += g[i];
      }
      return;
    case Op::kSliceColumns:
      if (auto* dx = slot(n.a)) {
        for (std::size_t r = 0; r < n.shape[0]; ++r) {
          for (std::size_t c = n.begin; c < n.end; ++c) (*dx)(r, c) += g(r, c - n.begin);
        }
      }
      return;
    case Op::kAdd:
      if (auto* da = slot(n.a)) da->accumulate(g);
      if (auto* db = slot(n.b)) db->accumulate(g);
      return;
    case Op::kScale:
      if (auto* dx = slot(n.a)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += n.factor * g[i];
      }
      return;
    case Op::kSquare:
      if (auto* dx = slot(n.a)) {
        const Tensor<T>& x = val(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += T(2) * x[i] * g[i];
      }
      return;
    case Op::kSum:
      if (auto* dx = slot(n.a)) {
        for (T& v : dx->values()) v += g[0];
      }
      return;
    case Op::kReparameterize: {
      const Tensor<T>& logvar = val(n.b);
      const Tensor<T>& eps = val(n.c);
      if (auto* dmu = slot(n.a)) dmu->accumulate(g);
      if (auto* dlv = slot(n.b)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*dlv)[i] += g[i] * T(0.5) * std::exp(T(0.5) * logvar[i]) * eps[i];
      }
      return;
    }
    case Op::kKlGaussian: {
      const Tensor<T>& mu = val(n.a);
      const Tensor<T>& logvar = val(n.b);
      if (auto* dmu = slot(n.a)) {
        for (std::size_t i = 0; i < mu.size(); ++i) (*dmu)[i] += g[0] * mu[i];
      }
      if (auto* dlv = slot(n.b)) {
        for (std::size_t i = 0; i < logvar.size(); ++i) (*dlv)[i] += g[0] * T(0.5) * (std::exp(logvar[i]) - T(1));
      }
      return;
    }
    case Op::kBernoulliNll: {
      const Tensor<T>& logits = val(n.a);
      const Tensor<T>& target = val(n.b);
      if (auto* dl = slot(n.a)) {
        for (std::size_t i = 0; i < logits.size(); ++i) {
          T l = logits[i];
          T s = l >= T(0) ? T(1) / (T(1) + std::exp(-l)) : std::exp(l) / (T(1) + std::exp(l));
          (*dl)[i] += g[0] * (s - target[i]);
        }
      }
      return;
    }
  }
}

template <typename T>
void Graph<T>::backward(NodeId loss) {
  if (!forward_done_) throw StateError("graph backward: forward() has not been run on the current inputs");
  if (loss >= nodes_.size()) throw ArgumentError("graph backward: unknown loss node");
  if (element_count(nodes_[loss].shape) != 1) throw ArgumentError("graph backward: loss must be a scalar");

  // Only nodes that lead to a parameter carry gradients.
  std::vector<char> needs(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    needs[i] = n.op == Op::kParameter || (n.a != kNone && needs[n.a]) || (n.b != kNone && needs[n.b]) ||
               (n.c != kNone && needs[n.c]);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].grad = needs[i] && i <= loss ? Tensor<T>(nodes_[i].shape) : Tensor<T>();
  }
  if (!needs[loss]) return;
  nodes_[loss].grad[0] = T(1);
  for (std::size_t i = loss + 1; i-- > 0;) {
    if (!nodes_[i].grad.empty()) propagate(nodes_[i]);
  }
}

template <typename T>
const Tensor<T>& Graph<T>::value(NodeId id) const {
  if (!forward_done_) throw StateError("graph value: forward() has not been run");
  node(id);
  return val(id);
}

template <typename T>
const Tensor<T>& Graph<T>::grad(NodeId id) const {
  return node(id).grad;
}

template <typename T>
const Shape& Graph<T>::shape(NodeId id) const {
  return node(id).shape;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace imgep::tensor
