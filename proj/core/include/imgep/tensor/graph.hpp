#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "imgep/tensor/ops.hpp"
#include "imgep/tensor/tensor.hpp"

namespace imgep::tensor {

/// Trainable tensor with its gradient accumulator.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor<T>(value.shape()); }
};

using NodeId = std::size_t;

/// Define-then-run computation graph with reverse-mode differentiation.
///
/// Nodes are appended in topological order. `forward()` evaluates every node;
/// `backward(loss)` then propagates d(loss)/d(node) in reverse order and adds
/// the gradients of parameter leaves into `Parameter::grad`. Inputs can be
/// replaced between passes, so one graph serves every minibatch.
///
/// Parameter leaves keep a pointer to their Parameter, which must outlive the
/// graph and keep its address.
template <typename T>
class Graph {
 public:
  NodeId input(Tensor<T> value);
  NodeId parameter(Parameter<T>& p);

  NodeId conv2d(NodeId x, NodeId kernel, NodeId bias, const Conv2dSpec& spec = {});
  NodeId conv_transpose2d(NodeId x, NodeId kernel, NodeId bias, const Conv2dSpec& spec = {});
  NodeId dense(NodeId x, NodeId weight, NodeId bias);
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId reshape(NodeId x, Shape shape);
  NodeId flatten(NodeId x);                              // [B, ...] -> [B, rest]
  NodeId slice_columns(NodeId x, std::size_t begin, std::size_t end);  // [B, N] -> [B, end-begin]
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId x, T factor);
  NodeId square(NodeId x);
  NodeId sum(NodeId x);
  NodeId reparameterize(NodeId mu, NodeId logvar, NodeId eps);
  NodeId kl_gaussian(NodeId mu, NodeId logvar);          // scalar
  NodeId bernoulli_nll(NodeId logits, NodeId target);    // scalar

  void set_input(NodeId id, Tensor<T> value);

  void forward();
  // Requires a completed forward() since the last change; loss must be scalar.
  void backward(NodeId loss);

  const Tensor<T>& value(NodeId id) const;
  const Tensor<T>& grad(NodeId id) const;  // valid after backward()
  const Shape& shape(NodeId id) const;     // known at construction time
  std::size_t size() const { return nodes_.size(); }
  bool forward_done() const { return forward_done_; }

 private:
  enum class Op {
    kInput,
    kParameter,
    kConv2d,
    kConvTranspose2d,
    kDense,
    kRelu,
    kSigmoid,
    kReshape,
    kSliceColumns,
    kAdd,
    kScale,
    kSquare,
    kSum,
    kReparameterize,
    kKlGaussian,
    kBernoulliNll,
  };

  static constexpr NodeId kNone = static_cast<NodeId>(-1);

  struct Node {
    Op op;
    NodeId a = kNone;
    NodeId b = kNone;
    NodeId c = kNone;
    Shape shape;
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    Conv2dSpec conv;
    T factor = T(1);
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  static Node make_node(Op op, NodeId a = kNone, NodeId b = kNone, NodeId c = kNone) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    return n;
  }
  NodeId push(Node node);
  const Node& node(NodeId id) const;
  const Tensor<T>& val(NodeId id) const;
  void compute(Node& n);
  void propagate(Node& n);
  Tensor<T>& grad_slot(NodeId id);

  std::vector<Node> nodes_;
  bool forward_done_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace imgep::tensor
