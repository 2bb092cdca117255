#pragma once

#include <cstddef>

#include "imgep/random.hpp"
#include "imgep/tensor/tensor.hpp"

namespace imgep::tensor {

/// Square-kernel convolution geometry. The defaults halve the resolution.
struct Conv2dSpec {
  std::size_t kernel = 4;
  std::size_t stride = 2;
  std::size_t padding = 1;

  std::size_t output_size(std::size_t input) const;             // convolution
  std::size_t transposed_output_size(std::size_t input) const;  // transposed convolution

  friend bool operator==(const Conv2dSpec&, const Conv2dSpec&) = default;
};

// Forward and backward kernels. Backward functions accumulate (+=) into the
// gradient outputs that are non-null.

/// Cross-correlation. input [B,C,H,W], kernel [O,C,K,K], bias [O] or empty.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                         const Conv2dSpec& spec = {});
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                     const Conv2dSpec& spec, Tensor<T>* grad_input, Tensor<T>* grad_kernel, Tensor<T>* grad_bias);

/// Adjoint of conv2d. input [B,C,H,W], kernel [C,O,K,K], bias [O] or empty;
/// output [B,O,(H-1)s-2p+K, ...].
template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                                   const Conv2dSpec& spec = {});
template <typename T>
void conv_transpose2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                               const Conv2dSpec& spec, Tensor<T>* grad_input, Tensor<T>* grad_kernel,
                               Tensor<T>* grad_bias);

/// y = x W^T + b. input [B,N], weight [M,N], bias [M] or empty.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);
template <typename T>
void dense_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                    Tensor<T>* grad_input, Tensor<T>* grad_weight, Tensor<T>* grad_bias);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// z = mu + exp(logvar / 2) * eps with eps drawn from N(0, 1).
template <typename T>
Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& logvar, Rng& rng);
template <typename T>
Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& logvar, const Tensor<T>& eps);
template <typename T>
Tensor<T> standard_normal(const Shape& shape, Rng& rng);

/// KL(N(mu, exp(logvar)) || N(0, 1)) summed over every element.
template <typename T>
T kl_gaussian(const Tensor<T>& mu, const Tensor<T>& logvar);

/// Bernoulli negative log-likelihood of `target` under sigmoid(logits),
/// summed over every element. Evaluated as max(l,0) - l x + log1p(exp(-|l|)).
template <typename T>
T bernoulli_nll(const Tensor<T>& logits, const Tensor<T>& target);

}  // namespace imgep::tensor
