#include "imgep/tensor/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "imgep/error.hpp"
#include "imgep/tensor/ops.hpp"

namespace imgep::tensor {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (element_count(shape_) != values_.size()) {
    throw ArgumentError("tensor: " + std::to_string(values_.size()) + " values do not fit shape " +
                        shape_string(shape_));
  }
}

template <typename T>
void Tensor<T>::reshape(Shape shape) {
  if (element_count(shape) != values_.size()) {
    throw ArgumentError("reshape: " + shape_string(shape_) + " -> " + shape_string(shape) + " changes size");
  }
  shape_ = std::move(shape);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(values_.begin(), values_.end(), v);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void Tensor<T>::accumulate(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ArgumentError("accumulate: shape " + shape_string(other.shape_) + " != " + shape_string(shape_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

template class Tensor<float>;
template class Tensor<double>;

// ---------------------------------------------------------------------------
// Kernels

std::size_t Conv2dSpec::output_size(std::size_t input) const {
  if (input + 2 * padding < kernel) throw ArgumentError("conv2d: input smaller than kernel");
  return (input + 2 * padding - kernel) / stride + 1;
}

std::size_t Conv2dSpec::transposed_output_size(std::size_t input) const {
  if (input == 0) throw ArgumentError("conv_transpose2d: empty input");
  std::size_t full = (input - 1) * stride + kernel;
  if (full < 2 * padding) throw ArgumentError("conv_transpose2d: padding larger than output");
  return full - 2 * padding;
}

namespace {

template <typename T>
using MatrixMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct ImageGeometry {
  std::size_t channels, height, width;  // the padded-convolution "image" side
  std::size_t out_h, out_w;             // the column grid side
};

// image [C,H,W] -> columns [C*K*K, out_h*out_w], rows `ld` apart.
template <typename T>
void im2col(const T* image, const ImageGeometry& g, const Conv2dSpec& spec, T* cols, std::size_t ld) {
  const std::size_t k = spec.kernel;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        T* row = cols + ((c * k + ki) * k + kj) * ld;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          long ih = static_cast<long>(oh * spec.stride + ki) - static_cast<long>(spec.padding);
          T* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = image + (c * g.height + ih) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            long iw = static_cast<long>(ow * spec.stride + kj) - static_cast<long>(spec.padding);
            dst[ow] = iw >= 0 && iw < static_cast<long>(g.width) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

// Adds columns back into image [C,H,W]; adjoint of im2col.
template <typename T>
void col2im(const T* cols, const ImageGeometry& g, const Conv2dSpec& spec, T* image, std::size_t ld) {
  const std::size_t k = spec.kernel;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* row = cols + ((c * k + ki) * k + kj) * ld;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          long ih = static_cast<long>(oh * spec.stride + ki) - static_cast<long>(spec.padding);
          if (ih < 0 || ih >= static_cast<long>(g.height)) continue;
          const T* src = row + oh * g.out_w;
          T* dst = image + (c * g.height + ih) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            long iw = static_cast<long>(ow * spec.stride + kj) - static_cast<long>(spec.padding);
            if (iw >= 0 && iw < static_cast<long>(g.width)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

// Images per GEMM: enough to amortize the call, few enough that the column
// buffer stays cache resident.
std::size_t chunk_images(std::size_t patch, std::size_t n_cols) {
  constexpr std::size_t kTarget = 1 << 16;
  return std::max<std::size_t>(1, kTarget / std::max<std::size_t>(1, patch * n_cols));
}

// [B, C, n] <-> [C, B*n]: lets one GEMM cover several images.
template <typename T>
void batch_to_channels(const T* src, std::size_t batch, std::size_t channels, std::size_t n, T* dst) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) std::copy_n(src + (b * channels + c) * n, n, dst + (c * batch + b) * n);
  }
}

template <typename T>
void channels_to_batch(const T* src, std::size_t batch, std::size_t channels, std::size_t n, T* dst, bool add) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T* from = src + (c * batch + b) * n;
      T* to = dst + (b * channels + c) * n;
      if (add) {
        for (std::size_t i = 0; i < n; ++i) to[i] += from[i];
      } else {
        std::copy_n(from, n, to);
      }
    }
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ArgumentError(message);
}

template <typename T>
void check_bias(const Tensor<T>& bias, std::size_t channels, const char* op) {
  if (!bias.empty()) require(bias.rank() == 1 && bias.dim(0) == channels, std::string(op) + ": bias shape mismatch");
}

template <typename T>
void check_grad(const Tensor<T>* grad, const Shape& shape, const char* what) {
  if (grad) require(grad->shape() == shape, std::string(what) + " gradient buffer has the wrong shape");
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                         const Conv2dSpec& spec) {
  require(input.rank() == 4 && kernel.rank() == 4, "conv2d: expected 4-D input and kernel");
  require(kernel.dim(1) == input.dim(1), "conv2d: kernel channels " + shape_string(kernel.shape()) +
                                             " do not match input " + shape_string(input.shape()));
  require(kernel.dim(2) == spec.kernel && kernel.dim(3) == spec.kernel, "conv2d: kernel size mismatch");
  const std::size_t batch = input.dim(0), in_c = input.dim(1), out_c = kernel.dim(0);
  check_bias(bias, out_c, "conv2d");
  ImageGeometry g{in_c, input.dim(2), input.dim(3), spec.output_size(input.dim(2)), spec.output_size(input.dim(3))};
  const std::size_t patch = in_c * spec.kernel * spec.kernel;
  const std::size_t n_cols = g.out_h * g.out_w;

  const std::size_t image_size = in_c * g.height * g.width;
  const std::size_t chunk = std::min(batch, chunk_images(patch, n_cols));
  AlignedVector<T> cols(patch * chunk * n_cols);
  AlignedVector<T> y(out_c * chunk * n_cols);
  Tensor<T> out({batch, out_c, g.out_h, g.out_w});
  ConstMatrixMap<T> w(kernel.data(), out_c, patch);
  for (std::size_t b0 = 0; b0 < batch; b0 += chunk) {
    const std::size_t nb = std::min(chunk, batch - b0);
    const std::size_t ld = nb * n_cols;
    for (std::size_t b = 0; b < nb; ++b) {
      im2col(input.data() + (b0 + b) * image_size, g, spec, cols.data() + b * n_cols, ld);
    }
    MatrixMap<T> ym(y.data(), out_c, ld);
    ym.noalias() = w * ConstMatrixMap<T>(cols.data(), patch, ld);
    if (!bias.empty()) {
      for (std::size_t o = 0; o < out_c; ++o) ym.row(o).array() += bias[o];
    }
    channels_to_batch(y.data(), nb, out_c, n_cols, out.data() + b0 * out_c * n_cols, false);
  }
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                     const Conv2dSpec& spec, Tensor<T>* grad_input, Tensor<T>* grad_kernel, Tensor<T>* grad_bias) {
  const std::size_t batch = input.dim(0), in_c = input.dim(1), out_c = kernel.dim(0);
  ImageGeometry g{in_c, input.dim(2), input.dim(3), spec.output_size(input.dim(2)), spec.output_size(input.dim(3))};
  require(grad_out.shape() == Shape({batch, out_c, g.out_h, g.out_w}), "conv2d_backward: grad_out shape mismatch");
  check_grad(grad_input, input.shape(), "conv2d input");
  check_grad(grad_kernel, kernel.shape(), "conv2d kernel");
  if (grad_bias) require(grad_bias->shape() == Shape({out_c}), "conv2d bias gradient buffer has the wrong shape");
  const std::size_t patch = in_c * spec.kernel * spec.kernel;
  const std::size_t n_cols = g.out_h * g.out_w;
  const std::size_t image_size = in_c * g.height * g.width;

  const std::size_t chunk = std::min(batch, chunk_images(patch, n_cols));
  AlignedVector<T> dy(out_c * chunk * n_cols);
  AlignedVector<T> cols(patch * chunk * n_cols);
  ConstMatrixMap<T> w(kernel.data(), out_c, patch);
  for (std::size_t b0 = 0; b0 < batch; b0 += chunk) {
    const std::size_t nb = std::min(chunk, batch - b0);
    const std::size_t ld = nb * n_cols;
    batch_to_channels(grad_out.data() + b0 * out_c * n_cols, nb, out_c, n_cols, dy.data());
    ConstMatrixMap<T> dym(dy.data(), out_c, ld);
    if (grad_kernel) {
      for (std::size_t b = 0; b < nb; ++b) {
        im2col(input.data() + (b0 + b) * image_size, g, spec, cols.data() + b * n_cols, ld);
      }
      MatrixMap<T>(grad_kernel->data(), out_c, patch).noalias() +=
          dym * ConstMatrixMap<T>(cols.data(), patch, ld).transpose();
    }
    if (grad_input) {
      MatrixMap<T>(cols.data(), patch, ld).noalias() = w.transpose() * dym;
      for (std::size_t b = 0; b < nb; ++b) {
        col2im(cols.data() + b * n_cols, g, spec, grad_input->data() + (b0 + b) * image_size, ld);
      }
    }
    if (grad_bias) {
      for (std::size_t o = 0; o < out_c; ++o) (*grad_bias)[o] += dym.row(o).sum();
    }
  }
}

template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                                   const Conv2dSpec& spec) {
  require(input.rank() == 4 && kernel.rank() == 4, "conv_transpose2d: expected 4-D input and kernel");
  require(kernel.dim(0) == input.dim(1), "conv_transpose2d: kernel " + shape_string(kernel.shape()) +
                                             " does not match input " + shape_string(input.shape()));
  require(kernel.dim(2) == spec.kernel && kernel.dim(3) == spec.kernel, "conv_transpose2d: kernel size mismatch");
  const std::size_t batch = input.dim(0), in_c = input.dim(1), out_c = kernel.dim(1);
  check_bias(bias, out_c, "conv_transpose2d");
  const std::size_t out_h = spec.transposed_output_size(input.dim(2));
  const std::size_t out_w = spec.transposed_output_size(input.dim(3));
  ImageGeometry g{out_c, out_h, out_w, input.dim(2), input.dim(3)};
  require(spec.output_size(out_h) == g.out_h && spec.output_size(out_w) == g.out_w,
          "conv_transpose2d: geometry is not invertible");
  const std::size_t patch = out_c * spec.kernel * spec.kernel;
  const std::size_t n_cols = g.out_h * g.out_w;

  const std::size_t chunk = std::min(batch, chunk_images(patch, n_cols));
  AlignedVector<T> x(in_c * chunk * n_cols);
  AlignedVector<T> cols(patch * chunk * n_cols);
  ConstMatrixMap<T> w(kernel.data(), in_c, patch);
  Tensor<T> out({batch, out_c, out_h, out_w});
  const std::size_t plane = out_h * out_w;
  for (std::size_t b0 = 0; b0 < batch; b0 += chunk) {
    const std::size_t nb = std::min(chunk, batch - b0);
    const std::size_t ld = nb * n_cols;
    batch_to_channels(input.data() + b0 * in_c * n_cols, nb, in_c, n_cols, x.data());
    MatrixMap<T>(cols.data(), patch, ld).noalias() = w.transpose() * ConstMatrixMap<T>(x.data(), in_c, ld);
    for (std::size_t b = 0; b < nb; ++b) {
      T* y = out.data() + (b0 + b) * out_c * plane;
      col2im(cols.data() + b * n_cols, g, spec, y, ld);
      if (!bias.empty()) {
        for (std::size_t o = 0; o < out_c; ++o) {
          for (std::size_t i = 0; i < plane; ++i) y[o * plane + i] += bias[o];
        }
      }
    }
  }
  return out;
}

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                               const Conv2dSpec& spec, Tensor<T>* grad_input, Tensor<T>* grad_kernel,
                               Tensor<T>* grad_bias) {
  const std::size_t batch = input.dim(0), in_c = input.dim(1), out_c = kernel.dim(1);
  const std::size_t out_h = spec.transposed_output_size(input.dim(2));
  const std::size_t out_w = spec.transposed_output_size(input.dim(3));
  require(grad_out.shape() == Shape({batch, out_c, out_h, out_w}),
          "conv_transpose2d_backward: grad_out shape mismatch");
  check_grad(grad_input, input.shape(), "conv_transpose2d input");
  check_grad(grad_kernel, kernel.shape(), "conv_transpose2d kernel");
  if (grad_bias) require(grad_bias->shape() == Shape({out_c}), "conv_transpose2d bias gradient has the wrong shape");
  ImageGeometry g{out_c, out_h, out_w, input.dim(2), input.dim(3)};
  const std::size_t patch = out_c * spec.kernel * spec.kernel;
  const std::size_t n_cols = g.out_h * g.out_w;
  const std::size_t out_size = out_c * out_h * out_w;

  if (grad_input || grad_kernel) {
    const std::size_t chunk = std::min(batch, chunk_images(patch, n_cols));
    AlignedVector<T> cols(patch * chunk * n_cols);
    AlignedVector<T> buf(in_c * chunk * n_cols);
    ConstMatrixMap<T> w(kernel.data(), in_c, patch);
    for (std::size_t b0 = 0; b0 < batch; b0 += chunk) {
      const std::size_t nb = std::min(chunk, batch - b0);
      const std::size_t ld = nb * n_cols;
      for (std::size_t b = 0; b < nb; ++b) {
        im2col(grad_out.data() + (b0 + b) * out_size, g, spec, cols.data() + b * n_cols, ld);
      }
      ConstMatrixMap<T> dcols(cols.data(), patch, ld);
      if (grad_input) {
        MatrixMap<T>(buf.data(), in_c, ld).noalias() = w * dcols;
        channels_to_batch(buf.data(), nb, in_c, n_cols, grad_input->data() + b0 * in_c * n_cols, true);
      }
      if (grad_kernel) {
        batch_to_channels(input.data() + b0 * in_c * n_cols, nb, in_c, n_cols, buf.data());
        MatrixMap<T>(grad_kernel->data(), in_c, patch).noalias() +=
            ConstMatrixMap<T>(buf.data(), in_c, ld) * dcols.transpose();
      }
    }
  }
  if (grad_bias) {
    const std::size_t plane = out_h * out_w;
    for (std::size_t b = 0; b < batch; ++b) {
      const T* dy = grad_out.data() + b * out_size;
      for (std::size_t o = 0; o < out_c; ++o) {
        T acc = 0;
        for (std::size_t i = 0; i < plane; ++i) acc += dy[o * plane + i];
        (*grad_bias)[o] += acc;
      }
    }
  }
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(input.rank() == 2 && weight.rank() == 2, "dense: expected 2-D input and weight");
  require(weight.dim(1) == input.dim(1), "dense: weight " + shape_string(weight.shape()) + " does not match input " +
                                             shape_string(input.shape()));
  const std::size_t batch = input.dim(0), n = input.dim(1), m = weight.dim(0);
  check_bias(bias, m, "dense");
  Tensor<T> out({batch, m});
  MatrixMap<T> y(out.data(), batch, m);
  y.noalias() = ConstMatrixMap<T>(input.data(), batch, n) * ConstMatrixMap<T>(weight.data(), m, n).transpose();
  if (!bias.empty()) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < m; ++j) y(b, j) += bias[j];
    }
  }
  return out;
}

template <typename T>
void dense_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                    Tensor<T>* grad_input, Tensor<T>* grad_weight, Tensor<T>* grad_bias) {
  const std::size_t batch = input.dim(0), n = input.dim(1), m = weight.dim(0);
  require(grad_out.shape() == Shape({batch, m}), "dense_backward: grad_out shape mismatch");
  check_grad(grad_input, input.shape(), "dense input");
  check_grad(grad_weight, weight.shape(), "dense weight");
  if (grad_bias) require(grad_bias->shape() == Shape({m}), "dense bias gradient buffer has the wrong shape");
  ConstMatrixMap<T> dy(grad_out.data(), batch, m);
  if (grad_input) {
    MatrixMap<T>(grad_input->data(), batch, n).noalias() += dy * ConstMatrixMap<T>(weight.data(), m, n);
  }
  if (grad_weight) {
    MatrixMap<T>(grad_weight->data(), m, n).noalias() += dy.transpose() * ConstMatrixMap<T>(input.data(), batch, n);
  }
  if (grad_bias) {
    for (std::size_t j = 0; j < m; ++j) (*grad_bias)[j] += dy.col(j).sum();
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.values()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.values()) v = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  return y;
}

template <typename T>
Tensor<T> standard_normal(const Shape& shape, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor<T> out(shape);
  for (T& v : out.values()) v = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& logvar, const Tensor<T>& eps) {
  require(mu.shape() == logvar.shape() && mu.shape() == eps.shape(), "reparameterize: shape mismatch");
  Tensor<T> z(mu.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + std::exp(T(0.5) * logvar[i]) * eps[i];
  return z;
}

template <typename T>
Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& logvar, Rng& rng) {
  return reparameterize(mu, logvar, standard_normal<T>(mu.shape(), rng));
}

template <typename T>
T kl_gaussian(const Tensor<T>& mu, const Tensor<T>& logvar) {
  require(mu.shape() == logvar.shape(), "kl_gaussian: shape mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += T(-0.5) * (T(1) + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]));
  }
  return acc;
}

template <typename T>
T bernoulli_nll(const Tensor<T>& logits, const Tensor<T>& target) {
  require(logits.shape() == target.shape(), "bernoulli_nll: shape mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    T l = logits[i];
    acc += std::max(l, T(0)) - l * target[i] + std::log1p(std::exp(-std::abs(l)));
  }
  return acc;
}

#define IMGEP_INSTANTIATE_OPS(T)                                                                                     \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Conv2dSpec&);        \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Conv2dSpec&, Tensor<T>*, \
                                Tensor<T>*, Tensor<T>*);                                                             \
  template Tensor<T> conv_transpose2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
                                              const Conv2dSpec&);                                                    \
  template void conv_transpose2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Conv2dSpec&,   \
                                          Tensor<T>*, Tensor<T>*, Tensor<T>*);                                       \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                            \
  template void dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>*,         \
                               Tensor<T>*);                                                                          \
  template Tensor<T> relu(const Tensor<T>&);                                                                         \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                                      \
  template Tensor<T> standard_normal(const Shape&, Rng&);                                                            \
  template Tensor<T> reparameterize(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> reparameterize(const Tensor<T>&, const Tensor<T>&, Rng&);                                       \
  template T kl_gaussian(const Tensor<T>&, const Tensor<T>&);                                                        \
  template T bernoulli_nll(const Tensor<T>&, const Tensor<T>&);

IMGEP_INSTANTIATE_OPS(float)
IMGEP_INSTANTIATE_OPS(double)

#undef IMGEP_INSTANTIATE_OPS

}  // namespace imgep::tensor
