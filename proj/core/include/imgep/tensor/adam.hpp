#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imgep/tensor/graph.hpp"

namespace imgep::tensor {

template <typename T>
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;

  AdamState() = default;
  // Zero moments shaped like `params`.
  AdamState(std::span<const Parameter<T>> params, double lr);
};

/// One bias-corrected Adam update of every parameter from its `grad`.
template <typename T>
void adam_step(AdamState<T>& state, std::span<Parameter<T>> params);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace imgep::tensor
