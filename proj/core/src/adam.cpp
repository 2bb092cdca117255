#include "imgep/tensor/adam.hpp"

#include <Eigen/Core>
#include <cmath>

#include "imgep/error.hpp"

namespace imgep::tensor {

template <typename T>
AdamState<T>::AdamState(std::span<const Parameter<T>> params, double lr) : learning_rate(lr) {
  for (const auto& p : params) {
    first_moment.emplace_back(p.value.shape());
    second_moment.emplace_back(p.value.shape());
  }
}

template <typename T>
void adam_step(AdamState<T>& state, std::span<Parameter<T>> params) {
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    throw ArgumentError("adam_step: parameter count does not match optimizer state");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].grad.shape() != params[k].value.shape() || state.first_moment[k].shape() != params[k].value.shape()) {
      throw ArgumentError("adam_step: shape mismatch for parameter '" + params[k].name + "'");
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;
  const T step_size = static_cast<T>(state.learning_rate / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(state.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto n = static_cast<Eigen::Index>(params[k].value.size());
    Eigen::Map<Array> value(params[k].value.data(), n);
    Eigen::Map<const Array> g(params[k].grad.data(), n);
    Eigen::Map<Array> m(state.first_moment[k].data(), n);
    Eigen::Map<Array> v(state.second_moment[k].data(), n);
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.square();
    value -= step_size * m / ((v * inv_c2).sqrt() + eps);
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(AdamState<float>&, std::span<Parameter<float>>);
template void adam_step(AdamState<double>&, std::span<Parameter<double>>);

}  // namespace imgep::tensor
