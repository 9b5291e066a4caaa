#pragma once

#include <cmath>

#include "daqa/common/rng.hpp"
#include "daqa/nn/tensor.hpp"

namespace daqa::nn {

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); used for conv and linear weights and biases.
template <class T>
Tensor<T> uniform_fan_in(Shape shape, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(uniform_real(rng, -bound, bound));
  return t;
}

template <class T>
Tensor<T> standard_normal_tensor(Shape shape, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(standard_normal(rng));
  return t;
}

}  // namespace daqa::nn
