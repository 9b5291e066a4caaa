#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "daqa/nn/ops.hpp"

namespace daqa::nn {

/// Named, ordered collection of trainable parameters and batch-norm buffers.
/// Buffer addresses stay valid for the lifetime of the set (including moves).
template <class T>
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;

  Var<T> add(std::string name, Tensor<T> init);
  BatchNormBuffers<T>& add_batchnorm(std::string name, int channels);

  const std::vector<std::pair<std::string, Var<T>>>& params() const { return params_; }
  /// (name, tensor) for every running statistic, in registration order.
  std::vector<std::pair<std::string, Tensor<T>*>> buffers();
  std::vector<std::pair<std::string, const Tensor<T>*>> buffers() const;

  Var<T> find(const std::string& name) const;
  std::size_t count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var<T>>> params_;
  std::deque<std::pair<std::string, BatchNormBuffers<T>>> bn_;
};

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace daqa::nn
