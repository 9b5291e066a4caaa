#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "daqa/nn/params.hpp"

namespace daqa::nn {

struct AdamConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool decoupled = true;  // false: L2 term added to the gradient
};

template <class T>
struct AdamMoments {
  std::vector<T> m, v;
};

/// One Adam update of `p` in place. `step` is the 1-based step index used for
/// bias correction. Decoupled decay scales p by (1 - lr*wd) before the Adam delta.
template <class T>
void adam_update(std::span<T> p, std::span<const T> g, AdamMoments<T>& state, std::int64_t step, const AdamConfig& cfg);

/// Adam over every parameter of a ParamSet. Parameters without a gradient
/// are treated as having a zero gradient.
template <class T>
class Adam {
 public:
  Adam(ParamSet<T>& params, AdamConfig cfg);
  void step();
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  ParamSet<T>* params_;
  AdamConfig cfg_;
  std::vector<AdamMoments<T>> state_;
  std::int64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace daqa::nn
