#include "daqa/nn/optim.hpp"

#include <cmath>

#include "daqa/common/error.hpp"

namespace daqa::nn {

template <class T>
void adam_update(std::span<T> p, std::span<const T> g, AdamMoments<T>& s, std::int64_t step, const AdamConfig& cfg) {
  if (!g.empty() && g.size() != p.size()) throw ShapeError("adam: gradient size does not match parameter");
  if (s.m.size() != p.size()) {
    s.m.assign(p.size(), T(0));
    s.v.assign(p.size(), T(0));
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double decay = cfg.decoupled ? 1.0 - cfg.lr * cfg.weight_decay : 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double gi = g.empty() ? 0.0 : static_cast<double>(g[i]);
    if (!cfg.decoupled) gi += cfg.weight_decay * p[i];
    const double m = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * gi;
    const double v = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * gi * gi;
    s.m[i] = static_cast<T>(m);
    s.v[i] = static_cast<T>(v);
    const double delta = cfg.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    p[i] = static_cast<T>(static_cast<double>(p[i]) * decay - delta);
  }
}

template <class T>
Adam<T>::Adam(ParamSet<T>& params, AdamConfig cfg)
    : params_(&params), cfg_(cfg), state_(params.params().size()) {}

template <class T>
void Adam<T>::step() {
  ++t_;
  const auto& ps = params_->params();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& node = *ps[k].second;
    std::span<const T> g;
    if (node.has_grad()) g = std::span<const T>(node.grad.data(), node.grad.numel());
    adam_update<T>(std::span<T>(node.value.data(), node.value.numel()), g, state_[k], t_, cfg_);
  }
}

template void adam_update<float>(std::span<float>, std::span<const float>, AdamMoments<float>&, std::int64_t,
                                 const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, AdamMoments<double>&, std::int64_t,
                                  const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace daqa::nn
