#pragma once

#include <string>
#include <vector>

#include "daqa/nn/init.hpp"
#include "daqa/nn/params.hpp"

namespace daqa::nn {

inline constexpr double kForgetBias = 1.0;

template <class T>
struct Conv2d {
  Var<T> w, b;
  Conv2dSpec spec;

  static Conv2d make(ParamSet<T>& ps, const std::string& name, int in, int out, int kh, int kw, Conv2dSpec spec,
                     Rng& rng) {
    const int fan_in = in * kh * kw;
    Conv2d c;
    c.w = ps.add(name + ".weight", uniform_fan_in<T>({out, in, kh, kw}, fan_in, rng));
    c.b = ps.add(name + ".bias", uniform_fan_in<T>({out}, fan_in, rng));
    c.spec = spec;
    return c;
  }
  Var<T> operator()(const Var<T>& x) const { return conv2d(x, w, b, spec); }
};

template <class T>
struct Linear {
  Var<T> w, b;

  static Linear make(ParamSet<T>& ps, const std::string& name, int in, int out, Rng& rng) {
    Linear l;
    l.w = ps.add(name + ".weight", uniform_fan_in<T>({out, in}, in, rng));
    l.b = ps.add(name + ".bias", uniform_fan_in<T>({out}, in, rng));
    return l;
  }
  Var<T> operator()(const Var<T>& x) const { return linear(x, w, b); }
};

template <class T>
struct BatchNorm {
  Var<T> gamma, beta;  // null when affine = false
  BatchNormBuffers<T>* buffers = nullptr;

  static BatchNorm make(ParamSet<T>& ps, const std::string& name, int channels, bool affine) {
    BatchNorm bn;
    if (affine) {
      bn.gamma = ps.add(name + ".weight", Tensor<T>({channels}, T(1)));
      bn.beta = ps.add(name + ".bias", Tensor<T>({channels}, T(0)));
    }
    bn.buffers = &ps.add_batchnorm(name, channels);
    return bn;
  }
  Var<T> operator()(const Var<T>& x, bool training) const { return batchnorm2d(x, gamma, beta, *buffers, training); }
};

/// Stacked LSTM; returns the top layer's hidden sequence.
template <class T>
struct Lstm {
  struct Layer {
    Var<T> w_ih, w_hh, b;
  };
  std::vector<Layer> layers;
  int hidden = 0;

  static Lstm make(ParamSet<T>& ps, const std::string& name, int input, int hidden, int n_layers, Rng& rng) {
    Lstm l;
    l.hidden = hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto uni = [&](Shape s) {
      Tensor<T> t(std::move(s));
      for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(uniform_real(rng, -bound, bound));
      return t;
    };
    for (int k = 0; k < n_layers; ++k) {
      const std::string p = name + ".l" + std::to_string(k);
      const int in = k == 0 ? input : hidden;
      Layer layer;
      layer.w_ih = ps.add(p + ".w_ih", uni({4 * hidden, in}));
      layer.w_hh = ps.add(p + ".w_hh", uni({4 * hidden, hidden}));
      Tensor<T> bias = uni({4 * hidden});
      for (int j = hidden; j < 2 * hidden; ++j) bias[static_cast<std::size_t>(j)] = static_cast<T>(kForgetBias);
      layer.b = ps.add(p + ".bias", std::move(bias));
      l.layers.push_back(layer);
    }
    return l;
  }

  Var<T> operator()(Var<T> x, const std::vector<int>& lengths) const {
    for (const auto& layer : layers) x = lstm_layer(x, lengths, layer.w_ih, layer.w_hh, layer.b);
    return x;
  }
};

}  // namespace daqa::nn
