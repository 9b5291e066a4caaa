#pragma once

#include <cstdint>
#include <vector>

#include "daqa/models/config.hpp"
#include "daqa/nn/layers.hpp"

namespace daqa::models {

using nn::Tensor;
using nn::Var;

/// One batch: spectrograms laid out [N, 1, n_mels, W] (time along W, zero
/// padded past widths[n]) and right-padded question token ids [N, L].
template <class T>
struct ModelInput {
  Tensor<T> audio;
  std::vector<int> widths;
  std::vector<int> tokens;
  std::vector<int> lengths;
  int max_len = 0;
};

struct ForwardOptions {
  bool training = false;
  /// Skip every film op (the plain residual stack).
  bool unmodulated = false;
  /// Replace controller outputs by gamma = 1, beta = 0.
  bool identity_modulation = false;
};

template <class T>
struct ForwardResult {
  Var<T> logits;    // [N, classes]
  Var<T> features;  // last modulated (or, for FCN, last 3x3 conv) activation
  std::vector<int> feature_widths;
};

template <class T>
class Model {
 public:
  static Model build(const ModelConfig& config, std::uint64_t seed);

  ForwardResult<T> forward(const ModelInput<T>& in, const ForwardOptions& opts) const;

  const ModelConfig& config() const { return config_; }
  nn::ParamSet<T>& params() { return params_; }
  const nn::ParamSet<T>& params() const { return params_; }
  std::size_t parameter_count() const { return params_.count(); }

  /// Valid feature width after the stem for an input of `frames` columns.
  int stem_width(int frames) const;
  /// Minimum input frames accepted by the network.
  int min_frames() const;
  /// Controller-2 sequence length for a stem output of width `w`.
  int audio_sequence_length(int w) const;

 private:
  struct StemBlock {
    std::vector<nn::Conv2d<T>> convs;
    std::vector<nn::BatchNorm<T>> bns;
  };
  struct ResBlock {
    nn::Conv2d<T> conv1, conv2;
    nn::BatchNorm<T> bn;
  };
  struct Controller {
    nn::Lstm<T> lstm;
    nn::Linear<T> out;  // -> 2 * channels * units
  };

  Var<T> run_stem(Var<T> x, bool training) const;
  Var<T> res_block(const ResBlock& b, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, bool training,
                   bool modulate) const;
  Var<T> controller_output(const Controller& c, Var<T> seq, const std::vector<int>& lengths) const;

  ModelConfig config_;
  nn::ParamSet<T> params_;
  std::vector<StemBlock> stem_;
  // FCN head
  nn::Conv2d<T> fcn_top_, fcn_out_;
  nn::BatchNorm<T> fcn_top_bn_;
  // Modulated models
  Var<T> embedding_;
  Controller question_, audio_;
  std::vector<ResBlock> blocks_;
  nn::Conv2d<T> head_conv_;
  nn::BatchNorm<T> head_bn_;
  nn::Linear<T> head_hidden_, head_out_;
};

extern template class Model<float>;
extern template class Model<double>;

/// Packs feature matrices ([frames x n_mels], row-major) into a model batch,
/// zero padded to the longest clip (and to at least `min_width` columns).
template <class T>
ModelInput<T> make_input(const std::vector<const std::vector<float>*>& features, const std::vector<int>& frames,
                         int n_mels, const std::vector<std::vector<int>>& questions, int min_width = 0);

}  // namespace daqa::models
