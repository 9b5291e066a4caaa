#pragma once

#include <utility>
#include <vector>

#include "daqa/nn/autograd.hpp"

namespace daqa::nn {

struct Conv2dSpec {
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
};

/// x [N,C,H,W], w [O,C,kh,kw], b [O] (may be null) -> [N,O,Ho,Wo].
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, Conv2dSpec spec);

/// Output extent of a strided window: (in + 2*pad - k) / stride + 1.
int conv_out(int in, int k, int stride, int pad);

template <class T>
struct BatchNormBuffers {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  explicit BatchNormBuffers(int channels = 0) : running_mean({channels}, T(0)), running_var({channels}, T(1)) {}
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel normalization over (N, H, W). Training mode uses batch
/// statistics (batch > 1) and updates the running buffers; eval mode uses the
/// buffers. gamma/beta may be null (affine = false).
template <class T>
Var<T> batchnorm2d(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormBuffers<T>& buffers,
                   bool training);

template <class T>
Var<T> relu(const Var<T>& x);

template <class T>
Var<T> maxpool2d(const Var<T>& x, int k, int stride);

template <class T>
Var<T> avgpool2d(const Var<T>& x, int kh, int kw, int sh, int sw);

/// Mean over (H, W) -> [N, C]. With `widths`, item n averages only its first
/// widths[n] columns (zero padding excluded from the denominator).
template <class T>
Var<T> global_avg_pool(const Var<T>& x, const std::vector<int>& widths = {});

/// x [N,F], w [O,F], b [O] (may be null) -> [N,O].
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);

/// ids [N*L] row-major token indices, table [V,E] -> [N,L,E].
template <class T>
Var<T> embedding(const std::vector<int>& ids, int n, int l, const Var<T>& table);

/// One LSTM layer over x [N,L,E] with gate order (i, f, g, o):
/// w_ih [4H,E], w_hh [4H,H], b [4H]. Steps at or past lengths[n] carry the
/// previous state unchanged. Returns hidden states [N,L,H].
template <class T>
Var<T> lstm_layer(const Var<T>& x, const std::vector<int>& lengths, const Var<T>& w_ih, const Var<T>& w_hh,
                  const Var<T>& b);

/// seq [N,L,H] -> [N,H] taken at step lengths[n]-1.
template <class T>
Var<T> last_step(const Var<T>& seq, const std::vector<int>& lengths);

/// out[n,c,:,:] = gamma[n,c] * x[n,c,:,:] + beta[n,c].
template <class T>
Var<T> film(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta);

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> add_scalar(const Var<T>& a, T c);

/// Columns [start, start+len) of x [N,F].
template <class T>
Var<T> slice_cols(const Var<T>& x, int start, int len);

/// x [N,C,H,W] -> [N,W,C*H]; feature index c*H + h.
template <class T>
Var<T> to_time_sequence(const Var<T>& x);

/// Constant [N,2,H,W]: channel 0 runs -1..1 along W (time), channel 1 along H
/// (frequency); a size-1 axis is 0.
template <class T>
Tensor<T> coord_maps(int n, int h, int w);

/// Mean negative log-likelihood of integer labels under softmax(logits) -> [1].
template <class T>
Var<T> softmax_cross_entropy(const Var<T>& logits, const std::vector<int>& labels);

/// sum_i x_i * w_i -> [1]. Used to reduce arbitrary outputs for gradient checks.
template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w);

}  // namespace daqa::nn
