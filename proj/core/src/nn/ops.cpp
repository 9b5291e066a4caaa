#include "daqa/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "daqa/common/error.hpp"

namespace daqa::nn {

namespace {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<Mat<T>>;
template <class T>
using CMapM = Eigen::Map<const Mat<T>>;

[[noreturn]] void shape_fail(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

void expect_rank(const char* op, const Shape& s, int rank) {
  if (static_cast<int>(s.size()) != rank)
    shape_fail(op, "expected rank " + std::to_string(rank) + ", got " + shape_str(s));
}

void expect_same(const char* op, const Shape& a, const Shape& b) {
  if (a != b) shape_fail(op, "shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <class T>
bool wants(const Var<T>& v) {
  return v && v->requires_grad;
}

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// cols[K x P] for batch item n; K = C*kh*kw, P = Ho*Wo.
template <class T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, const Conv2dSpec& s, int Ho, int Wo, T* cols) {
  const std::size_t P = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < kh; ++i)
      for (int j = 0; j < kw; ++j) {
        T* row = cols + (static_cast<std::size_t>(c * kh + i) * kw + j) * P;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * s.stride_h - s.pad_h + i;
          T* dst = row + static_cast<std::size_t>(oh) * Wo;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + Wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * H + ih) * W;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * s.stride_w - s.pad_w + j;
            dst[ow] = (iw >= 0 && iw < W) ? src[iw] : T(0);
          }
        }
      }
}

template <class T>
void col2im(const T* cols, int C, int H, int W, int kh, int kw, const Conv2dSpec& s, int Ho, int Wo, T* dx) {
  const std::size_t P = static_cast<std::size_t>(Ho) * Wo;
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < kh; ++i)
      for (int j = 0; j < kw; ++j) {
        const T* row = cols + (static_cast<std::size_t>(c * kh + i) * kw + j) * P;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * s.stride_h - s.pad_h + i;
          if (ih < 0 || ih >= H) continue;
          T* dst = dx + (static_cast<std::size_t>(c) * H + ih) * W;
          const T* src = row + static_cast<std::size_t>(oh) * Wo;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * s.stride_w - s.pad_w + j;
            if (iw >= 0 && iw < W) dst[iw] += src[ow];
          }
        }
      }
}

}  // namespace

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// ---- conv2d ---------------------------------------------------------------------

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, Conv2dSpec s) {
  const auto& X = x->value;
  const auto& Wt = w->value;
  expect_rank("conv2d", X.shape(), 4);
  expect_rank("conv2d", Wt.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
  const int O = Wt.dim(0), kh = Wt.dim(2), kw = Wt.dim(3);
  if (Wt.dim(1) != C) shape_fail("conv2d", "input " + shape_str(X.shape()) + " vs weight " + shape_str(Wt.shape()));
  if (b && b->value.shape() != Shape{O}) shape_fail("conv2d", "bias " + shape_str(b->value.shape()));
  const int Ho = conv_out(H, kh, s.stride_h, s.pad_h), Wo = conv_out(W, kw, s.stride_w, s.pad_w);
  if (Ho < 1 || Wo < 1 || H + 2 * s.pad_h < kh || W + 2 * s.pad_w < kw)
    shape_fail("conv2d", "input " + shape_str(X.shape()) + " too small for kernel " + shape_str(Wt.shape()));

  const int K = C * kh * kw, P = Ho * Wo;
  const bool direct = kh == 1 && kw == 1 && s.stride_h == 1 && s.stride_w == 1 && s.pad_h == 0 && s.pad_w == 0;
  Tensor<T> out({N, O, Ho, Wo});
  std::vector<T> cols(direct ? 0 : static_cast<std::size_t>(K) * P);
  CMapM<T> Wm(Wt.data(), O, K);
  for (int n = 0; n < N; ++n) {
    const T* xn = X.data() + static_cast<std::size_t>(n) * C * H * W;
    if (!direct) im2col(xn, C, H, W, kh, kw, s, Ho, Wo, cols.data());
    CMapM<T> colm(direct ? xn : cols.data(), K, P);
    MapM<T> outm(out.data() + static_cast<std::size_t>(n) * O * P, O, P);
    outm.noalias() = Wm * colm;
    if (b)
      for (int o = 0; o < O; ++o) outm.row(o).array() += b->value[static_cast<std::size_t>(o)];
  }

  return make_node<T>("conv2d", std::move(out), {x, w, b}, [=](Node<T>& self) {
    const auto& in = self.inputs;
    const auto& Xv = in[0]->value;
    const auto& G = self.grad;
    CMapM<T> Wmat(in[1]->value.data(), O, K);
    std::vector<T> c(direct ? 0 : static_cast<std::size_t>(K) * P);
    std::vector<T> dcols(static_cast<std::size_t>(K) * P);
    for (int n = 0; n < N; ++n) {
      const T* xn = Xv.data() + static_cast<std::size_t>(n) * C * H * W;
      CMapM<T> g(G.data() + static_cast<std::size_t>(n) * O * P, O, P);
      if (wants(in[1])) {
        if (!direct) im2col(xn, C, H, W, kh, kw, s, Ho, Wo, c.data());
        CMapM<T> colm(direct ? xn : c.data(), K, P);
        MapM<T>(in[1]->ensure_grad().data(), O, K).noalias() += g * colm.transpose();
      }
      if (in[2] && wants(in[2])) {
        auto& db = in[2]->ensure_grad();
        for (int o = 0; o < O; ++o) {
          T acc = 0;
          for (int p = 0; p < P; ++p) acc += g(o, p);
          db[static_cast<std::size_t>(o)] += acc;
        }
      }
      if (wants(in[0])) {
        T* dxn = in[0]->ensure_grad().data() + static_cast<std::size_t>(n) * C * H * W;
        if (direct) {
          MapM<T>(dxn, K, P).noalias() += Wmat.transpose() * g;
        } else {
          MapM<T>(dcols.data(), K, P).noalias() = Wmat.transpose() * g;
          col2im(dcols.data(), C, H, W, kh, kw, s, Ho, Wo, dxn);
        }
      }
    }
  });
}

// ---- batchnorm ------------------------------------------------------------------

template <class T>
Var<T> batchnorm2d(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormBuffers<T>& buf,
                   bool training) {
  const auto& X = x->value;
  expect_rank("batchnorm2d", X.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), HW = X.dim(2) * X.dim(3);
  if (gamma) expect_same("batchnorm2d", gamma->value.shape(), Shape{C});
  if (beta) expect_same("batchnorm2d", beta->value.shape(), Shape{C});
  expect_same("batchnorm2d", buf.running_mean.shape(), Shape{C});
  if (training && N < 2) shape_fail("batchnorm2d", "training mode needs batch > 1, got " + shape_str(X.shape()));

  const double m = static_cast<double>(N) * HW;
  std::vector<T> mean(static_cast<std::size_t>(C)), invstd(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    double mu, var;
    if (training) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = X.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) s += p[i];
      }
      mu = s / m;
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = X.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) v += (p[i] - mu) * (p[i] - mu);
      }
      var = v / m;
      const auto k = static_cast<std::size_t>(c);
      buf.running_mean[k] = static_cast<T>((1.0 - kBatchNormMomentum) * buf.running_mean[k] + kBatchNormMomentum * mu);
      buf.running_var[k] = static_cast<T>((1.0 - kBatchNormMomentum) * buf.running_var[k] +
                                          kBatchNormMomentum * var * m / std::max(m - 1.0, 1.0));
    } else {
      mu = buf.running_mean[static_cast<std::size_t>(c)];
      var = buf.running_var[static_cast<std::size_t>(c)];
    }
    mean[static_cast<std::size_t>(c)] = static_cast<T>(mu);
    invstd[static_cast<std::size_t>(c)] = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEps));
  }

  Tensor<T> xhat(X.shape());
  Tensor<T> out(X.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      const T g = gamma ? gamma->value[static_cast<std::size_t>(c)] : T(1);
      const T bb = beta ? beta->value[static_cast<std::size_t>(c)] : T(0);
      const T mu = mean[static_cast<std::size_t>(c)], is = invstd[static_cast<std::size_t>(c)];
      for (int i = 0; i < HW; ++i) {
        const T h = (X[off + i] - mu) * is;
        xhat[off + i] = h;
        out[off + i] = g * h + bb;
      }
    }

  return make_node<T>("batchnorm2d", std::move(out), {x, gamma, beta},
                      [=, xhat = std::move(xhat)](Node<T>& self) {
                        const auto& in = self.inputs;
                        const auto& G = self.grad;
                        for (int c = 0; c < C; ++c) {
                          const T g = in[1] ? in[1]->value[static_cast<std::size_t>(c)] : T(1);
                          double sum_dy = 0.0, sum_dy_xhat = 0.0;
                          for (int n = 0; n < N; ++n) {
                            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
                            for (int i = 0; i < HW; ++i) {
                              sum_dy += G[off + i];
                              sum_dy_xhat += G[off + i] * xhat[off + i];
                            }
                          }
                          if (wants(in[1])) in[1]->ensure_grad()[static_cast<std::size_t>(c)] += static_cast<T>(sum_dy_xhat);
                          if (wants(in[2])) in[2]->ensure_grad()[static_cast<std::size_t>(c)] += static_cast<T>(sum_dy);
                          if (!wants(in[0])) continue;
                          auto& dx = in[0]->ensure_grad();
                          const T is = invstd[static_cast<std::size_t>(c)];
                          for (int n = 0; n < N; ++n) {
                            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
                            for (int i = 0; i < HW; ++i) {
                              if (training) {
                                dx[off + i] += static_cast<T>(g * is *
                                                              (G[off + i] - sum_dy / m - xhat[off + i] * sum_dy_xhat / m));
                              } else {
                                dx[off + i] += g * is * G[off + i];
                              }
                            }
                          }
                        }
                      });
}

// ---- elementwise and pooling ---------------------------------------------------------

template <class T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::max(x->value[i], T(0));
  return make_node<T>("relu", std::move(out), {x}, [](Node<T>& self) {
    auto& dx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < dx.numel(); ++i)
      if (self.value[i] > T(0)) dx[i] += self.grad[i];
  });
}

template <class T>
Var<T> maxpool2d(const Var<T>& x, int k, int stride) {
  const auto& X = x->value;
  expect_rank("maxpool2d", X.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
  const int Ho = conv_out(H, k, stride, 0), Wo = conv_out(W, k, stride, 0);
  if (H < k || W < k) shape_fail("maxpool2d", "input " + shape_str(X.shape()) + " smaller than window " + std::to_string(k));
  Tensor<T> out({N, C, Ho, Wo});
  std::vector<std::size_t> arg(out.numel());
  std::size_t o = 0;
  for (int nc = 0; nc < N * C; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * H * W;
    for (int oh = 0; oh < Ho; ++oh)
      for (int ow = 0; ow < Wo; ++ow, ++o) {
        std::size_t best = base + static_cast<std::size_t>(oh * stride) * W + ow * stride;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const std::size_t idx = base + static_cast<std::size_t>(oh * stride + i) * W + (ow * stride + j);
            if (X[idx] > X[best]) best = idx;
          }
        arg[o] = best;
        out[o] = X[best];
      }
  }
  return make_node<T>("maxpool2d", std::move(out), {x}, [arg = std::move(arg)](Node<T>& self) {
    auto& dx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += self.grad[i];
  });
}

template <class T>
Var<T> avgpool2d(const Var<T>& x, int kh, int kw, int sh, int sw) {
  const auto& X = x->value;
  expect_rank("avgpool2d", X.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
  if (H < kh || W < kw) shape_fail("avgpool2d", "input " + shape_str(X.shape()) + " smaller than window");
  const int Ho = conv_out(H, kh, sh, 0), Wo = conv_out(W, kw, sw, 0);
  const T scale = T(1) / static_cast<T>(kh * kw);
  Tensor<T> out({N, C, Ho, Wo});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          T s = 0;
          for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) s += X.at(n, c, oh * sh + i, ow * sw + j);
          out.at(n, c, oh, ow) = s * scale;
        }
  return make_node<T>("avgpool2d", std::move(out), {x}, [=](Node<T>& self) {
    auto& dx = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
          for (int ow = 0; ow < Wo; ++ow) {
            const T g = self.grad.at(n, c, oh, ow) * scale;
            for (int i = 0; i < kh; ++i)
              for (int j = 0; j < kw; ++j) dx.at(n, c, oh * sh + i, ow * sw + j) += g;
          }
  });
}

template <class T>
Var<T> global_avg_pool(const Var<T>& x, const std::vector<int>& widths) {
  const auto& X = x->value;
  expect_rank("global_avg_pool", X.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
  if (!widths.empty() && static_cast<int>(widths.size()) != N)
    shape_fail("global_avg_pool", "widths has " + std::to_string(widths.size()) + " entries for batch " + std::to_string(N));
  std::vector<int> valid(static_cast<std::size_t>(N), W);
  for (int n = 0; n < static_cast<int>(widths.size()); ++n)
    valid[static_cast<std::size_t>(n)] = std::clamp(widths[static_cast<std::size_t>(n)], 1, W);
  Tensor<T> out({N, C});
  for (int n = 0; n < N; ++n) {
    const int vw = valid[static_cast<std::size_t>(n)];
    for (int c = 0; c < C; ++c) {
      T s = 0;
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < vw; ++w) s += X.at(n, c, h, w);
      out[static_cast<std::size_t>(n) * C + c] = s / static_cast<T>(H * vw);
    }
  }
  return make_node<T>("global_avg_pool", std::move(out), {x}, [=](Node<T>& self) {
    auto& dx = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n) {
      const int vw = valid[static_cast<std::size_t>(n)];
      for (int c = 0; c < C; ++c) {
        const T g = self.grad[static_cast<std::size_t>(n) * C + c] / static_cast<T>(H * vw);
        for (int h = 0; h < H; ++h)
          for (int w = 0; w < vw; ++w) dx.at(n, c, h, w) += g;
      }
    }
  });
}

// ---- dense ---------------------------------------------------------------------------

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& X = x->value;
  expect_rank("linear", X.shape(), 2);
  expect_rank("linear", w->value.shape(), 2);
  const int N = X.dim(0), F = X.dim(1), O = w->value.dim(0);
  if (w->value.dim(1) != F) shape_fail("linear", "input " + shape_str(X.shape()) + " vs weight " + shape_str(w->value.shape()));
  if (b) expect_same("linear", b->value.shape(), Shape{O});
  Tensor<T> out({N, O});
  MapM<T> Y(out.data(), N, O);
  Y.noalias() = CMapM<T>(X.data(), N, F) * CMapM<T>(w->value.data(), O, F).transpose();
  if (b)
    for (int n = 0; n < N; ++n)
      for (int o = 0; o < O; ++o) Y(n, o) += b->value[static_cast<std::size_t>(o)];
  return make_node<T>("linear", std::move(out), {x, w, b}, [=](Node<T>& self) {
    const auto& in = self.inputs;
    CMapM<T> G(self.grad.data(), N, O);
    if (wants(in[0]))
      MapM<T>(in[0]->ensure_grad().data(), N, F).noalias() += G * CMapM<T>(in[1]->value.data(), O, F);
    if (wants(in[1]))
      MapM<T>(in[1]->ensure_grad().data(), O, F).noalias() += G.transpose() * CMapM<T>(in[0]->value.data(), N, F);
    if (in[2] && wants(in[2])) {
      auto& db = in[2]->ensure_grad();
      for (int o = 0; o < O; ++o) {
        T acc = 0;
        for (int n = 0; n < N; ++n) acc += G(n, o);
        db[static_cast<std::size_t>(o)] += acc;
      }
    }
  });
}

template <class T>
Var<T> embedding(const std::vector<int>& ids, int n, int l, const Var<T>& table) {
  expect_rank("embedding", table->value.shape(), 2);
  const int V = table->value.dim(0), E = table->value.dim(1);
  if (static_cast<int>(ids.size()) != n * l)
    shape_fail("embedding", std::to_string(ids.size()) + " ids for " + std::to_string(n) + "x" + std::to_string(l));
  for (int id : ids)
    if (id < 0 || id >= V) shape_fail("embedding", "token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(V));
  Tensor<T> out({n, l, E});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table->value.data() + static_cast<std::size_t>(ids[i]) * E, E, out.data() + i * E);
  return make_node<T>("embedding", std::move(out), {table}, [ids, E](Node<T>& self) {
    auto& dt = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int e = 0; e < E; ++e) dt[static_cast<std::size_t>(ids[i]) * E + e] += self.grad[i * E + e];
  });
}

// ---- LSTM --------------------------------------------------------------------------------

template <class T>
Var<T> lstm_layer(const Var<T>& x, const std::vector<int>& lengths, const Var<T>& w_ih, const Var<T>& w_hh,
                  const Var<T>& b) {
  const auto& X = x->value;
  expect_rank("lstm", X.shape(), 3);
  const int N = X.dim(0), L = X.dim(1), E = X.dim(2);
  const int Hd = w_hh->value.dim(1);
  expect_same("lstm", w_ih->value.shape(), Shape{4 * Hd, E});
  expect_same("lstm", w_hh->value.shape(), Shape{4 * Hd, Hd});
  expect_same("lstm", b->value.shape(), Shape{4 * Hd});
  if (static_cast<int>(lengths.size()) != N) shape_fail("lstm", "lengths size does not match batch");
  for (int len : lengths)
    if (len < 1 || len > L) shape_fail("lstm", "sequence length " + std::to_string(len) + " outside [1, " + std::to_string(L) + "]");

  const int G4 = 4 * Hd;
  // Input projections for every step at once: [N*L, 4H].
  Mat<T> xproj = CMapM<T>(X.data(), N * L, E) * CMapM<T>(w_ih->value.data(), G4, E).transpose();
  CMapM<T> Whh(w_hh->value.data(), G4, Hd);

  // Saved per step: activated gates [L][N,4H], cell states [L+1][N,H] (index 0 = initial).
  auto gates = std::make_shared<std::vector<Mat<T>>>(static_cast<std::size_t>(L), Mat<T>(N, G4));
  auto cells = std::make_shared<std::vector<Mat<T>>>(static_cast<std::size_t>(L) + 1, Mat<T>::Zero(N, Hd));
  Tensor<T> out({N, L, Hd});
  Mat<T> h = Mat<T>::Zero(N, Hd);
  Mat<T> pre(N, G4);
  for (int t = 0; t < L; ++t) {
    pre.noalias() = h * Whh.transpose();
    auto& A = (*gates)[static_cast<std::size_t>(t)];
    auto& c_prev = (*cells)[static_cast<std::size_t>(t)];
    auto& c_now = (*cells)[static_cast<std::size_t>(t) + 1];
    for (int n = 0; n < N; ++n) {
      if (t >= lengths[static_cast<std::size_t>(n)]) {
        A.row(n).setZero();
        c_now.row(n) = c_prev.row(n);
        continue;
      }
      const std::size_t r = static_cast<std::size_t>(n) * L + t;
      for (int k = 0; k < G4; ++k) {
        const T z = pre(n, k) + xproj(static_cast<Eigen::Index>(r), k) + b->value[static_cast<std::size_t>(k)];
        A(n, k) = (k >= 2 * Hd && k < 3 * Hd) ? std::tanh(z) : sigmoid(z);
      }
      for (int j = 0; j < Hd; ++j) {
        const T ig = A(n, j), fg = A(n, Hd + j), gg = A(n, 2 * Hd + j), og = A(n, 3 * Hd + j);
        c_now(n, j) = fg * c_prev(n, j) + ig * gg;
        h(n, j) = og * std::tanh(c_now(n, j));
      }
    }
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < Hd; ++j) out.data()[(static_cast<std::size_t>(n) * L + t) * Hd + j] = h(n, j);
  }

  return make_node<T>("lstm", std::move(out), {x, w_ih, w_hh, b}, [=](Node<T>& self) {
    const auto& in = self.inputs;
    const auto& Y = self.value;
    const auto& GY = self.grad;
    CMapM<T> W_hh(in[2]->value.data(), G4, Hd);
    Mat<T> dpre_all = Mat<T>::Zero(N * L, G4);
    Mat<T> dh_next = Mat<T>::Zero(N, Hd), dc_next = Mat<T>::Zero(N, Hd);
    Mat<T> dG(N, G4), h_prev(N, Hd);
    Mat<T> dW_hh = Mat<T>::Zero(G4, Hd);
    for (int t = L - 1; t >= 0; --t) {
      const auto& A = (*gates)[static_cast<std::size_t>(t)];
      const auto& c_prev = (*cells)[static_cast<std::size_t>(t)];
      const auto& c_now = (*cells)[static_cast<std::size_t>(t) + 1];
      for (int n = 0; n < N; ++n)
        for (int j = 0; j < Hd; ++j)
          h_prev(n, j) = t == 0 ? T(0) : Y.data()[(static_cast<std::size_t>(n) * L + t - 1) * Hd + j];
      Mat<T> carry_h(N, Hd), carry_c(N, Hd);
      for (int n = 0; n < N; ++n) {
        const bool active = t < lengths[static_cast<std::size_t>(n)];
        for (int j = 0; j < Hd; ++j) {
          const T dh = GY.data()[(static_cast<std::size_t>(n) * L + t) * Hd + j] + dh_next(n, j);
          T dc = dc_next(n, j);
          if (!active) {
            carry_h(n, j) = dh;
            carry_c(n, j) = dc;
            dG.row(n).setZero();
            continue;
          }
          const T ig = A(n, j), fg = A(n, Hd + j), gg = A(n, 2 * Hd + j), og = A(n, 3 * Hd + j);
          const T tc = std::tanh(c_now(n, j));
          dc += dh * og * (T(1) - tc * tc);
          dG(n, j) = dc * gg * ig * (T(1) - ig);
          dG(n, Hd + j) = dc * c_prev(n, j) * fg * (T(1) - fg);
          dG(n, 2 * Hd + j) = dc * ig * (T(1) - gg * gg);
          dG(n, 3 * Hd + j) = dh * tc * og * (T(1) - og);
          carry_h(n, j) = 0;
          carry_c(n, j) = dc * fg;
        }
        if (!active) dG.row(n).setZero();
      }
      dW_hh.noalias() += dG.transpose() * h_prev;
      Mat<T> dh_prev = dG * W_hh;
      for (int n = 0; n < N; ++n) {
        const bool active = t < lengths[static_cast<std::size_t>(n)];
        dh_next.row(n) = active ? dh_prev.row(n) : carry_h.row(n);
        dc_next.row(n) = carry_c.row(n);
        dpre_all.row(static_cast<Eigen::Index>(static_cast<std::size_t>(n) * L + t)) = dG.row(n);
      }
    }
    if (wants(in[2])) MapM<T>(in[2]->ensure_grad().data(), G4, Hd) += dW_hh;
    if (wants(in[3])) {
      auto& db = in[3]->ensure_grad();
      for (int k = 0; k < G4; ++k) {
        T acc = 0;
        for (Eigen::Index r = 0; r < dpre_all.rows(); ++r) acc += dpre_all(r, k);
        db[static_cast<std::size_t>(k)] += acc;
      }
    }
    if (wants(in[1]))
      MapM<T>(in[1]->ensure_grad().data(), G4, E).noalias() +=
          dpre_all.transpose() * CMapM<T>(in[0]->value.data(), N * L, E);
    if (wants(in[0]))
      MapM<T>(in[0]->ensure_grad().data(), N * L, E).noalias() +=
          dpre_all * CMapM<T>(in[1]->value.data(), G4, E);
  });
}

template <class T>
Var<T> last_step(const Var<T>& seq, const std::vector<int>& lengths) {
  const auto& S = seq->value;
  expect_rank("last_step", S.shape(), 3);
  const int N = S.dim(0), L = S.dim(1), Hd = S.dim(2);
  if (static_cast<int>(lengths.size()) != N) shape_fail("last_step", "lengths size does not match batch");
  Tensor<T> out({N, Hd});
  for (int n = 0; n < N; ++n) {
    const int t = std::clamp(lengths[static_cast<std::size_t>(n)], 1, L) - 1;
    std::copy_n(S.data() + (static_cast<std::size_t>(n) * L + t) * Hd, Hd, out.data() + static_cast<std::size_t>(n) * Hd);
  }
  return make_node<T>("last_step", std::move(out), {seq}, [=](Node<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n) {
      const int t = std::clamp(lengths[static_cast<std::size_t>(n)], 1, L) - 1;
      for (int j = 0; j < Hd; ++j)
        d[(static_cast<std::size_t>(n) * L + t) * Hd + j] += self.grad[static_cast<std::size_t>(n) * Hd + j];
    }
  });
}

// ---- modulation and plumbing ---------------------------------------------------------------

template <class T>
Var<T> film(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const auto& X = x->value;
  expect_rank("film", X.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), HW = X.dim(2) * X.dim(3);
  if (gamma->value.shape() != Shape{N, C} || beta->value.shape() != Shape{N, C})
    shape_fail("film", "features " + shape_str(X.shape()) + " vs gamma " + shape_str(gamma->value.shape()) +
                           " / beta " + shape_str(beta->value.shape()));
  Tensor<T> out(X.shape());
  for (int nc = 0; nc < N * C; ++nc) {
    const T g = gamma->value[static_cast<std::size_t>(nc)], bb = beta->value[static_cast<std::size_t>(nc)];
    const std::size_t off = static_cast<std::size_t>(nc) * HW;
    for (int i = 0; i < HW; ++i) out[off + i] = g * X[off + i] + bb;
  }
  return make_node<T>("film", std::move(out), {x, gamma, beta}, [=](Node<T>& self) {
    const auto& in = self.inputs;
    for (int nc = 0; nc < N * C; ++nc) {
      const std::size_t off = static_cast<std::size_t>(nc) * HW;
      T sg = 0, sx = 0;
      for (int i = 0; i < HW; ++i) {
        sg += self.grad[off + i];
        sx += self.grad[off + i] * in[0]->value[off + i];
      }
      if (wants(in[0])) {
        auto& dx = in[0]->ensure_grad();
        const T g = in[1]->value[static_cast<std::size_t>(nc)];
        for (int i = 0; i < HW; ++i) dx[off + i] += g * self.grad[off + i];
      }
      if (wants(in[1])) in[1]->ensure_grad()[static_cast<std::size_t>(nc)] += sx;
      if (wants(in[2])) in[2]->ensure_grad()[static_cast<std::size_t>(nc)] += sg;
    }
  });
}

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const auto& A = a->value;
  const auto& B = b->value;
  expect_rank("concat_channels", A.shape(), 4);
  expect_rank("concat_channels", B.shape(), 4);
  const int N = A.dim(0), Ca = A.dim(1), Cb = B.dim(1), HW = A.dim(2) * A.dim(3);
  if (B.dim(0) != N || B.dim(2) != A.dim(2) || B.dim(3) != A.dim(3))
    shape_fail("concat_channels", shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  Tensor<T> out({N, Ca + Cb, A.dim(2), A.dim(3)});
  const std::size_t sa = static_cast<std::size_t>(Ca) * HW, sb = static_cast<std::size_t>(Cb) * HW;
  for (int n = 0; n < N; ++n) {
    std::copy_n(A.data() + n * sa, sa, out.data() + n * (sa + sb));
    std::copy_n(B.data() + n * sb, sb, out.data() + n * (sa + sb) + sa);
  }
  return make_node<T>("concat_channels", std::move(out), {a, b}, [=](Node<T>& self) {
    const auto& in = self.inputs;
    for (int n = 0; n < N; ++n) {
      const T* g = self.grad.data() + n * (sa + sb);
      if (wants(in[0])) {
        T* d = in[0]->ensure_grad().data() + n * sa;
        for (std::size_t i = 0; i < sa; ++i) d[i] += g[i];
      }
      if (wants(in[1])) {
        T* d = in[1]->ensure_grad().data() + n * sb;
        for (std::size_t i = 0; i < sb; ++i) d[i] += g[sa + i];
      }
    }
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  expect_same("add", a->value.shape(), b->value.shape());
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
  return make_node<T>("add", std::move(out), {a, b}, [](Node<T>& self) {
    for (int k = 0; k < 2; ++k) {
      if (!wants(self.inputs[static_cast<std::size_t>(k)])) continue;
      auto& d = self.inputs[static_cast<std::size_t>(k)]->ensure_grad();
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += self.grad[i];
    }
  });
}

template <class T>
Var<T> add_scalar(const Var<T>& a, T c) {
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + c;
  return make_node<T>("add_scalar", std::move(out), {a}, [](Node<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] += self.grad[i];
  });
}

template <class T>
Var<T> slice_cols(const Var<T>& x, int start, int len) {
  expect_rank("slice_cols", x->value.shape(), 2);
  const int N = x->value.dim(0), F = x->value.dim(1);
  if (start < 0 || len < 0 || start + len > F)
    shape_fail("slice_cols", "columns [" + std::to_string(start) + ", " + std::to_string(start + len) + ") of " + shape_str(x->value.shape()));
  Tensor<T> out({N, len});
  for (int n = 0; n < N; ++n)
    std::copy_n(x->value.data() + static_cast<std::size_t>(n) * F + start, len, out.data() + static_cast<std::size_t>(n) * len);
  return make_node<T>("slice_cols", std::move(out), {x}, [=](Node<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int j = 0; j < len; ++j)
        d[static_cast<std::size_t>(n) * F + start + j] += self.grad[static_cast<std::size_t>(n) * len + j];
  });
}

template <class T>
Var<T> to_time_sequence(const Var<T>& x) {
  const auto& X = x->value;
  expect_rank("to_time_sequence", X.shape(), 4);
  const int N = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
  Tensor<T> out({N, W, C * H});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
          out.data()[(static_cast<std::size_t>(n) * W + w) * C * H + c * H + h] = X.at(n, c, h, w);
  return make_node<T>("to_time_sequence", std::move(out), {x}, [=](Node<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int h = 0; h < H; ++h)
          for (int w = 0; w < W; ++w)
            d.at(n, c, h, w) += self.grad.data()[(static_cast<std::size_t>(n) * W + w) * C * H + c * H + h];
  });
}

template <class T>
Tensor<T> coord_maps(int n, int h, int w) {
  if (n < 1 || h < 1 || w < 1) throw ShapeError("coord_maps: sizes must be >= 1");
  Tensor<T> out({n, 2, h, w});
  auto lin = [](int i, int size) { return size == 1 ? T(0) : static_cast<T>(-1.0 + 2.0 * i / (size - 1)); };
  for (int k = 0; k < n; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        out.at(k, 0, y, x) = lin(x, w);
        out.at(k, 1, y, x) = lin(y, h);
      }
  return out;
}

template <class T>
Var<T> softmax_cross_entropy(const Var<T>& logits, const std::vector<int>& labels) {
  const auto& Z = logits->value;
  expect_rank("softmax_cross_entropy", Z.shape(), 2);
  const int N = Z.dim(0), K = Z.dim(1);
  if (static_cast<int>(labels.size()) != N) shape_fail("softmax_cross_entropy", "label count does not match batch");
  for (int y : labels)
    if (y < 0 || y >= K) shape_fail("softmax_cross_entropy", "label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
  Tensor<T> prob(Z.shape());
  double loss = 0.0;
  for (int n = 0; n < N; ++n) {
    const T* z = Z.data() + static_cast<std::size_t>(n) * K;
    const T mx = *std::max_element(z, z + K);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(static_cast<double>(z[k] - mx));
    const double lse = std::log(s) + mx;
    for (int k = 0; k < K; ++k) prob[static_cast<std::size_t>(n) * K + k] = static_cast<T>(std::exp(z[k] - lse));
    loss += lse - z[labels[static_cast<std::size_t>(n)]];
  }
  Tensor<T> out({1}, static_cast<T>(loss / N));
  return make_node<T>("softmax_cross_entropy", std::move(out), {logits},
                      [=, prob = std::move(prob)](Node<T>& self) {
                        auto& d = self.inputs[0]->ensure_grad();
                        const T g = self.grad[0] / static_cast<T>(N);
                        for (int n = 0; n < N; ++n)
                          for (int k = 0; k < K; ++k) {
                            const std::size_t i = static_cast<std::size_t>(n) * K + k;
                            d[i] += g * (prob[i] - (k == labels[static_cast<std::size_t>(n)] ? T(1) : T(0)));
                          }
                      });
}

template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w) {
  if (w.numel() != x->value.numel()) shape_fail("weighted_sum", shape_str(x->value.shape()) + " vs " + shape_str(w.shape()));
  double s = 0.0;
  for (std::size_t i = 0; i < w.numel(); ++i) s += static_cast<double>(x->value[i]) * w[i];
  return make_node<T>("weighted_sum", Tensor<T>({1}, static_cast<T>(s)), {x}, [w](Node<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] += self.grad[0] * w[i];
  });
}

#define DAQA_INSTANTIATE(T)                                                                                  \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, Conv2dSpec);                        \
  template Var<T> batchnorm2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, BatchNormBuffers<T>&, bool);   \
  template Var<T> relu<T>(const Var<T>&);                                                                    \
  template Var<T> maxpool2d<T>(const Var<T>&, int, int);                                                     \
  template Var<T> avgpool2d<T>(const Var<T>&, int, int, int, int);                                           \
  template Var<T> global_avg_pool<T>(const Var<T>&, const std::vector<int>&);                                \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                                    \
  template Var<T> embedding<T>(const std::vector<int>&, int, int, const Var<T>&);                            \
  template Var<T> lstm_layer<T>(const Var<T>&, const std::vector<int>&, const Var<T>&, const Var<T>&,        \
                                const Var<T>&);                                                              \
  template Var<T> last_step<T>(const Var<T>&, const std::vector<int>&);                                      \
  template Var<T> film<T>(const Var<T>&, const Var<T>&, const Var<T>&);                                      \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                                          \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                                      \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                                           \
  template Var<T> slice_cols<T>(const Var<T>&, int, int);                                                    \
  template Var<T> to_time_sequence<T>(const Var<T>&);                                                        \
  template Tensor<T> coord_maps<T>(int, int, int);                                                           \
  template Var<T> softmax_cross_entropy<T>(const Var<T>&, const std::vector<int>&);                          \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);
DAQA_INSTANTIATE(float)
DAQA_INSTANTIATE(double)
#undef DAQA_INSTANTIATE

}  // namespace daqa::nn
