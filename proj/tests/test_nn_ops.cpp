#include <gtest/gtest.h>

#include <cmath>

#include "daqa/common/error.hpp"
#include "daqa/nn/gradcheck.hpp"
#include "daqa/nn/init.hpp"
#include "daqa/nn/layers.hpp"

using namespace daqa;
using namespace daqa::nn;

namespace {

constexpr double kTol = 1e-4;

Var<double> rnd(Shape s, Rng& r) { return parameter(standard_normal_tensor<double>(std::move(s), r)); }

void expect_grad(const char* name, const GradCheckResult& g) {
  EXPECT_LT(g.max_rel_error, kTol) << name << " worst " << g.worst;
  EXPECT_GT(g.coords, 0u) << name;
}

// Direct loop convolution.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, Conv2dSpec s) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int Ho = (H + 2 * s.pad_h - kh) / s.stride_h + 1, Wo = (W + 2 * s.pad_w - kw) / s.stride_w + 1;
  Tensor<double> y({N, O, Ho, Wo});
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          double acc = b[static_cast<std::size_t>(o)];
          for (int c = 0; c < C; ++c)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                const int hh = i * s.stride_h - s.pad_h + u, ww = j * s.stride_w - s.pad_w + v;
                if (hh < 0 || hh >= H || ww < 0 || ww >= W) continue;
                acc += x.at(n, c, hh, ww) * w.at(o, c, u, v);
              }
          y.at(n, o, i, j) = acc;
        }
  return y;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST(NnOps, ConvMatchesLoopOracle) {
  Rng r(11);
  for (Conv2dSpec s : {Conv2dSpec{}, Conv2dSpec{2, 1, 1, 2}, Conv2dSpec{1, 3, 2, 0}}) {
    auto x = rnd({2, 3, 7, 9}, r), w = rnd({4, 3, 3, 2}, r), b = rnd({4}, r);
    auto y = conv2d(x, w, b, s)->value;
    auto ref = naive_conv(x->value, w->value, b->value, s);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(NnOps, ConvOutExtent) {
  EXPECT_EQ(conv_out(98, 3, 1, 1), 98);
  EXPECT_EQ(conv_out(98, 2, 2, 0), 49);
  EXPECT_EQ(conv_out(7, 3, 2, 1), 4);
}

TEST(NnOps, GradConv) {
  Rng r(1);
  auto x = rnd({2, 3, 6, 7}, r), w = rnd({4, 3, 3, 3}, r), b = rnd({4}, r);
  expect_grad("conv", grad_check([&] { return conv2d(x, w, b, {2, 1, 1, 2}); }, {x, w, b}));
  auto w1 = rnd({4, 3, 1, 1}, r);
  expect_grad("conv1x1", grad_check([&] { return conv2d(x, w1, b, {}); }, {x, w1, b}));
  expect_grad("conv-nobias", grad_check([&] { return conv2d(x, w, Var<double>{}, {1, 1, 1, 1}); }, {x, w}));
}

TEST(NnOps, GradBatchNorm) {
  Rng r(2);
  auto x = rnd({3, 3, 4, 5}, r), g = rnd({3}, r), b = rnd({3}, r);
  BatchNormBuffers<double> buf(3);
  expect_grad("bn-train", grad_check([&] { return batchnorm2d(x, g, b, buf, true); }, {x, g, b}));
  expect_grad("bn-eval", grad_check([&] { return batchnorm2d(x, g, b, buf, false); }, {x, g, b}));
  expect_grad("bn-noaffine", grad_check([&] { return batchnorm2d(x, Var<double>{}, Var<double>{}, buf, true); }, {x}));
}

TEST(NnOps, BatchNormTrainStatistics) {
  Rng r(3);
  auto x = rnd({4, 2, 3, 5}, r);
  for (std::size_t i = 0; i < x->value.numel(); ++i) x->value[i] = 3.0 + 2.0 * x->value[i];
  BatchNormBuffers<double> buf(2);
  auto y = batchnorm2d(x, Var<double>{}, Var<double>{}, buf, true)->value;
  for (int c = 0; c < 2; ++c) {
    double s = 0, ss = 0, xs = 0, xss = 0;
    const int m = 4 * 3 * 5;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 5; ++w) {
          s += y.at(n, c, h, w);
          ss += y.at(n, c, h, w) * y.at(n, c, h, w);
          xs += x->value.at(n, c, h, w);
          xss += x->value.at(n, c, h, w) * x->value.at(n, c, h, w);
        }
    EXPECT_NEAR(s / m, 0.0, 1e-12);
    const double var = xss / m - (xs / m) * (xs / m);
    EXPECT_NEAR(ss / m, var / (var + kBatchNormEps), 1e-9);
    EXPECT_NEAR(buf.running_mean[static_cast<std::size_t>(c)], 0.1 * xs / m, 1e-12);
    EXPECT_NEAR(buf.running_var[static_cast<std::size_t>(c)], 0.9 + 0.1 * var * m / (m - 1), 1e-12);
  }
}

TEST(NnOps, BatchNormEvalUsesBuffers) {
  Rng r(4);
  auto x = rnd({1, 2, 2, 2}, r);
  BatchNormBuffers<double> buf(2);
  buf.running_mean[0] = 1.0;
  buf.running_var[0] = 4.0;
  auto y = batchnorm2d(x, Var<double>{}, Var<double>{}, buf, false)->value;
  EXPECT_NEAR(y.at(0, 0, 1, 1), (x->value.at(0, 0, 1, 1) - 1.0) / std::sqrt(4.0 + kBatchNormEps), 1e-12);
  EXPECT_NEAR(y.at(0, 1, 0, 1), x->value.at(0, 1, 0, 1) / std::sqrt(1.0 + kBatchNormEps), 1e-12);
  EXPECT_THROW(batchnorm2d(x, Var<double>{}, Var<double>{}, buf, true), ShapeError);
}

TEST(NnOps, GradPoolingAndActivations) {
  Rng r(5);
  auto x = rnd({2, 3, 6, 7}, r);
  expect_grad("relu", grad_check([&] { return relu(x); }, {x}));
  expect_grad("maxpool", grad_check([&] { return maxpool2d(x, 2, 2); }, {x}));
  expect_grad("avgpool", grad_check([&] { return avgpool2d(x, 2, 3, 2, 3); }, {x}));
  expect_grad("gap", grad_check([&] { return global_avg_pool(x); }, {x}));
  expect_grad("gap-widths", grad_check([&] { return global_avg_pool(x, {3, 7}); }, {x}));
}

TEST(NnOps, PoolingValues) {
  Tensor<double> t({1, 1, 2, 4}, std::vector<double>{1, 5, 2, 0, -1, 3, 8, 4});
  auto x = constant(t);
  auto mp = maxpool2d(x, 2, 2)->value;
  EXPECT_EQ(mp.vec(), (std::vector<double>{5, 8}));
  auto ap = avgpool2d(x, 2, 2, 2, 2)->value;
  EXPECT_EQ(ap.vec(), (std::vector<double>{2, 3.5}));
  auto g = global_avg_pool(x, {2})->value;
  EXPECT_EQ(g.shape(), (Shape{1, 1}));
  EXPECT_DOUBLE_EQ(g[0], (1 + 5 - 1 + 3) / 4.0);
  auto r = relu(x)->value;
  EXPECT_EQ(r.vec(), (std::vector<double>{1, 5, 2, 0, 0, 3, 8, 4}));
}

TEST(NnOps, GradLinearEmbeddingSlice) {
  Rng r(6);
  auto m = rnd({3, 8}, r), w = rnd({5, 8}, r), b = rnd({5}, r);
  expect_grad("linear", grad_check([&] { return linear(m, w, b); }, {m, w, b}));
  expect_grad("slice", grad_check([&] { return slice_cols(m, 2, 3); }, {m}));
  auto tab = rnd({10, 4}, r);
  expect_grad("embedding", grad_check([&] { return embedding<double>({1, 2, 3, 1, 9, 0}, 2, 3, tab); }, {tab}));
  auto e = embedding<double>({1, 2, 3, 1, 9, 0}, 2, 3, tab)->value;
  EXPECT_EQ(e.shape(), (Shape{2, 3, 4}));
  for (int k = 0; k < 4; ++k) EXPECT_EQ(e[static_cast<std::size_t>(16 + k)], tab->value[static_cast<std::size_t>(36 + k)]);
}

TEST(NnOps, GradLstm) {
  Rng r(7);
  auto s = rnd({3, 5, 4}, r);
  std::vector<int> len{5, 2, 3};
  ParamSet<double> ps;
  auto l = Lstm<double>::make(ps, "q", 4, 6, 2, r);
  std::vector<Var<double>> all{s};
  for (auto& q : ps.params()) all.push_back(q.second);
  expect_grad("lstm-last", grad_check([&] { return last_step(l(s, len), len); }, all));
  expect_grad("lstm-seq", grad_check([&] { return l(s, len); }, all));
}

TEST(NnOps, LstmMatchesScalarRecurrence) {
  Rng r(8);
  const int E = 3, H = 2, L = 4;
  auto x = rnd({1, L, E}, r), wih = rnd({4 * H, E}, r), whh = rnd({4 * H, H}, r), b = rnd({4 * H}, r);
  auto y = lstm_layer(x, {3}, wih, whh, b)->value;
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (int t = 0; t < L; ++t) {
    if (t < 3) {
      std::vector<double> z(4 * H);
      for (int k = 0; k < 4 * H; ++k) {
        double a = b->value[static_cast<std::size_t>(k)];
        for (int e = 0; e < E; ++e) a += wih->value[static_cast<std::size_t>(k * E + e)] * x->value[static_cast<std::size_t>(t * E + e)];
        for (int j = 0; j < H; ++j) a += whh->value[static_cast<std::size_t>(k * H + j)] * h[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(k)] = a;
      }
      for (int j = 0; j < H; ++j) {
        const auto u = static_cast<std::size_t>(j);
        const double i = sigmoid(z[u]), f = sigmoid(z[u + H]), g = std::tanh(z[u + 2 * H]), o = sigmoid(z[u + 3 * H]);
        c[u] = f * c[u] + i * g;
        h[u] = o * std::tanh(c[u]);
      }
    }
    for (int j = 0; j < H; ++j) EXPECT_NEAR(y[static_cast<std::size_t>(t * H + j)], h[static_cast<std::size_t>(j)], 1e-12) << t;
  }
  auto last = last_step(lstm_layer(x, {3}, wih, whh, b), {3})->value;
  EXPECT_NEAR(last[0], y[static_cast<std::size_t>(2 * H)], 1e-15);
}

TEST(NnOps, GradFilmConcatAdd) {
  Rng r(9);
  auto x = rnd({2, 3, 4, 5}, r), y = rnd({2, 2, 4, 5}, r), z = rnd({2, 3, 4, 5}, r);
  auto ga = rnd({2, 3}, r), be = rnd({2, 3}, r);
  expect_grad("film", grad_check([&] { return film(x, ga, be); }, {x, ga, be}));
  expect_grad("concat", grad_check([&] { return concat_channels(x, y); }, {x, y}));
  expect_grad("add", grad_check([&] { return add(x, z); }, {x, z}));
  expect_grad("add_scalar", grad_check([&] { return add_scalar(x, 1.5); }, {x}));
  expect_grad("tseq", grad_check([&] { return to_time_sequence(x); }, {x}));
  auto f = film(x, ga, be)->value;
  EXPECT_NEAR(f.at(1, 2, 3, 4), ga->value[5] * x->value.at(1, 2, 3, 4) + be->value[5], 1e-15);
  auto t = to_time_sequence(x)->value;
  EXPECT_EQ(t.shape(), (Shape{2, 5, 12}));
  EXPECT_EQ(t[static_cast<std::size_t>((1 * 5 + 4) * 12 + 2 * 4 + 3)], x->value.at(1, 2, 3, 4));
}

TEST(NnOps, GradSoftmaxCrossEntropy) {
  Rng r(10);
  auto lg = rnd({4, 36}, r);
  expect_grad("xent", grad_check([&] { return softmax_cross_entropy(lg, {0, 5, 35, 2}); }, {lg}));
  auto z = constant(Tensor<double>({2, 3}, std::vector<double>{0, 0, 0, 1, 2, 3}));
  const double l1 = std::log(3.0);
  const double l2 = -(3.0 - std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  EXPECT_NEAR(softmax_cross_entropy(z, {1, 2})->value[0], (l1 + l2) / 2, 1e-12);
}

TEST(NnOps, CoordMaps) {
  auto c = coord_maps<double>(2, 3, 5);
  EXPECT_EQ(c.shape(), (Shape{2, 2, 3, 5}));
  EXPECT_DOUBLE_EQ(c.at(1, 0, 2, 0), -1.0);
  EXPECT_DOUBLE_EQ(c.at(1, 0, 2, 4), 1.0);
  EXPECT_DOUBLE_EQ(c.at(0, 0, 0, 1), -0.5);
  EXPECT_DOUBLE_EQ(c.at(0, 1, 0, 3), -1.0);
  EXPECT_DOUBLE_EQ(c.at(0, 1, 1, 3), 0.0);
  EXPECT_DOUBLE_EQ(c.at(0, 1, 2, 3), 1.0);
  auto one = coord_maps<double>(1, 1, 1);
  EXPECT_DOUBLE_EQ(one[0], 0.0);
  EXPECT_DOUBLE_EQ(one[1], 0.0);
  EXPECT_THROW(coord_maps<double>(1, 0, 2), ShapeError);
}

TEST(NnOps, ShapeErrorsNameTheOp) {
  Rng r(12);
  auto x = rnd({2, 3, 4, 5}, r);
  auto expect_msg = [](auto&& f, const std::string& op) {
    try {
      f();
      ADD_FAILURE() << "no throw for " << op;
    } catch (const ShapeError& e) {
      EXPECT_NE(std::string(e.what()).find(op), std::string::npos) << e.what();
    }
  };
  expect_msg([&] { conv2d(x, rnd({2, 4, 3, 3}, r), Var<double>{}, {}); }, "conv2d");
  expect_msg([&] { maxpool2d(x, 5, 1); }, "maxpool2d");
  expect_msg([&] { linear(rnd({2, 3}, r), rnd({4, 5}, r), Var<double>{}); }, "linear");
  expect_msg([&] { embedding<double>({0, 11}, 1, 2, rnd({10, 2}, r)); }, "embedding");
  expect_msg([&] { lstm_layer(rnd({1, 3, 2}, r), {4}, rnd({4, 2}, r), rnd({4, 1}, r), rnd({4}, r)); }, "lstm");
  expect_msg([&] { film(x, rnd({2, 2}, r), rnd({2, 2}, r)); }, "film");
  expect_msg([&] { concat_channels(x, rnd({1, 3, 4, 5}, r)); }, "concat_channels");
  expect_msg([&] { slice_cols(rnd({2, 3}, r), 2, 2); }, "slice_cols");
  expect_msg([&] { softmax_cross_entropy(rnd({2, 3}, r), {0, 3}); }, "softmax_cross_entropy");
  expect_msg([&] { global_avg_pool(x, {1}); }, "global_avg_pool");
}

TEST(NnOps, BackwardAccumulatesSharedInputs) {
  auto x = parameter(Tensor<double>({1, 1, 1, 2}, std::vector<double>{1, -2}));
  auto y = add(x, x);
  backward(y);
  EXPECT_EQ(x->grad.vec(), (std::vector<double>{2, 2}));
}
