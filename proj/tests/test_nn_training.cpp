#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "daqa/common/error.hpp"
#include "daqa/nn/checkpoint.hpp"
#include "daqa/nn/init.hpp"
#include "daqa/nn/layers.hpp"
#include "daqa/nn/optim.hpp"
#include "test_util.hpp"

using namespace daqa;
using namespace daqa::nn;

TEST(Adam, FirstStepFromZeroState) {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.0;
  std::vector<double> p{1.0, -2.0, 0.5, 3.0};
  const std::vector<double> g{0.3, -4.0, 1e-3, 0.0};
  AdamMoments<double> st;
  adam_update<double>(p, g, st, 1, cfg);
  const std::vector<double> p0{1.0, -2.0, 0.5, 3.0};
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_NEAR(p[i], p0[i] - cfg.lr * g[i] / (std::abs(g[i]) + cfg.eps), 1e-15) << i;
}

TEST(Adam, DecoupledDecayScalesParameter) {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  std::vector<double> p{2.0};
  const std::vector<double> g{1.0};
  AdamMoments<double> st;
  adam_update<double>(p, g, st, 1, cfg);
  EXPECT_NEAR(p[0], 2.0 * (1.0 - 0.05) - 0.1 * 1.0 / (1.0 + cfg.eps), 1e-12);

  cfg.decoupled = false;
  std::vector<double> q{2.0};
  AdamMoments<double> sq;
  adam_update<double>(q, g, sq, 1, cfg);
  const double gi = 1.0 + 0.5 * 2.0;
  EXPECT_NEAR(q[0], 2.0 - 0.1 * gi / (gi + cfg.eps), 1e-12);
}

TEST(Adam, TwoStepsMatchClosedForm) {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.lr = 0.01;
  std::vector<double> p{0.0};
  AdamMoments<double> st;
  adam_update<double>(p, std::vector<double>{1.0}, st, 1, cfg);
  adam_update<double>(p, std::vector<double>{-3.0}, st, 2, cfg);
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * -3.0;
  const double v = 0.999 * 0.001 * 1.0 + 0.001 * 9.0;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  const double p1 = -0.01 * 1.0 / (1.0 + cfg.eps);
  EXPECT_NEAR(p[0], p1 - 0.01 * mh / (std::sqrt(vh) + cfg.eps), 1e-12);
}

TEST(Adam, MinimizesQuadratic) {
  ParamSet<double> ps;
  auto w = ps.add("w", Tensor<double>({3}, std::vector<double>{4, -2, 1}));
  AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.weight_decay = 0.0;
  Adam<double> opt(ps, cfg);
  for (int k = 0; k < 2000; ++k) {
    ps.zero_grad();
    auto& g = w->ensure_grad();
    for (std::size_t i = 0; i < 3; ++i) g[i] = 2.0 * (w->value[i] - 1.0);
    opt.step();
  }
  EXPECT_EQ(opt.steps(), 2000);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(w->value[i], 1.0, 1e-3);
}

TEST(Adam, MissingGradientIsZero) {
  ParamSet<double> ps;
  auto w = ps.add("w", Tensor<double>({2}, 1.0));
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  Adam<double> opt(ps, cfg);
  opt.step();
  EXPECT_EQ(w->value.vec(), (std::vector<double>{1.0, 1.0}));
  std::vector<double> p{1.0, 2.0};
  AdamMoments<double> st;
  EXPECT_THROW(adam_update<double>(p, std::vector<double>{1.0}, st, 1, cfg), ShapeError);
}

TEST(ParamSet, RegistrationAndCounts) {
  ParamSet<float> ps;
  Rng r(1);
  Conv2d<float>::make(ps, "c", 3, 4, 3, 3, {}, r);
  Linear<float>::make(ps, "fc", 10, 5, r);
  BatchNorm<float>::make(ps, "bn", 4, true);
  BatchNorm<float>::make(ps, "bn2", 2, false);
  EXPECT_EQ(ps.count(), static_cast<std::size_t>(4 * 3 * 9 + 4 + 50 + 5 + 8));
  EXPECT_EQ(ps.params().size(), 6u);
  EXPECT_EQ(ps.buffers().size(), 4u);
  EXPECT_EQ(ps.buffers()[2].first, "bn2.running_mean");
  EXPECT_TRUE(ps.find("fc.bias"));
  EXPECT_FALSE(ps.find("fc.nothing"));
  EXPECT_THROW(ps.add("fc.bias", Tensor<float>({1})), SchemaError);
}

TEST(ParamSet, BufferAddressesSurviveMove) {
  ParamSet<double> ps;
  auto& buf = ps.add_batchnorm("a", 2);
  for (int k = 0; k < 50; ++k) ps.add_batchnorm("x" + std::to_string(k), 3);
  buf.running_mean[1] = 7.0;
  ParamSet<double> moved = std::move(ps);
  EXPECT_EQ(moved.buffers()[0].second, &buf.running_mean);
  EXPECT_EQ((*moved.buffers()[0].second)[1], 7.0);
}

TEST(Init, FanInBounds) {
  Rng r(3);
  auto t = uniform_fan_in<double>({64, 16}, 16, r);
  double lo = 1, hi = -1;
  for (double v : t.vec()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -0.25);
  EXPECT_LE(hi, 0.25);
  EXPECT_LT(lo, -0.2);
  EXPECT_GT(hi, 0.2);
  ParamSet<double> ps;
  auto l = Lstm<double>::make(ps, "q", 3, 4, 1, r);
  for (int j = 4; j < 8; ++j) EXPECT_EQ(l.layers[0].b->value[static_cast<std::size_t>(j)], kForgetBias);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  daqa::test::TempDir dir("ckpt");
  Rng r(5);
  ParamSet<float> a;
  Conv2d<float>::make(a, "c", 2, 3, 3, 3, {}, r);
  auto bn = BatchNorm<float>::make(a, "bn", 3, true);
  bn.buffers->running_mean[2] = 0.25f;
  bn.buffers->running_var[0] = 3.5f;
  Json meta{{"epoch", 4}};
  save_checkpoint(dir.path() / "m.ckpt", a, meta);

  ParamSet<float> b;
  Rng r2(99);
  Conv2d<float>::make(b, "c", 2, 3, 3, 3, {}, r2);
  BatchNorm<float>::make(b, "bn", 3, true);
  auto m = load_checkpoint(dir.path() / "m.ckpt", b);
  EXPECT_EQ(m.at("epoch"), 4);
  for (std::size_t k = 0; k < a.params().size(); ++k)
    EXPECT_EQ(a.params()[k].second->value.vec(), b.params()[k].second->value.vec()) << a.params()[k].first;
  for (std::size_t k = 0; k < a.buffers().size(); ++k) EXPECT_EQ(a.buffers()[k].second->vec(), b.buffers()[k].second->vec());

  auto h = read_checkpoint_header(dir.path() / "m.ckpt");
  EXPECT_EQ(h.at("precision"), "f32");
  EXPECT_EQ(h.at("tensors").size(), 6u);
}

TEST(Checkpoint, Errors) {
  daqa::test::TempDir dir("ckpt");
  Rng r(5);
  ParamSet<float> a;
  Linear<float>::make(a, "fc", 4, 2, r);
  save_checkpoint(dir.path() / "m.ckpt", a);

  ParamSet<float> wrong_shape;
  Linear<float>::make(wrong_shape, "fc", 5, 2, r);
  EXPECT_THROW(load_checkpoint(dir.path() / "m.ckpt", wrong_shape), ShapeError);

  ParamSet<float> extra;
  Linear<float>::make(extra, "fc", 4, 2, r);
  Linear<float>::make(extra, "head", 2, 2, r);
  try {
    load_checkpoint(dir.path() / "m.ckpt", extra);
    ADD_FAILURE();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("head.weight"), std::string::npos) << e.what();
  }

  ParamSet<double> dbl;
  Linear<double>::make(dbl, "fc", 4, 2, r);
  EXPECT_THROW(load_checkpoint(dir.path() / "m.ckpt", dbl), LoadError);

  EXPECT_THROW(read_checkpoint_header(dir.path() / "absent.ckpt"), LoadError);
  std::ofstream(dir.path() / "junk.ckpt") << "not a checkpoint at all";
  EXPECT_THROW(read_checkpoint_header(dir.path() / "junk.ckpt"), LoadError);
}
