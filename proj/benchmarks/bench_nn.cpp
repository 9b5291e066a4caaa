#include <benchmark/benchmark.h>

#include "daqa/models/model.hpp"
#include "daqa/nn/init.hpp"
#include "daqa/nn/layers.hpp"

using namespace daqa;
using namespace daqa::nn;

static void BM_Conv2dForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Rng r(1);
  auto x = parameter(standard_normal_tensor<float>({8, c, 16, 64}, r));
  auto w = parameter(standard_normal_tensor<float>({c, c, 3, 3}, r));
  auto b = parameter(standard_normal_tensor<float>({c}, r));
  for (auto _ : state) {
    auto y = conv2d(x, w, b, {1, 1, 1, 1});
    backward(y);
    benchmark::DoNotOptimize(w->grad);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_LstmForwardBackward(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  Rng r(2);
  ParamSet<float> ps;
  auto lstm = Lstm<float>::make(ps, "q", 64, 128, 2, r);
  auto seq = parameter(standard_normal_tensor<float>({16, steps, 64}, r));
  const std::vector<int> len(16, steps);
  for (auto _ : state) {
    auto h = last_step(lstm(seq, len), len);
    backward(h);
    benchmark::DoNotOptimize(seq->grad);
  }
}
BENCHMARK(BM_LstmForwardBackward)->Arg(12)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_MalimoForward(benchmark::State& state) {
  auto c = models::ModelConfig::defaults(models::ModelKind::MALiMo);
  c.scale = static_cast<int>(state.range(0));
  c.vocab_size = 100;
  auto m = models::Model<float>::build(c, 1);
  Rng r(3);
  models::ModelInput<float> in;
  in.audio = standard_normal_tensor<float>({4, 1, 64, 1000}, r);
  in.widths = {1000, 1000, 1000, 1000};
  in.max_len = 8;
  for (int k = 0; k < 32; ++k) in.tokens.push_back(2 + k % 90);
  in.lengths = {8, 8, 8, 8};
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(in, {}).logits);
}
BENCHMARK(BM_MalimoForward)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
