#include "daqa/models/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "daqa/common/error.hpp"

namespace daqa::models {

std::vector<float> bilinear_resize(const std::vector<float>& grid, int in_h, int in_w, int out_h, int out_w) {
  if (static_cast<int>(grid.size()) != in_h * in_w || in_h < 1 || in_w < 1)
    throw ShapeError("bilinear_resize: grid does not match its extents");
  auto src = [](int d, int in, int out, int& i0, int& i1, double& f) {
    double s = (d + 0.5) * in / out - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, in - 1);
    f = s - i0;
  };
  std::vector<float> out(static_cast<std::size_t>(out_h) * out_w);
  for (int y = 0; y < out_h; ++y) {
    int y0, y1;
    double fy;
    src(y, in_h, out_h, y0, y1, fy);
    for (int x = 0; x < out_w; ++x) {
      int x0, x1;
      double fx;
      src(x, in_w, out_w, x0, x1, fx);
      auto g = [&](int r, int c) { return static_cast<double>(grid[static_cast<std::size_t>(r) * in_w + c]); };
      const double top = g(y0, x0) * (1 - fx) + g(y0, x1) * fx;
      const double bot = g(y1, x0) * (1 - fx) + g(y1, x1) * fx;
      out[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>(top * (1 - fy) + bot * fy);
    }
  }
  return out;
}

SaliencyMap saliency(Model<float>& model, const std::vector<float>& features, int frames, const std::vector<int>& question) {
  const int n_mels = model.config().n_mels;
  auto in = make_input<float>({&features}, {frames}, n_mels, {question}, model.min_frames());
  auto res = model.forward(in, {});
  const auto& logits = res.logits->value;
  const int K = logits.dim(1);
  const int pred = static_cast<int>(std::max_element(logits.data(), logits.data() + K) - logits.data());
  nn::Tensor<float> seed(logits.shape());
  seed[static_cast<std::size_t>(pred)] = 1.0f;
  nn::backward(res.logits, &seed);

  const auto& act = res.features;
  const int C = act->value.dim(1), H = act->value.dim(2);
  const int W = std::min(act->value.dim(3), res.feature_widths.at(0));
  std::vector<float> grid(static_cast<std::size_t>(W) * H, 0.0f);  // [time x freq]
  if (act->has_grad()) {
    for (int w = 0; w < W; ++w)
      for (int h = 0; h < H; ++h) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) {
          const double g = act->grad.at(0, c, h, w);
          s += g * g;
        }
        grid[static_cast<std::size_t>(w) * H + h] = static_cast<float>(std::sqrt(s));
      }
  }
  model.params().zero_grad();
  SaliencyMap map;
  map.frames = frames;
  map.dims = n_mels;
  map.predicted = pred;
  map.data = bilinear_resize(grid, W, H, frames, n_mels);
  return map;
}

}  // namespace daqa::models
