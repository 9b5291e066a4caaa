#pragma once

#include <vector>

#include "daqa/models/model.hpp"

namespace daqa::models {

/// Non-negative map on the input grid: frames x n_mels, row-major.
struct SaliencyMap {
  int frames = 0;
  int dims = 0;
  int predicted = -1;
  std::vector<float> data;
  float at(int t, int m) const { return data[static_cast<std::size_t>(t) * dims + m]; }
};

/// Channel-wise L2 norm of d(predicted logit)/d(last modulated activation),
/// bilinearly upsampled to the feature grid. `features` is frames x n_mels.
SaliencyMap saliency(Model<float>& model, const std::vector<float>& features, int frames,
                     const std::vector<int>& question);

/// Bilinear resize of a row-major [in_h x in_w] grid (half-pixel centres).
std::vector<float> bilinear_resize(const std::vector<float>& grid, int in_h, int in_w, int out_h, int out_w);

}  // namespace daqa::models
