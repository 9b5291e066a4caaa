#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "daqa/nn/autograd.hpp"

namespace daqa::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Tensors larger than this are sampled at this many coordinates.
  std::size_t max_coords = 256;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "input#k[i]" of the worst coordinate
  std::size_t coords = 0;
};

/// Compares reverse-mode gradients of `build()` (reduced by a fixed random
/// weighting of its output) against central differences for each tensor in
/// `wrt`. Relative error is |a - n| / max(|a|, |n|, 1e-8). Throws NumericError
/// naming the op if the forward pass yields a non-finite value.
GradCheckResult grad_check(const std::function<Var<double>()>& build, const std::vector<Var<double>>& wrt,
                           const GradCheckOptions& opts = {});

}  // namespace daqa::nn
