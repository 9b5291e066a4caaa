#include "daqa/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "daqa/common/error.hpp"
#include "daqa/common/rng.hpp"
#include "daqa/nn/ops.hpp"

namespace daqa::nn {

namespace {

Var<double> checked(const std::function<Var<double>()>& build) {
  auto out = build();
  const std::string bad = first_non_finite(out);
  if (!bad.empty()) throw NumericError("grad_check: non-finite value produced by op " + bad);
  return out;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var<double>()>& build, const std::vector<Var<double>>& wrt,
                           const GradCheckOptions& opts) {
  Rng rng(opts.seed);
  auto out = checked(build);
  Tensor<double> weights(out->value.shape());
  for (std::size_t i = 0; i < weights.numel(); ++i) weights[i] = uniform_real(rng, 0.5, 1.5) * (bernoulli(rng, 0.5) ? 1 : -1);

  auto reduced = [&]() { return weighted_sum(checked(build), weights)->value[0]; };

  for (const auto& v : wrt) v->grad = Tensor<double>();
  backward(weighted_sum(out, weights));

  GradCheckResult res;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto& node = *wrt[k];
    const Tensor<double> analytic = node.has_grad() ? node.grad : Tensor<double>(node.value.shape());
    std::vector<std::size_t> coords(node.value.numel());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > opts.max_coords) {
      shuffle(coords, rng);
      coords.resize(opts.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = node.value[i];
      node.value[i] = saved + opts.eps;
      const double up = reduced();
      node.value[i] = saved - opts.eps;
      const double down = reduced();
      node.value[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double a = analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++res.coords;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = "input#" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace daqa::nn
