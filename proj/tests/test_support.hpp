#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lookaround/mlp.hpp"
#include "lookaround/rng.hpp"

namespace lookaround::testing {

/// Worst relative error between the analytic gradient and central finite
/// differences at `samples` random coordinates. The denominator is floored at
/// 1e-4 so coordinates whose true gradient is near zero are compared in
/// absolute terms instead of amplifying round-off.
inline double gradient_check(const std::vector<int>& widths, const ParamVector& params, const Minibatch& batch,
                             int samples, Rng& rng, double h = 1e-5) {
  const LossAndGrad lg = nn::loss_and_grad(widths, params, batch);
  std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
  ParamVector p = params;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const std::size_t i = pick(rng);
    p[i] = params[i] + h;
    const double up = nn::loss_and_grad(widths, p, batch).loss;
    p[i] = params[i] - h;
    const double down = nn::loss_and_grad(widths, p, batch).loss;
    p[i] = params[i];
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(lg.grad[i]), 1e-4});
    worst = std::max(worst, std::abs(fd - lg.grad[i]) / denom);
  }
  return worst;
}

inline Minibatch as_batch(const std::vector<Example>& examples) {
  Minibatch b;
  b.examples = examples;
  for (std::size_t i = 0; i < examples.size(); ++i) b.indices.push_back(i);
  return b;
}

}  // namespace lookaround::testing
