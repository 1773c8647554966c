#pragma once

#include <span>
#include <vector>

#include "lookaround/rng.hpp"
#include "lookaround/types.hpp"

namespace lookaround::nn {

/// Parameter count of a fully connected net with the given layer widths
/// (input first, classes last).
std::size_t param_count(std::span<const int> widths);

/// Widths {input, hidden..., classes}.
std::vector<int> architecture(int input_dim, std::span<const int> hidden, int classes);

/// Fully connected tanh network with a softmax cross-entropy head. Weights live
/// in one flat vector, layer by layer: W (out x in, row-major) then b (out).
class MLP {
 public:
  MLP() = default;
  MLP(std::vector<int> widths, ParamVector params);

  static MLP zeros(std::vector<int> widths);
  /// Glorot-uniform weights, zero biases.
  static MLP random(std::vector<int> widths, Rng& rng);
  static MLP unflatten(std::vector<int> widths, std::span<const double> flat);

  const std::vector<int>& widths() const noexcept { return widths_; }
  const ParamVector& params() const noexcept { return params_; }
  ParamVector flatten() const { return params_; }

  std::vector<double> logits(std::span<const double> input) const;

 private:
  std::vector<int> widths_;
  ParamVector params_;
};

std::vector<double> forward_logits(std::span<const int> widths, std::span<const double> params,
                                   std::span<const double> input);

/// Mean cross-entropy over the batch and its exact gradient.
LossAndGrad loss_and_grad(std::span<const int> widths, std::span<const double> params, const Minibatch& batch);

LossAndGrad mlp_grad(const MLP& net, const Minibatch& batch);

double mean_loss(std::span<const int> widths, std::span<const double> params, std::span<const Example> examples);
double accuracy(std::span<const int> widths, std::span<const double> params, std::span<const Example> examples);

inline double mean_loss(const MLP& net, std::span<const Example> examples) {
  return mean_loss(net.widths(), net.params(), examples);
}
inline double accuracy(const MLP& net, std::span<const Example> examples) {
  return accuracy(net.widths(), net.params(), examples);
}

class MlpObjective : public Objective {
 public:
  explicit MlpObjective(std::vector<int> widths);
  std::size_t dimension() const override { return dim_; }
  LossAndGrad evaluate(std::span<const double> params, const Minibatch& batch) const override;
  const std::vector<int>& widths() const noexcept { return widths_; }

 private:
  std::vector<int> widths_;
  std::size_t dim_;
};

}  // namespace lookaround::nn
