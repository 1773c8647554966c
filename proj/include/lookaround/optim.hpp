#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lookaround/augment.hpp"
#include "lookaround/types.hpp"

namespace lookaround::optim {

enum class InnerKind { Sgd, Momentum };

/// Inner optimizer A. For classical momentum the update order is
///   v <- beta * v - grad;  theta <- theta + lr * v
struct InnerOptimizer {
  InnerKind kind = InnerKind::Sgd;
  double lr = 0.1;
  double momentum = 0.0;
  ParamVector velocity;

  static InnerOptimizer sgd(double lr);
  static InnerOptimizer cm(double lr, double momentum, std::size_t dim);

  void validate() const;
};

ParamVector sgd_step(const InnerOptimizer& state, std::span<const double> params, std::span<const double> grad);
ParamVector cm_step(InnerOptimizer& state, std::span<const double> params, std::span<const double> grad);
/// Dispatches on `state.kind`.
ParamVector inner_step(InnerOptimizer& state, std::span<const double> params, std::span<const double> grad);

/// Lookahead: k fast steps from the slow weights, then
///   slow <- (1 - alpha) * slow + alpha * fast_k.
/// The inner optimizer state (velocity) persists across rounds.
struct LookaheadConfig {
  InnerOptimizer inner;
  int k = 5;
  double alpha = 0.5;
  ParamVector slow;

  static LookaheadConfig create(InnerOptimizer inner, int k, double alpha, ParamVector init);
  void validate() const;
};

/// Returns the new slow weights. Uses the first k batches; fewer is an error.
/// `losses`, when non-null, receives the k inner-step losses.
ParamVector lookahead_round(LookaheadConfig& cfg, const Objective& objective, std::span<const Minibatch> batches,
                            std::vector<double>* losses = nullptr);

/// Lookaround state: d replicas, each with its own augmentation and inner
/// optimizer state, synchronized to `phi` at the start of every round.
struct LookaroundConfig {
  InnerOptimizer inner;  // template for the replica states
  int k = 5;
  std::vector<AugmentationSpec> augs;
  std::vector<ParamVector> replicas;
  std::vector<InnerOptimizer> inner_states;
  ParamVector phi;

  std::uint64_t seed = 0;
  std::uint64_t round = 0;  // completed average steps
  std::uint64_t step = 0;   // around steps taken in the current round

  /// Average CM velocities across replicas at synchronization instead of
  /// zeroing them.
  bool carry_velocity = false;
  /// Advance replicas on separate threads within an around step.
  bool parallel = false;

  static LookaroundConfig create(InnerOptimizer inner, int k, std::vector<AugmentationSpec> augs, ParamVector init,
                                 std::uint64_t seed);

  std::size_t d() const noexcept { return augs.size(); }
  void set_learning_rate(double lr);
  void validate() const;
};

/// RNG stream for replica `replica` at the current (round, step).
std::uint64_t augmentation_stream(const LookaroundConfig& cfg, std::size_t replica);

/// One inner step on every replica, each on its own augmented view of the
/// same minibatch. Returns the per-replica losses.
std::vector<double> around_step(LookaroundConfig& cfg, const Objective& objective, const Minibatch& batch);

/// Variant where replica j consumes `batches[j]` (used by the weight-averaging
/// ablation without augmentation, where replicas differ only in data order).
std::vector<double> around_step(LookaroundConfig& cfg, const Objective& objective,
                                std::span<const Minibatch> per_replica_batches);

/// phi = (1/d) sum_j theta_j; every replica is reset to phi.
ParamVector average_step(LookaroundConfig& cfg);

/// k around steps (one shared batch each) followed by one average step.
ParamVector lookaround_round(LookaroundConfig& cfg, const Objective& objective, std::span<const Minibatch> batches);

/// Uniform mean computed as first + mean(x_j - first), so a set of identical
/// vectors averages to that vector bit-exactly.
ParamVector uniform_mean(std::span<const ParamVector> xs);

}  // namespace lookaround::optim
