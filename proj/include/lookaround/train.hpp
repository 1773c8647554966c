#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lookaround/augment.hpp"
#include "lookaround/dataset.hpp"
#include "lookaround/mlp.hpp"
#include "lookaround/optim.hpp"

namespace lookaround::nn {

enum class TrainMethod { Sgd, Lookahead, Lookaround };

std::string_view to_string(TrainMethod m);
TrainMethod parse_train_method(std::string_view name);

enum class ScheduleKind { Constant, Piecewise, Cosine };

std::string_view to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(std::string_view name);

/// Learning-rate schedule over a run of `total` inner steps. Piecewise decays
/// by `factor` at each milestone (fractions of the run).
struct Schedule {
  ScheduleKind kind = ScheduleKind::Piecewise;
  double factor = 0.2;
  std::vector<double> milestones{0.3, 0.6, 0.8};

  double lr_at(double base_lr, long step, long total) const;
};

struct TrainConfig {
  TrainMethod method = TrainMethod::Lookaround;
  optim::InnerKind inner = optim::InnerKind::Sgd;
  double lr = 0.1;
  double momentum = 0.9;  // used when inner == Momentum
  int k = 10;
  double alpha = 0.5;  // Lookahead
  int batch_size = 32;
  long steps = 2000;  // inner steps per replica
  Schedule schedule;
  std::vector<int> hidden{32, 32};
  bool carry_velocity = false;
  bool parallel = false;
  /// Replicas draw their own epoch shuffles instead of sharing batches.
  bool independent_batches = false;
  int eval_every = 1;  // rounds between evaluations (the last round is always evaluated)
  std::uint64_t seed = 0;
};

/// One synchronization. For single-trajectory methods the replica vectors
/// hold one entry.
struct RoundRecord {
  long round = 0;
  double lr = 0.0;
  std::vector<double> train_loss;    // mean over the round's inner steps, per replica
  std::vector<double> replica_acc;   // test accuracy before averaging
  double mean_acc = 0.0;             // test accuracy of the synchronized weights
  double mean_test_loss = 0.0;
  double max_pairwise_distance = 0.0;  // L2, replicas before averaging
  double wall_seconds = 0.0;
};

struct RunLog {
  TrainConfig config;
  std::vector<int> widths;
  std::vector<AugmentationSpec> augs;
  std::vector<RoundRecord> records;
  ParamVector final_params;
  /// Replica weights of the last round just before the average step.
  std::vector<ParamVector> last_replicas;
  double final_test_acc = 0.0;
  double final_test_loss = 0.0;

  MLP final_model() const { return MLP(widths, final_params); }
};

/// Runs the configured optimizer on `dataset`. SGD and Lookahead train on
/// augs[0] (identity when empty); Lookaround uses one replica per entry of
/// `augs`. Batches come from one shuffle per epoch shared by all replicas.
RunLog train(const TrainConfig& cfg, const Dataset& dataset, std::span<const AugmentationSpec> augs);

/// Average pre-softmax logits across `models`, argmax, test accuracy.
double logit_ensemble(std::span<const MLP> models, const Dataset& dataset);

/// Elementwise mean of flattened weights; architectures must match.
MLP posthoc_average(std::span<const MLP> models);

}  // namespace lookaround::nn
