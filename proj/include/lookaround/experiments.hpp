#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lookaround/dataset.hpp"
#include "lookaround/landscape.hpp"
#include "lookaround/train.hpp"

namespace lookaround::nn {

/// Dataset recipe plus the base training configuration shared by every arm of
/// an experiment. The per-run seed replaces `train.seed`.
struct NnSetup {
  DatasetKind kind = DatasetKind::Spirals;
  std::size_t n_train = 150;
  std::size_t n_test = 1000;
  double noise = -1.0;  // negative: the kind's default
  TrainConfig train;
  int d = 3;

  Dataset make_dataset(std::uint64_t seed) const;
  TrainConfig config_for(std::uint64_t seed) const;
};

/// Spirals, 150 training points, 2x32x32x2 tanh MLP, plain SGD inner steps at
/// a constant learning rate of 1.0, batch 32, 2000 steps, k = 10, d = 3.
NnSetup reference_setup();

struct SeedStats {
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

SeedStats summarize(std::vector<double> values);

/// Least-squares slope of y on x.
double trend_slope(std::span<const double> x, std::span<const double> y);

/// A unit of work keyed by (seed, arm) for error reporting.
struct Job {
  std::uint64_t seed = 0;
  std::string arm;
  std::function<void()> fn;
};

class JobError : public std::runtime_error {
 public:
  JobError(std::uint64_t seed, std::string arm, const std::string& what);
  std::uint64_t seed;
  std::string arm;
};

/// Runs every job on at most `workers` threads. The first failure in job
/// order is rethrown as JobError once all started jobs have finished.
void run_jobs(std::vector<Job>& jobs, int workers);

// ---------------------------------------------------------------------------

/// Reference SGD run on the identity augmentation.
RunLog baseline_run(const NnSetup& setup, std::uint64_t seed);

struct AugScreen {
  std::string name;
  double baseline_acc = 0.0;
  double augmented_acc = 0.0;  // same model, test inputs transformed
  bool ok = false;             // |shift| < 20 points
};

/// Trains the reference baseline once and scores it on transformed copies of
/// the test set, one entry per catalog augmentation.
std::vector<AugScreen> screen_augmentations(const NnSetup& setup, std::uint64_t seed);

struct AblationCell {
  std::string name;
  bool da = false;
  bool wa = false;
  SeedStats acc;
};

/// {no DA, DA} x {no WA, WA}. No-WA arms train one net per augmentation and
/// keep the best on the test set; no-DA arms use identity transforms, and the
/// no-DA WA arm gives each replica its own batch order.
struct AblationResult {
  std::array<AblationCell, 4> cells;  // noDA-noWA, DA-noWA, noDA-WA, DA-WA

  const AblationCell& cell(bool da, bool wa) const;
  bool da_wa_is_max() const;
};

AblationResult ablation_grid(const NnSetup& setup, std::span<const std::uint64_t> seeds, int workers = 1);

struct SweepPoint {
  int value = 0;
  SeedStats acc;
  std::vector<RunLog> logs;  // one per seed, seed order
};

/// Lookaround with the first d catalog augmentations, one run per (d, seed).
std::vector<SweepPoint> sweep_d(const NnSetup& setup, std::span<const int> d_values,
                                std::span<const std::uint64_t> seeds, int workers = 1);

/// Lookaround at each k; k <= 0 means one epoch of batches.
std::vector<SweepPoint> sweep_k(const NnSetup& setup, std::span<const int> k_values,
                                std::span<const std::uint64_t> seeds, int workers = 1);

/// Slope of the seed-mean accuracy against the sweep value.
double sweep_slope(const std::vector<SweepPoint>& points);

struct CollapseResult {
  double acc_a = 0.0;
  double acc_b = 0.0;
  double acc_averaged = 0.0;
  double drop = 0.0;  // min(acc_a, acc_b) - acc_averaged

  RunLog lookaround;
  std::vector<double> sync_gaps;  // |mean-net acc - mean replica acc| per synchronization
  double max_sync_gap = 0.0;
  /// Fraction of synchronizations where the mean net is at least as accurate
  /// as the worst replica.
  double mean_above_min_fraction = 0.0;
};

/// Two nets from independent seeds trained for `long_steps` SGD steps each and
/// weight-averaged, next to one small-lr Lookaround run of the same length
/// evaluated at every synchronization.
CollapseResult soups_collapse(const NnSetup& setup, std::uint64_t seed, long long_steps, double small_lr,
                              int workers = 1);

struct LandscapeRegime {
  double lr = 0.0;
  int k = 0;
  PlaneProjection proj;
  PlaneGrid grid;
  std::array<PlaneCoords, 3> corners;   // w_v, w_h, w_r
  std::array<double, 3> corner_loss{};  // test loss at the corners
  double mean_x = 0.0;
  double mean_y = 0.0;
  double mean_loss = 0.0;  // test loss at the in-plane mean point
  double min_corner_loss = 0.0;
  bool mean_below_min = false;
};

/// Trains Lookaround at (lr, k) and spans the plane through the three
/// replicas just before the final average step. The grid covers the corners
/// with `margin` (fraction of the span) on every side.
LandscapeRegime landscape_run(const NnSetup& setup, std::uint64_t seed, double lr, int k, int resolution,
                              double margin = 0.3, int workers = 1);

}  // namespace lookaround::nn
