#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lookaround::cli {

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind {
  QuadFixedPoints,
  QuadMonteCarlo,
  RateSweep,
  Train,
  Ablation,
  SweepD,
  SweepK,
  Landscape,
  SoupsCollapse,
};

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);
const std::vector<ExperimentKind>& all_experiment_kinds();

/// Malformed config: unknown key, wrong type or a value outside its range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct QuadSettings {
  // quad-fixed-points: random diagonal models
  int configs = 100;
  int max_coords = 8;
  int max_k = 50;
  int max_d = 6;
  // quad-monte-carlo
  std::vector<double> a{1.0};
  std::vector<double> sigma2{1.0};
  double gamma = 0.1;
  int k = 5;
  int d = 3;
  double alpha = 0.5;
  long rounds = 60;
  long trials = 100000;
  std::vector<std::string> noise_modes{"independent", "shared"};
  std::vector<int> gap_d{2, 3, 5};
  std::vector<int> gap_k{1, 5, 20};
  long gap_trials = 20000;

  bool operator==(const QuadSettings&) const = default;
};

struct RateSweepSettings {
  std::vector<double> kappas{1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7};
  std::vector<std::string> methods{"cm", "lookahead", "lookaround"};
  int k = 20;
  double beta = 0.99;
  double alpha = 0.5;
  int gamma_points = 200;
  double gamma_min = 1e-6;

  bool operator==(const RateSweepSettings&) const = default;
};

struct DatasetSettings {
  std::string kind = "spirals";
  long n_train = 150;
  long n_test = 1000;
  double noise = -1.0;  // materialized to the kind's default during parsing

  bool operator==(const DatasetSettings&) const = default;
};

struct ScheduleSettings {
  std::string kind = "constant";
  double factor = 0.2;
  std::vector<double> milestones{0.3, 0.6, 0.8};

  bool operator==(const ScheduleSettings&) const = default;
};

struct TrainSettings {
  std::string method = "lookaround";
  std::string inner = "sgd";
  double lr = 1.0;
  double momentum = 0.9;
  int k = 10;
  double alpha = 0.5;
  int d = 3;
  int batch_size = 32;
  long steps = 2000;
  ScheduleSettings schedule;
  std::vector<int> hidden{32, 32};
  bool carry_velocity = false;
  bool independent_batches = false;
  int eval_every = 20;

  bool operator==(const TrainSettings&) const = default;
};

struct SweepSettings {
  std::vector<int> d_values{1, 2, 3, 4, 5, 6};
  std::vector<int> k_values{1, 5, 50, 0};  // 0: one epoch

  bool operator==(const SweepSettings&) const = default;
};

struct LandscapeSettings {
  double small_lr = 0.01;
  int small_k = 10;
  double large_lr = 2.0;
  int large_k = 100;
  int resolution = 25;
  double margin = 0.3;

  bool operator==(const LandscapeSettings&) const = default;
};

struct CollapseSettings {
  long long_steps = 5000;
  double small_lr = 0.01;

  bool operator==(const CollapseSettings&) const = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ExperimentKind kind = ExperimentKind::Train;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int workers = 1;

  QuadSettings quad;
  RateSweepSettings rate_sweep;
  DatasetSettings dataset;
  TrainSettings train;
  SweepSettings sweep;
  LandscapeSettings landscape;
  CollapseSettings collapse;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses a JSON document. Missing keys take their defaults; unknown keys,
/// type mismatches and out-of-range values throw ConfigError naming the key
/// and, for ranges, the violated bound.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully materialized JSON (every key present); parse_config(to_json(c)) == c.
std::string to_json(const ExperimentConfig& cfg);

/// Range checks applied after parsing and after flag overrides.
void validate(const ExperimentConfig& cfg);

}  // namespace lookaround::cli
