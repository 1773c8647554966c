#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lookaround/config.hpp"
#include "lookaround/experiments.hpp"
#include "lookaround/quad.hpp"

namespace lookaround::cli {

nn::NnSetup make_setup(const ExperimentConfig& cfg);

/// A random valid noisy-quadratic configuration.
struct QuadCase {
  quad::DiagNoisyQuadratic model;
  double gamma = 0.0;
  int k = 1;
  int d = 1;
  double alpha = 0.5;
};

/// Draws `count` cases: n <= max_coords coordinates, gamma * L_max in
/// [0.05, 0.95], a_i / L_max in [0.1, 1], sigma2 in [0.1, 2], k in
/// [1, max_k], d in [1, max_d], alpha in [0.5, 1).
std::vector<QuadCase> sample_quad_cases(const QuadSettings& s, std::uint64_t seed, int count);

struct FixedPointRow {
  int config = 0;
  int coordinate = 0;
  std::string method;  // sgd | lookaround
  double closed_form = 0.0;
  double iterated = 0.0;
  double rel_error = 0.0;
  long rounds = 0;
};

/// Iterates the SGD and Lookaround moment recursions of every case to
/// stationarity and compares with the closed forms.
std::vector<FixedPointRow> verify_fixed_points(const std::vector<QuadCase>& cases);

struct OrderingStudy {
  int sampled = 0;
  int holding = 0;
  bool found_counterexample = false;
  QuadCase counterexample;
  quad::OrderingReport counter_report;
};

/// Checks the variance ordering on `cases` with d forced to >= 3, then
/// searches d = 1 and alpha < 1/2 configurations for a violation.
OrderingStudy ordering_study(const std::vector<QuadCase>& cases, std::uint64_t seed);

struct GapRow {
  int d = 0;
  int k = 0;
  double empirical = 0.0;
  double empirical_se = 0.0;
  double reference = 0.0;    // closed-form Lookaround fixed point
  double independent = 0.0;  // V*_SGD / d
  double sgd = 0.0;
  bool within_bounds = false;  // empirical in [0.8 V*_SGD/d, 1.05 V*_SGD]
};

/// Monte Carlo steady-state variance of Lookaround under independent noise on
/// a single coordinate (a, sigma2), for every (d, k) pair.
std::vector<GapRow> lookaround_gap(const QuadSettings& s, std::uint64_t seed, int workers);

struct RunResult {
  int exit_code = 0;
  std::string summary;                  // one line
  std::vector<std::string> violations;  // invariant failures
};

/// Runs the experiment and writes its artifacts into `out_dir` (created if
/// needed): CSV tables, best-effort SVG figures, summary.json and the
/// materialized config snapshot config.json.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace lookaround::cli
