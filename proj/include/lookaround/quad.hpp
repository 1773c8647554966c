#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lookaround/types.hpp"

namespace lookaround::quad {

/// Noisy quadratic  L(theta) = 1/2 (theta - c)^T A (theta - c),  c ~ N(0, Sigma),
/// with diagonal A = diag(a) and Sigma = diag(sigma2). The optimum is the origin.
struct DiagNoisyQuadratic {
  std::vector<double> a;
  std::vector<double> sigma2;

  std::size_t dim() const noexcept { return a.size(); }
  double l_max() const;
  void validate() const;
};

/// Per-coordinate mean and variance of an iterate.
struct MomentState {
  std::vector<double> mean;
  std::vector<double> var;

  static MomentState point(std::vector<double> theta0);
};

enum class Method { Sgd, Lookahead, Lookaround };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct MethodSpec {
  Method variant = Method::Sgd;
  double gamma = 0.1;
  int k = 1;
  double alpha = 0.5;  // Lookahead only
  int d = 1;           // Lookaround only

  void validate() const;
};

/// 1/2 sum_i a_i (mean_i^2 + var_i + sigma_i^2)
double expected_loss(const DiagNoisyQuadratic& m, const MomentState& s);

/// E <- (1 - gamma a) E;  V <- (1 - gamma a)^2 V + gamma^2 a^2 sigma^2
MomentState sgd_moment_step(const DiagNoisyQuadratic& m, const MomentState& s, double gamma);

/// One Lookaround round in moment space (the reference recursion):
///   E <- q^k E
///   V <- (d-1)/d q^{2k} V + gamma^2 a^2 sigma^2 (1 - q^{2k}) / (d (1 - q^2)),   q = 1 - gamma a.
/// Throws DomainError when 1 - q^2 vanishes.
MomentState lookaround_moment_round(const DiagNoisyQuadratic& m, const MomentState& s, double gamma, int k, int d);

/// Lookaround round under independent per-replica noise, by the law of total
/// variance: the carried-over variance is q^{2k} V, not (d-1)/d q^{2k} V.
MomentState lookaround_moment_round_independent(const DiagNoisyQuadratic& m, const MomentState& s, double gamma,
                                                int k, int d);

/// One Lookahead round: k SGD steps then slow <- (1-alpha) slow + alpha fast.
MomentState lookahead_moment_round(const DiagNoisyQuadratic& m, const MomentState& s, double gamma, int k,
                                   double alpha);

/// Advances one round of `spec` (a single step for SGD).
MomentState moment_round(const DiagNoisyQuadratic& m, const MomentState& s, const MethodSpec& spec);

/// Closed-form steady-state variances. Requires 0 < gamma < 1/L_max.
/// V*_SGD = gamma^2 a^2 sigma^2 / (1 - q^2); Lookahead and Lookaround follow the
/// coefficient chain (Lookaround = ratio * V*_Lookahead).
std::vector<double> fixed_point(const DiagNoisyQuadratic& m, const MethodSpec& spec);

/// Lookaround fixed point directly from V*_SGD:  (1 - B^2) / (d - (d-1) B^2) * V*_SGD,  B = q^k.
std::vector<double> lookaround_fixed_point_direct(const DiagNoisyQuadratic& m, double gamma, int k, int d);

/// Stationary variance of lookaround_moment_round_independent: V*_SGD / d.
std::vector<double> lookaround_fixed_point_independent(const DiagNoisyQuadratic& m, double gamma, int d);

/// Throws DomainError naming the violated bound unless 0 < gamma < 1/L_max.
void require_fixed_point_range(const DiagNoisyQuadratic& m, double gamma);

/// Two step-size bounds are in circulation, gamma < 2/L_max and gamma < 1/L_max;
/// fixed points enforce the stricter one. This note is emitted with reports.
inline constexpr std::string_view kStepSizeNote =
    "fixed points evaluated under 0 < gamma < 1/L_max (the looser 2/L_max bound is not used)";
inline constexpr std::string_view kSigmaNote =
    "V*_SGD uses gamma^2 a^2 sigma^2 (the recursion's noise term), not the squared-Sigma form";

struct OrderingReport {
  bool holds = false;
  std::vector<double> lookahead_over_sgd;
  std::vector<double> lookaround_over_lookahead;
};

/// Whether V*_Lookaround <= V*_Lookahead <= V*_SGD in every coordinate.
OrderingReport check_ordering(const DiagNoisyQuadratic& m, double gamma, int k, int d, double alpha);

struct Stationary {
  std::vector<double> var;
  long rounds = 0;
  bool converged = false;
};

/// Iterates the method's moment recursion from zero variance until every
/// coordinate's relative change drops below `rel_tol` or `max_rounds` pass.
/// Lookaround uses the reference recursion.
Stationary iterate_to_stationarity(const DiagNoisyQuadratic& m, const MethodSpec& spec, double rel_tol = 1e-13,
                                   long max_rounds = 1'000'000);

enum class NoiseMode { Independent, Shared };

std::string_view to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view name);

struct MonteCarloOptions {
  long rounds = 100;
  long trials = 10'000;
  NoiseMode noise = NoiseMode::Independent;
  std::uint64_t seed = 0;
  std::vector<double> theta0;  // defaults to all ones
  int workers = 1;
};

/// Per-round empirical moments across trials (entry 0 is the start point).
/// `var` is the unbiased sample variance.
struct Trajectory {
  std::vector<MomentState> rounds;
  long trials = 0;
};

/// Simulates the stochastic process itself: every inner step draws
/// c ~ N(0, Sigma) (one per replica under Independent, one shared under
/// Shared) and takes an SGD step on the sampled loss. Trials are processed in
/// fixed blocks merged by a fixed pairwise tree, so output does not depend on
/// `workers`.
Trajectory monte_carlo(const DiagNoisyQuadratic& m, const MethodSpec& spec, const MonteCarloOptions& opts);

/// Analytic trajectory of the same method and start point (Lookaround uses
/// the reference recursion).
std::vector<MomentState> analytic_trajectory(const DiagNoisyQuadratic& m, const MethodSpec& spec,
                                             const std::vector<double>& theta0, long rounds);

/// Deterministic quadratic objective whose noise vector c is the mean input of
/// the minibatch; drives the core optimizers in tests and simulations.
class QuadraticObjective : public Objective {
 public:
  explicit QuadraticObjective(std::vector<double> a);
  std::size_t dimension() const override { return a_.size(); }
  LossAndGrad evaluate(std::span<const double> params, const Minibatch& batch) const override;

 private:
  std::vector<double> a_;
};

}  // namespace lookaround::quad
