#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lookaround::conv {

/// Linear map advancing a deterministic quadratic by `steps_per_application`
/// inner updates.
struct TransitionSystem {
  Eigen::MatrixXd matrix;
  int steps_per_application = 1;

  void validate() const;
};

/// One eigen-direction of a deterministic quadratic f = a/2 theta^2.
struct QuadraticSpec1D {
  double a = 1.0;
  double gamma = 0.1;
  double beta = 0.0;
  int k = 1;
  double kappa = 1.0;  // sweep context only

  void validate() const;
};

/// [[beta, -a], [gamma beta, 1 - gamma a]] acting on (v, theta).
Eigen::Matrix2d cm_matrix(const QuadraticSpec1D& q);

/// Spectral radius of the classical-momentum transition matrix. gamma = 0
/// leaves the iterate fixed, so the rate is max(beta, 1) = 1.
double cm_rate(const QuadraticSpec1D& q);

/// (sqrt(kappa) - 1) / (sqrt(kappa) + 1); DomainError for kappa < 1.
double optimal_rate(double kappa);

TransitionSystem build_cm_system(const QuadraticSpec1D& q);

/// Historical-average model of Lookaround: M = L * B^(k-1) * T over the state
/// (theta_{t,0}, theta_{t-1,k}, ..., theta_{t-1,1}), with
///   L: first row averages all k+1 entries, then a shift;
///   B: heavy-ball row ((1+beta) - gamma a, -beta, 0, ...), then a shift;
///   T: first row (1 - gamma a, beta, -beta, 0, ...), then a shift.
/// For k = 1 the -beta column of T falls outside the 2-entry state and is dropped.
TransitionSystem build_lookaround_system(const QuadraticSpec1D& q);

/// Lookahead over (v, theta, phi): k momentum steps from theta = phi, then
/// theta = phi = (1 - alpha) phi + alpha theta_k. Velocity carries across rounds.
TransitionSystem build_lookahead_system(const QuadraticSpec1D& q, double alpha);

/// Max modulus over the (complex) eigenvalues. Throws NumericalError on
/// non-finite input or solver failure, echoing the matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// spectral_radius(matrix)^(1 / steps_per_application)
double rate(const TransitionSystem& system);

enum class RateMethod { Cm, Lookahead, Lookaround };

/// Output label. The Lookaround rate is the historical-average approximation.
std::string_view to_string(RateMethod m);
RateMethod parse_rate_method(std::string_view name);

/// Per-step rate of `method` on one direction.
double method_rate(RateMethod method, const QuadraticSpec1D& q, double alpha);

struct SweepOptions {
  std::vector<double> kappas;
  std::vector<RateMethod> methods{RateMethod::Cm, RateMethod::Lookahead, RateMethod::Lookaround};
  int k = 20;
  double beta = 0.99;
  double alpha = 0.5;      // Lookahead interpolation
  int gamma_points = 200;  // log grid over [gamma_min, 2 / kappa]
  double gamma_min = 1e-6;
  int workers = 1;
};

struct SweepRow {
  double kappa = 1.0;
  RateMethod method = RateMethod::Cm;
  double best_rate = 1.0;
  double best_gamma = 0.0;
};

/// Log-spaced grid, `points` values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int points);

/// For every kappa: curvatures {1, kappa}, worst direction per gamma, best
/// gamma on the log grid. Rows are ordered by (kappa, method order).
std::vector<SweepRow> rate_sweep(const SweepOptions& opts);

}  // namespace lookaround::conv
