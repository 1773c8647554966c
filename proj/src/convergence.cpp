#include "lookaround/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Eigenvalues>

#include "lookaround/types.hpp"

namespace lookaround::conv {

void TransitionSystem::validate() const {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw std::invalid_argument("transition matrix must be square and non-empty");
  }
  if (steps_per_application < 1) throw std::invalid_argument("steps_per_application must be >= 1");
  if (!matrix.allFinite()) throw NumericalError("transition matrix has non-finite entries");
}

void QuadraticSpec1D::validate() const {
  if (!(a > 0.0)) throw std::invalid_argument("curvature a must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
}

Eigen::Matrix2d cm_matrix(const QuadraticSpec1D& q) {
  Eigen::Matrix2d m;
  m << q.beta, -q.a, q.gamma * q.beta, 1.0 - q.gamma * q.a;
  return m;
}

double cm_rate(const QuadraticSpec1D& q) {
  q.validate();
  return spectral_radius(cm_matrix(q));
}

double optimal_rate(double kappa) {
  if (!(kappa >= 1.0)) throw DomainError("condition number must satisfy kappa >= 1");
  const double s = std::sqrt(kappa);
  return (s - 1.0) / (s + 1.0);
}

TransitionSystem build_cm_system(const QuadraticSpec1D& q) {
  q.validate();
  return {cm_matrix(q), 1};
}

namespace {

/// Rows 1..n-1 copy the previous entry: row i has a one in column i-1.
Eigen::MatrixXd shift_rows(int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) m(i, i - 1) = 1.0;
  return m;
}

}  // namespace

TransitionSystem build_lookaround_system(const QuadraticSpec1D& q) {
  q.validate();
  const int n = q.k + 1;
  const double contraction = 1.0 - q.gamma * q.a;

  Eigen::MatrixXd avg = shift_rows(n);
  avg.row(0).setConstant(1.0 / n);

  Eigen::MatrixXd heavy_ball = shift_rows(n);
  heavy_ball(0, 0) = (1.0 + q.beta) - q.gamma * q.a;
  heavy_ball(0, 1) = -q.beta;

  Eigen::MatrixXd first = shift_rows(n);
  first(0, 0) = contraction;
  first(0, 1) = q.beta;
  if (n > 2) first(0, 2) = -q.beta;

  Eigen::MatrixXd m = first;
  for (int s = 1; s < q.k; ++s) m = heavy_ball * m;
  return {avg * m, q.k};
}

TransitionSystem build_lookahead_system(const QuadraticSpec1D& q, double alpha) {
  q.validate();
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  Eigen::Matrix2d inner = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d step = cm_matrix(q);
  for (int s = 0; s < q.k; ++s) inner = step * inner;

  // State (v, theta, phi). Columns: v and theta feed the inner steps, phi the
  // interpolation; theta and phi coincide at every synchronization.
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 0) = inner(0, 0);
  m(0, 1) = inner(0, 1);
  for (int row = 1; row <= 2; ++row) {
    m(row, 0) = alpha * inner(1, 0);
    m(row, 1) = alpha * inner(1, 1);
    m(row, 2) = 1.0 - alpha;
  }
  return {m, q.k};
}

double spectral_radius(const Eigen::MatrixXd& m) {
  auto echo = [&](const std::string& why) {
    std::ostringstream os;
    os << "spectral_radius: " << why << "; matrix =\n" << m;
    return NumericalError(os.str());
  };
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("spectral_radius needs a square matrix");
  if (!m.allFinite()) throw echo("non-finite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw echo("eigenvalue iteration did not converge");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double rate(const TransitionSystem& system) {
  system.validate();
  const double rho = spectral_radius(system.matrix);
  return system.steps_per_application == 1 ? rho : std::pow(rho, 1.0 / system.steps_per_application);
}

std::string_view to_string(RateMethod m) {
  switch (m) {
    case RateMethod::Cm: return "cm";
    case RateMethod::Lookahead: return "lookahead";
    case RateMethod::Lookaround: return "lookaround_hist_avg";
  }
  return "unknown";
}

RateMethod parse_rate_method(std::string_view name) {
  if (name == "cm") return RateMethod::Cm;
  if (name == "lookahead") return RateMethod::Lookahead;
  if (name == "lookaround" || name == "lookaround_hist_avg") return RateMethod::Lookaround;
  throw std::invalid_argument("unknown rate method '" + std::string(name) + "'");
}

double method_rate(RateMethod method, const QuadraticSpec1D& q, double alpha) {
  switch (method) {
    case RateMethod::Cm: return cm_rate(q);
    case RateMethod::Lookahead: return rate(build_lookahead_system(q, alpha));
    case RateMethod::Lookaround: return rate(build_lookaround_system(q));
  }
  throw std::logic_error("unreachable");
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (points < 2 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_grid needs 0 < lo < hi, points >= 2");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (points - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<SweepRow> rate_sweep(const SweepOptions& opts) {
  for (double kappa : opts.kappas) {
    if (!(kappa >= 1.0)) throw DomainError("rate_sweep: every kappa must be >= 1");
  }
  const std::size_t per_kappa = opts.methods.size();
  std::vector<SweepRow> rows(opts.kappas.size() * per_kappa);

  auto run_kappa = [&](std::size_t ki) {
    const double kappa = opts.kappas[ki];
    // The grid floor drops below gamma_min when 2/kappa itself is smaller.
    const double hi = 2.0 / kappa;
    const std::vector<double> gammas = log_grid(std::min(opts.gamma_min, 1e-3 * hi), hi, opts.gamma_points);
    for (std::size_t mi = 0; mi < per_kappa; ++mi) {
      SweepRow best{kappa, opts.methods[mi], std::numeric_limits<double>::infinity(), 0.0};
      for (double gamma : gammas) {
        double worst = 0.0;
        for (double a : {1.0, kappa}) {
          const QuadraticSpec1D q{a, gamma, opts.beta, opts.k, kappa};
          worst = std::max(worst, method_rate(opts.methods[mi], q, opts.alpha));
        }
        if (worst < best.best_rate) {
          best.best_rate = worst;
          best.best_gamma = gamma;
        }
      }
      rows[ki * per_kappa + mi] = best;
    }
  };

  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(opts.kappas.size())));
  if (workers == 1) {
    for (std::size_t ki = 0; ki < opts.kappas.size(); ++ki) run_kappa(ki);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t ki = next++; ki < opts.kappas.size(); ki = next++) run_kappa(ki);
      });
    }
  }
  return rows;
}

}  // namespace lookaround::conv
