#include "lookaround/quad.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lookaround/rng.hpp"

namespace lookaround::quad {

double DiagNoisyQuadratic::l_max() const {
  if (a.empty()) throw std::invalid_argument("empty quadratic");
  return *std::max_element(a.begin(), a.end());
}

void DiagNoisyQuadratic::validate() const {
  if (a.empty()) throw std::invalid_argument("quadratic needs at least one coordinate");
  require_same_size(a.size(), sigma2.size(), "DiagNoisyQuadratic a/sigma2");
  for (double ai : a) {
    if (!(ai > 0.0) || !std::isfinite(ai)) throw std::invalid_argument("curvatures a_i must be finite and > 0");
  }
  for (double s : sigma2) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("noise variances must be finite and >= 0");
  }
}

MomentState MomentState::point(std::vector<double> theta0) {
  MomentState s;
  s.var.assign(theta0.size(), 0.0);
  s.mean = std::move(theta0);
  return s;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Sgd: return "sgd";
    case Method::Lookahead: return "lookahead";
    case Method::Lookaround: return "lookaround";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "sgd") return Method::Sgd;
  if (name == "lookahead") return Method::Lookahead;
  if (name == "lookaround") return Method::Lookaround;
  throw std::invalid_argument("unknown quadratic method '" + std::string(name) + "'");
}

std::string_view to_string(NoiseMode mode) { return mode == NoiseMode::Independent ? "independent" : "shared"; }

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "independent") return NoiseMode::Independent;
  if (name == "shared") return NoiseMode::Shared;
  throw std::invalid_argument("unknown noise mode '" + std::string(name) + "'");
}

void MethodSpec::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
}

namespace {

void require_moments(const DiagNoisyQuadratic& m, const MomentState& s) {
  require_same_size(m.dim(), s.mean.size(), "moment mean");
  require_same_size(m.dim(), s.var.size(), "moment var");
}

/// gamma^2 a^2 sigma^2 (1 - q^{2k}) / (1 - q^2): variance injected by k SGD steps.
double noise_over_k_steps(double a, double sigma2, double gamma, int k) {
  const double q = 1.0 - gamma * a;
  const double denom = 1.0 - q * q;
  if (denom == 0.0) {
    std::ostringstream os;
    os << "gamma * a = " << gamma * a << " makes 1 - (1 - gamma a)^2 vanish";
    throw DomainError(os.str());
  }
  return gamma * gamma * a * a * sigma2 * (1.0 - std::pow(q, 2 * k)) / denom;
}

}  // namespace

double expected_loss(const DiagNoisyQuadratic& m, const MomentState& s) {
  require_moments(m, s);
  double total = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    total += m.a[i] * (s.mean[i] * s.mean[i] + s.var[i] + m.sigma2[i]);
  }
  return 0.5 * total;
}

MomentState sgd_moment_step(const DiagNoisyQuadratic& m, const MomentState& s, double gamma) {
  require_moments(m, s);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  MomentState out = s;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double q = 1.0 - gamma * m.a[i];
    out.mean[i] = q * s.mean[i];
    out.var[i] = q * q * s.var[i] + gamma * gamma * m.a[i] * m.a[i] * m.sigma2[i];
  }
  return out;
}

MomentState lookaround_moment_round(const DiagNoisyQuadratic& m, const MomentState& s, double gamma, int k, int d) {
  require_moments(m, s);
  MomentState out = s;
  const double carry = static_cast<double>(d - 1) / static_cast<double>(d);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double qk = std::pow(1.0 - gamma * m.a[i], k);
    out.mean[i] = qk * s.mean[i];
    out.var[i] = carry * qk * qk * s.var[i] + noise_over_k_steps(m.a[i], m.sigma2[i], gamma, k) / d;
  }
  return out;
}

MomentState lookaround_moment_round_independent(const DiagNoisyQuadratic& m, const MomentState& s, double gamma,
                                                int k, int d) {
  require_moments(m, s);
  MomentState out = s;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double qk = std::pow(1.0 - gamma * m.a[i], k);
    out.mean[i] = qk * s.mean[i];
    out.var[i] = qk * qk * s.var[i] + noise_over_k_steps(m.a[i], m.sigma2[i], gamma, k) / d;
  }
  return out;
}

MomentState lookahead_moment_round(const DiagNoisyQuadratic& m, const MomentState& s, double gamma, int k,
                                   double alpha) {
  require_moments(m, s);
  MomentState out = s;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double qk = std::pow(1.0 - gamma * m.a[i], k);
    const double contraction = (1.0 - alpha) + alpha * qk;
    out.mean[i] = contraction * s.mean[i];
    out.var[i] = contraction * contraction * s.var[i] +
                 alpha * alpha * noise_over_k_steps(m.a[i], m.sigma2[i], gamma, k);
  }
  return out;
}

MomentState moment_round(const DiagNoisyQuadratic& m, const MomentState& s, const MethodSpec& spec) {
  switch (spec.variant) {
    case Method::Sgd: return sgd_moment_step(m, s, spec.gamma);
    case Method::Lookahead: return lookahead_moment_round(m, s, spec.gamma, spec.k, spec.alpha);
    case Method::Lookaround: return lookaround_moment_round(m, s, spec.gamma, spec.k, spec.d);
  }
  throw std::logic_error("unreachable");
}

void require_fixed_point_range(const DiagNoisyQuadratic& m, double gamma) {
  m.validate();
  const double bound = 1.0 / m.l_max();
  if (!(gamma > 0.0 && gamma < bound)) {
    std::ostringstream os;
    os << "gamma = " << gamma << " violates 0 < gamma < 1/L_max = " << bound;
    throw DomainError(os.str());
  }
}

namespace {

double sgd_fixed(double a, double sigma2, double gamma) {
  const double q = 1.0 - gamma * a;
  return gamma * gamma * a * a * sigma2 / (1.0 - q * q);
}

double lookahead_coefficient(double a, double gamma, int k, double alpha) {
  const double b = std::pow(1.0 - gamma * a, k);
  const double num = alpha * alpha * (1.0 - b * b);
  return num / (num + 2.0 * alpha * (1.0 - alpha) * (1.0 - b));
}

double lookaround_over_lookahead(double a, double gamma, int k, int d, double alpha) {
  const double b = std::pow(1.0 - gamma * a, k);
  const double num = alpha * alpha * (1.0 - b * b) + 2.0 * alpha * (1.0 - alpha) * (1.0 - b);
  return num / (alpha * alpha * (d - (d - 1) * b * b));
}

}  // namespace

std::vector<double> fixed_point(const DiagNoisyQuadratic& m, const MethodSpec& spec) {
  spec.validate();
  require_fixed_point_range(m, spec.gamma);
  std::vector<double> out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double v_sgd = sgd_fixed(m.a[i], m.sigma2[i], spec.gamma);
    switch (spec.variant) {
      case Method::Sgd:
        out[i] = v_sgd;
        break;
      case Method::Lookahead:
        out[i] = lookahead_coefficient(m.a[i], spec.gamma, spec.k, spec.alpha) * v_sgd;
        break;
      case Method::Lookaround: {
        const double v_la = lookahead_coefficient(m.a[i], spec.gamma, spec.k, spec.alpha) * v_sgd;
        out[i] = lookaround_over_lookahead(m.a[i], spec.gamma, spec.k, spec.d, spec.alpha) * v_la;
        break;
      }
    }
  }
  return out;
}

std::vector<double> lookaround_fixed_point_direct(const DiagNoisyQuadratic& m, double gamma, int k, int d) {
  require_fixed_point_range(m, gamma);
  if (k < 1 || d < 1) throw std::invalid_argument("k and d must be >= 1");
  std::vector<double> out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double b2 = std::pow(1.0 - gamma * m.a[i], 2 * k);
    out[i] = (1.0 - b2) / (d - (d - 1) * b2) * sgd_fixed(m.a[i], m.sigma2[i], gamma);
  }
  return out;
}

std::vector<double> lookaround_fixed_point_independent(const DiagNoisyQuadratic& m, double gamma, int d) {
  require_fixed_point_range(m, gamma);
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  std::vector<double> out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) out[i] = sgd_fixed(m.a[i], m.sigma2[i], gamma) / d;
  return out;
}

OrderingReport check_ordering(const DiagNoisyQuadratic& m, double gamma, int k, int d, double alpha) {
  require_fixed_point_range(m, gamma);
  OrderingReport r;
  r.holds = true;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double c1 = lookahead_coefficient(m.a[i], gamma, k, alpha);
    const double c2 = lookaround_over_lookahead(m.a[i], gamma, k, d, alpha);
    r.lookahead_over_sgd.push_back(c1);
    r.lookaround_over_lookahead.push_back(c2);
    // Equality is reached exactly at alpha = 1 or d = 1 up to rounding.
    constexpr double slack = 1e-12;
    if (c1 > 1.0 + slack || c2 > 1.0 + slack) r.holds = false;
  }
  return r;
}

Stationary iterate_to_stationarity(const DiagNoisyQuadratic& m, const MethodSpec& spec, double rel_tol,
                                   long max_rounds) {
  m.validate();
  spec.validate();
  MomentState s = MomentState::point(std::vector<double>(m.dim(), 0.0));
  Stationary out;
  for (long r = 1; r <= max_rounds; ++r) {
    MomentState next = moment_round(m, s, spec);
    bool settled = true;
    for (std::size_t i = 0; i < m.dim(); ++i) {
      const double scale = std::abs(next.var[i]);
      const double change = std::abs(next.var[i] - s.var[i]);
      if (scale == 0.0 ? change != 0.0 : change / scale >= rel_tol) settled = false;
    }
    s = std::move(next);
    out.rounds = r;
    if (settled) {
      out.converged = true;
      break;
    }
  }
  out.var = std::move(s.var);
  return out;
}

std::vector<MomentState> analytic_trajectory(const DiagNoisyQuadratic& m, const MethodSpec& spec,
                                             const std::vector<double>& theta0, long rounds) {
  std::vector<MomentState> out;
  out.reserve(static_cast<std::size_t>(rounds) + 1);
  out.push_back(MomentState::point(theta0));
  for (long r = 0; r < rounds; ++r) out.push_back(moment_round(m, out.back(), spec));
  return out;
}

namespace {

/// Running moments for one block of trials: count, mean and sum of squared
/// deviations per (round, coordinate).
struct BlockMoments {
  double n = 0.0;
  std::vector<double> mean;
  std::vector<double> m2;
};

BlockMoments merge(const BlockMoments& x, const BlockMoments& y) {
  if (x.n == 0.0) return y;
  if (y.n == 0.0) return x;
  BlockMoments out;
  out.n = x.n + y.n;
  out.mean.resize(x.mean.size());
  out.m2.resize(x.m2.size());
  for (std::size_t i = 0; i < x.mean.size(); ++i) {
    const double delta = y.mean[i] - x.mean[i];
    out.mean[i] = x.mean[i] + delta * y.n / out.n;
    out.m2[i] = x.m2[i] + y.m2[i] + delta * delta * x.n * y.n / out.n;
  }
  return out;
}

constexpr long kTrialsPerBlock = 512;

class TrialSimulator {
 public:
  TrialSimulator(const DiagNoisyQuadratic& m, const MethodSpec& spec, const MonteCarloOptions& opts)
      : m_(m), spec_(spec), opts_(opts) {}

  /// Fills `traj[(r * dim) + i]` for r = 0..rounds.
  void run(long trial, std::vector<double>& traj) const {
    const std::size_t n = m_.dim();
    Rng rng = make_rng(opts_.seed, "monte_carlo", {static_cast<std::uint64_t>(trial)});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sd(n);
    for (std::size_t i = 0; i < n; ++i) sd[i] = std::sqrt(m_.sigma2[i]);

    std::vector<double> phi = opts_.theta0;
    std::copy(phi.begin(), phi.end(), traj.begin());

    auto sgd_update = [&](std::vector<double>& theta, const std::vector<double>& c) {
      for (std::size_t i = 0; i < n; ++i) theta[i] -= spec_.gamma * m_.a[i] * (theta[i] - c[i]);
    };
    auto draw = [&](std::vector<double>& c) {
      for (std::size_t i = 0; i < n; ++i) c[i] = sd[i] * normal(rng);
    };

    std::vector<double> c(n);
    const auto d = static_cast<std::size_t>(spec_.d);
    std::vector<std::vector<double>> replicas(d, std::vector<double>(n));
    std::vector<std::vector<double>> noises(d, std::vector<double>(n));

    for (long r = 1; r <= opts_.rounds; ++r) {
      switch (spec_.variant) {
        case Method::Sgd:
          draw(c);
          sgd_update(phi, c);
          break;
        case Method::Lookahead: {
          std::vector<double> fast = phi;
          for (int s = 0; s < spec_.k; ++s) {
            draw(c);
            sgd_update(fast, c);
          }
          for (std::size_t i = 0; i < n; ++i) phi[i] = (1.0 - spec_.alpha) * phi[i] + spec_.alpha * fast[i];
          break;
        }
        case Method::Lookaround: {
          for (auto& rep : replicas) rep = phi;
          for (int s = 0; s < spec_.k; ++s) {
            if (opts_.noise == NoiseMode::Shared) {
              draw(c);
              for (auto& rep : replicas) sgd_update(rep, c);
            } else {
              for (std::size_t j = 0; j < d; ++j) {
                draw(noises[j]);
                sgd_update(replicas[j], noises[j]);
              }
            }
          }
          for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (const auto& rep : replicas) sum += rep[i];
            phi[i] = sum / static_cast<double>(d);
          }
          break;
        }
      }
      std::copy(phi.begin(), phi.end(), traj.begin() + static_cast<std::ptrdiff_t>(r * static_cast<long>(n)));
    }
  }

 private:
  const DiagNoisyQuadratic& m_;
  const MethodSpec& spec_;
  const MonteCarloOptions& opts_;
};

}  // namespace

Trajectory monte_carlo(const DiagNoisyQuadratic& m, const MethodSpec& spec, const MonteCarloOptions& opts_in) {
  m.validate();
  spec.validate();
  if (opts_in.rounds < 1 || opts_in.trials < 1) throw std::invalid_argument("rounds and trials must be >= 1");
  MonteCarloOptions opts = opts_in;
  if (opts.theta0.empty()) opts.theta0.assign(m.dim(), 1.0);
  require_same_size(opts.theta0.size(), m.dim(), "monte_carlo theta0");

  const std::size_t cells = static_cast<std::size_t>(opts.rounds + 1) * m.dim();
  const long n_blocks = (opts.trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<BlockMoments> blocks(static_cast<std::size_t>(n_blocks));
  const TrialSimulator sim(m, spec, opts);

  auto run_block = [&](long b) {
    BlockMoments acc;
    acc.mean.assign(cells, 0.0);
    acc.m2.assign(cells, 0.0);
    std::vector<double> traj(cells);
    const long first = b * kTrialsPerBlock;
    const long last = std::min(opts.trials, first + kTrialsPerBlock);
    for (long t = first; t < last; ++t) {
      sim.run(t, traj);
      acc.n += 1.0;
      for (std::size_t i = 0; i < cells; ++i) {
        const double delta = traj[i] - acc.mean[i];
        acc.mean[i] += delta / acc.n;
        acc.m2[i] += delta * (traj[i] - acc.mean[i]);
      }
    }
    blocks[static_cast<std::size_t>(b)] = std::move(acc);
  };

  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(n_blocks)));
  if (workers == 1) {
    for (long b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::atomic<long> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (long b = next++; b < n_blocks; b = next++) run_block(b);
      });
    }
  }

  while (blocks.size() > 1) {
    std::vector<BlockMoments> level;
    level.reserve((blocks.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < blocks.size(); i += 2) level.push_back(merge(blocks[i], blocks[i + 1]));
    if (blocks.size() % 2 == 1) level.push_back(std::move(blocks.back()));
    blocks = std::move(level);
  }

  const BlockMoments& total = blocks.front();
  Trajectory out;
  out.trials = opts.trials;
  const double denom = total.n > 1.0 ? total.n - 1.0 : 1.0;
  for (long r = 0; r <= opts.rounds; ++r) {
    MomentState s;
    for (std::size_t i = 0; i < m.dim(); ++i) {
      const std::size_t idx = static_cast<std::size_t>(r) * m.dim() + i;
      s.mean.push_back(total.mean[idx]);
      s.var.push_back(total.m2[idx] / denom);
    }
    out.rounds.push_back(std::move(s));
  }
  return out;
}

QuadraticObjective::QuadraticObjective(std::vector<double> a) : a_(std::move(a)) {
  if (a_.empty()) throw std::invalid_argument("QuadraticObjective needs at least one coordinate");
}

LossAndGrad QuadraticObjective::evaluate(std::span<const double> params, const Minibatch& batch) const {
  require_same_size(params.size(), a_.size(), "QuadraticObjective params");
  require_same_size(batch.input_dim(), a_.size(), "QuadraticObjective batch");
  std::vector<double> c(a_.size(), 0.0);
  for (const Example& ex : batch.examples) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += ex.input[i];
  }
  const auto count = static_cast<double>(batch.size());
  LossAndGrad out;
  out.grad.resize(a_.size());
  for (std::size_t i = 0; i < a_.size(); ++i) {
    const double diff = params[i] - c[i] / count;
    out.loss += 0.5 * a_[i] * diff * diff;
    out.grad[i] = a_[i] * diff;
  }
  return out;
}

}  // namespace lookaround::quad
