#include "lookaround/optim.hpp"

#include <future>
#include <stdexcept>
#include <string>

#include "lookaround/rng.hpp"

namespace lookaround::optim {

InnerOptimizer InnerOptimizer::sgd(double lr) {
  InnerOptimizer s;
  s.kind = InnerKind::Sgd;
  s.lr = lr;
  s.validate();
  return s;
}

InnerOptimizer InnerOptimizer::cm(double lr, double momentum, std::size_t dim) {
  InnerOptimizer s;
  s.kind = InnerKind::Momentum;
  s.lr = lr;
  s.momentum = momentum;
  s.velocity.assign(dim, 0.0);
  s.validate();
  return s;
}

void InnerOptimizer::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (kind == InnerKind::Momentum && !(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
}

ParamVector sgd_step(const InnerOptimizer& state, std::span<const double> params, std::span<const double> grad) {
  require_same_size(params.size(), grad.size(), "sgd_step");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - state.lr * grad[i];
  return out;
}

ParamVector cm_step(InnerOptimizer& state, std::span<const double> params, std::span<const double> grad) {
  require_same_size(params.size(), grad.size(), "cm_step");
  require_same_size(params.size(), state.velocity.size(), "cm_step velocity");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.velocity[i] = state.momentum * state.velocity[i] - grad[i];
    out[i] = params[i] + state.lr * state.velocity[i];
  }
  return out;
}

ParamVector inner_step(InnerOptimizer& state, std::span<const double> params, std::span<const double> grad) {
  return state.kind == InnerKind::Sgd ? sgd_step(state, params, grad) : cm_step(state, params, grad);
}

namespace {

void check_finite(std::span<const double> v, const char* where) {
  if (!all_finite(v)) throw std::runtime_error(std::string(where) + ": non-finite parameter after step");
}

}  // namespace

LookaheadConfig LookaheadConfig::create(InnerOptimizer inner, int k, double alpha, ParamVector init) {
  LookaheadConfig cfg;
  if (inner.kind == InnerKind::Momentum && inner.velocity.size() != init.size()) {
    inner.velocity.assign(init.size(), 0.0);
  }
  cfg.inner = std::move(inner);
  cfg.k = k;
  cfg.alpha = alpha;
  cfg.slow = std::move(init);
  cfg.validate();
  return cfg;
}

void LookaheadConfig::validate() const {
  inner.validate();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (slow.empty()) throw std::invalid_argument("slow weights not initialized");
}

ParamVector lookahead_round(LookaheadConfig& cfg, const Objective& objective, std::span<const Minibatch> batches,
                            std::vector<double>* losses) {
  if (batches.size() < static_cast<std::size_t>(cfg.k)) {
    throw std::invalid_argument("lookahead_round needs k=" + std::to_string(cfg.k) + " batches, got " +
                                std::to_string(batches.size()));
  }
  require_same_size(cfg.slow.size(), objective.dimension(), "lookahead_round");
  ParamVector fast = cfg.slow;
  for (int s = 0; s < cfg.k; ++s) {
    LossAndGrad lg = objective.evaluate(fast, batches[static_cast<std::size_t>(s)]);
    fast = inner_step(cfg.inner, fast, lg.grad);
    check_finite(fast, "lookahead_round");
    if (losses) losses->push_back(lg.loss);
  }
  const double keep = 1.0 - cfg.alpha;
  for (std::size_t i = 0; i < fast.size(); ++i) cfg.slow[i] = keep * cfg.slow[i] + cfg.alpha * fast[i];
  return cfg.slow;
}

LookaroundConfig LookaroundConfig::create(InnerOptimizer inner, int k, std::vector<AugmentationSpec> augs,
                                          ParamVector init, std::uint64_t seed) {
  LookaroundConfig cfg;
  if (inner.kind == InnerKind::Momentum) inner.velocity.assign(init.size(), 0.0);
  cfg.inner = std::move(inner);
  cfg.k = k;
  cfg.augs = std::move(augs);
  cfg.seed = seed;
  cfg.replicas.assign(cfg.augs.size(), init);
  cfg.inner_states.assign(cfg.augs.size(), cfg.inner);
  cfg.phi = std::move(init);
  cfg.validate();
  return cfg;
}

void LookaroundConfig::set_learning_rate(double lr) {
  inner.lr = lr;
  for (InnerOptimizer& s : inner_states) s.lr = lr;
}

void LookaroundConfig::validate() const {
  inner.validate();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (augs.empty()) throw std::invalid_argument("Lookaround needs d >= 1 augmentations");
  if (replicas.size() != augs.size() || inner_states.size() != augs.size()) {
    throw std::invalid_argument("Lookaround needs exactly d replicas and d inner states");
  }
  for (const ParamVector& r : replicas) require_same_size(r.size(), phi.size(), "Lookaround replica");
}

std::uint64_t augmentation_stream(const LookaroundConfig& cfg, std::size_t replica) {
  return stream_key(cfg.seed, "augment", {cfg.round, cfg.step, replica, cfg.augs[replica].stream});
}

namespace {

double advance_replica(LookaroundConfig& cfg, const Objective& objective, const Minibatch& batch, std::size_t j) {
  Rng rng = make_rng(augmentation_stream(cfg, j));
  const Minibatch view = apply_augmentation(cfg.augs[j], batch, rng);
  if (view.size() != batch.size()) {
    throw std::logic_error("augmentation '" + cfg.augs[j].name + "' changed the minibatch size");
  }
  LossAndGrad lg = objective.evaluate(cfg.replicas[j], view);
  cfg.replicas[j] = inner_step(cfg.inner_states[j], cfg.replicas[j], lg.grad);
  check_finite(cfg.replicas[j], "around_step");
  return lg.loss;
}

template <typename BatchFor>
std::vector<double> around_step_impl(LookaroundConfig& cfg, const Objective& objective, BatchFor&& batch_for) {
  require_same_size(cfg.phi.size(), objective.dimension(), "around_step");
  const std::size_t d = cfg.d();
  std::vector<double> losses(d);
  if (cfg.parallel && d > 1) {
    // Each replica owns its parameter copy and inner state; the streams are
    // keyed by replica index, so scheduling order cannot change the result.
    std::vector<std::future<double>> jobs;
    jobs.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      jobs.push_back(std::async(std::launch::async,
                                [&, j] { return advance_replica(cfg, objective, batch_for(j), j); }));
    }
    for (std::size_t j = 0; j < d; ++j) losses[j] = jobs[j].get();
  } else {
    for (std::size_t j = 0; j < d; ++j) losses[j] = advance_replica(cfg, objective, batch_for(j), j);
  }
  ++cfg.step;
  return losses;
}

}  // namespace

std::vector<double> around_step(LookaroundConfig& cfg, const Objective& objective, const Minibatch& batch) {
  validate_minibatch(batch);
  return around_step_impl(cfg, objective, [&](std::size_t) -> const Minibatch& { return batch; });
}

std::vector<double> around_step(LookaroundConfig& cfg, const Objective& objective,
                                std::span<const Minibatch> per_replica_batches) {
  require_same_size(per_replica_batches.size(), cfg.d(), "around_step batches");
  for (const Minibatch& b : per_replica_batches) validate_minibatch(b);
  return around_step_impl(cfg, objective,
                          [&](std::size_t j) -> const Minibatch& { return per_replica_batches[j]; });
}

ParamVector uniform_mean(std::span<const ParamVector> xs) {
  if (xs.empty()) throw std::invalid_argument("uniform_mean of an empty set");
  const ParamVector& first = xs.front();
  const auto d = static_cast<double>(xs.size());
  ParamVector out(first.size());
  for (const ParamVector& x : xs) require_same_size(x.size(), first.size(), "uniform_mean");
  for (std::size_t i = 0; i < first.size(); ++i) {
    double dev = 0.0;
    for (std::size_t j = 1; j < xs.size(); ++j) dev += xs[j][i] - first[i];
    out[i] = first[i] + dev / d;
  }
  return out;
}

ParamVector average_step(LookaroundConfig& cfg) {
  cfg.phi = uniform_mean(cfg.replicas);
  for (ParamVector& r : cfg.replicas) r = cfg.phi;
  if (cfg.inner.kind == InnerKind::Momentum) {
    ParamVector v(cfg.phi.size(), 0.0);
    if (cfg.carry_velocity) {
      std::vector<ParamVector> vs;
      vs.reserve(cfg.d());
      for (const InnerOptimizer& s : cfg.inner_states) vs.push_back(s.velocity);
      v = uniform_mean(vs);
    }
    for (InnerOptimizer& s : cfg.inner_states) s.velocity = v;
  }
  ++cfg.round;
  cfg.step = 0;
  return cfg.phi;
}

ParamVector lookaround_round(LookaroundConfig& cfg, const Objective& objective, std::span<const Minibatch> batches) {
  if (batches.size() < static_cast<std::size_t>(cfg.k)) {
    throw std::invalid_argument("lookaround_round needs k=" + std::to_string(cfg.k) + " batches, got " +
                                std::to_string(batches.size()));
  }
  for (int s = 0; s < cfg.k; ++s) around_step(cfg, objective, batches[static_cast<std::size_t>(s)]);
  return average_step(cfg);
}

}  // namespace lookaround::optim
