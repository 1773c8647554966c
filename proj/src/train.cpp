#include "lookaround/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lookaround/rng.hpp"

namespace lookaround::nn {

std::string_view to_string(TrainMethod m) {
  switch (m) {
    case TrainMethod::Sgd: return "sgd";
    case TrainMethod::Lookahead: return "lookahead";
    case TrainMethod::Lookaround: return "lookaround";
  }
  return "unknown";
}

TrainMethod parse_train_method(std::string_view name) {
  if (name == "sgd") return TrainMethod::Sgd;
  if (name == "lookahead") return TrainMethod::Lookahead;
  if (name == "lookaround") return TrainMethod::Lookaround;
  throw std::invalid_argument("unknown training method '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::Piecewise: return "piecewise";
    case ScheduleKind::Cosine: return "cosine";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "piecewise") return ScheduleKind::Piecewise;
  if (name == "cosine") return ScheduleKind::Cosine;
  throw std::invalid_argument("unknown schedule '" + std::string(name) + "'");
}

double Schedule::lr_at(double base_lr, long step, long total) const {
  const double frac = total > 0 ? static_cast<double>(step) / static_cast<double>(total) : 0.0;
  switch (kind) {
    case ScheduleKind::Constant:
      return base_lr;
    case ScheduleKind::Piecewise: {
      double lr = base_lr;
      for (double m : milestones) {
        if (frac >= m) lr *= factor;
      }
      return lr;
    }
    case ScheduleKind::Cosine:
      return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * frac));
  }
  return base_lr;
}

namespace {

/// Sequential minibatches over one shuffle per epoch. `lane` 0 is the shared
/// order; other lanes give replicas their own order.
class BatchStream {
 public:
  BatchStream(const std::vector<Example>& data, int batch_size, std::uint64_t seed, std::uint64_t lane)
      : data_(data), batch_(std::min<std::size_t>(static_cast<std::size_t>(batch_size), data.size())),
        seed_(seed), lane_(lane), order_(data.size()) {
    reshuffle();
  }

  Minibatch next() {
    if (pos_ + batch_ > order_.size()) {
      ++epoch_;
      reshuffle();
    }
    Minibatch b;
    b.examples.reserve(batch_);
    b.indices.reserve(batch_);
    for (std::size_t i = 0; i < batch_; ++i) {
      const std::size_t idx = order_[pos_ + i];
      b.examples.push_back(data_[idx]);
      b.indices.push_back(idx);
    }
    pos_ += batch_;
    return b;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng rng = make_rng(seed_, "shuffle", {epoch_, lane_});
    std::shuffle(order_.begin(), order_.end(), rng);
    pos_ = 0;
  }

  const std::vector<Example>& data_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t lane_;
  std::uint64_t epoch_ = 0;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

double l2_distance(const ParamVector& x, const ParamVector& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

double max_pairwise(const std::vector<ParamVector>& xs) {
  double m = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) m = std::max(m, l2_distance(xs[i], xs[j]));
  return m;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (cfg.eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (cfg.inner == optim::InnerKind::Momentum && !(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
}

optim::InnerOptimizer make_inner(const TrainConfig& cfg, std::size_t dim) {
  return cfg.inner == optim::InnerKind::Sgd ? optim::InnerOptimizer::sgd(cfg.lr)
                                            : optim::InnerOptimizer::cm(cfg.lr, cfg.momentum, dim);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

RunLog train(const TrainConfig& cfg, const Dataset& dataset, std::span<const AugmentationSpec> augs_in) {
  validate(cfg);
  if (dataset.train.empty() || dataset.test.empty()) throw std::invalid_argument("dataset has an empty split");
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };

  RunLog log;
  log.config = cfg;
  log.widths = architecture(dataset.input_dim, cfg.hidden, dataset.num_classes);
  log.augs.assign(augs_in.begin(), augs_in.end());
  if (log.augs.empty()) log.augs.push_back(AugmentationSpec::identity());

  const MlpObjective objective(log.widths);
  Rng init_rng = make_rng(cfg.seed, "init");
  const ParamVector init = MLP::random(log.widths, init_rng).flatten();
  const auto& test = dataset.test;
  const long rounds = (cfg.steps + cfg.k - 1) / cfg.k;

  auto steps_in_round = [&](long r) { return std::min<long>(cfg.k, cfg.steps - r * cfg.k); };
  auto should_eval = [&](long r) { return (r + 1) % cfg.eval_every == 0 || r + 1 == rounds; };

  if (cfg.method == TrainMethod::Lookaround) {
    optim::LookaroundConfig la = optim::LookaroundConfig::create(make_inner(cfg, init.size()), cfg.k, log.augs, init,
                                                                 cfg.seed);
    la.carry_velocity = cfg.carry_velocity;
    la.parallel = cfg.parallel;
    std::vector<BatchStream> streams;
    const std::size_t lanes = cfg.independent_batches ? la.d() : 1;
    for (std::size_t j = 0; j < lanes; ++j) {
      streams.emplace_back(dataset.train, cfg.batch_size, cfg.seed, cfg.independent_batches ? j + 1 : 0);
    }
    long global = 0;
    for (long r = 0; r < rounds; ++r) {
      RoundRecord rec;
      rec.round = r + 1;
      rec.lr = cfg.schedule.lr_at(cfg.lr, global, cfg.steps);
      std::vector<double> loss_sum(la.d(), 0.0);
      const long n_steps = steps_in_round(r);
      for (long s = 0; s < n_steps; ++s, ++global) {
        la.set_learning_rate(cfg.schedule.lr_at(cfg.lr, global, cfg.steps));
        std::vector<double> losses;
        if (cfg.independent_batches) {
          std::vector<Minibatch> per;
          for (BatchStream& bs : streams) per.push_back(bs.next());
          losses = optim::around_step(la, objective, per);
        } else {
          losses = optim::around_step(la, objective, streams.front().next());
        }
        for (std::size_t j = 0; j < losses.size(); ++j) loss_sum[j] += losses[j];
      }
      for (double& l : loss_sum) l /= static_cast<double>(n_steps);
      rec.train_loss = std::move(loss_sum);
      const bool eval = should_eval(r);
      if (eval) {
        for (const ParamVector& rep : la.replicas) rec.replica_acc.push_back(accuracy(log.widths, rep, test));
        rec.max_pairwise_distance = max_pairwise(la.replicas);
      }
      if (r + 1 == rounds) log.last_replicas = la.replicas;
      optim::average_step(la);
      if (eval) {
        rec.mean_acc = accuracy(log.widths, la.phi, test);
        rec.mean_test_loss = mean_loss(log.widths, la.phi, test);
        rec.wall_seconds = elapsed();
        log.records.push_back(std::move(rec));
      }
    }
    log.final_params = la.phi;
  } else if (cfg.method == TrainMethod::Sgd) {
    optim::InnerOptimizer inner = make_inner(cfg, init.size());
    const AugmentationSpec& aug = log.augs.front();
    BatchStream stream(dataset.train, cfg.batch_size, cfg.seed, 0);
    ParamVector theta = init;
    long global = 0;
    for (long r = 0; r < rounds; ++r) {
      RoundRecord rec;
      rec.round = r + 1;
      rec.lr = cfg.schedule.lr_at(cfg.lr, global, cfg.steps);
      double loss_sum = 0.0;
      const long n_steps = steps_in_round(r);
      for (long s = 0; s < n_steps; ++s, ++global) {
        inner.lr = cfg.schedule.lr_at(cfg.lr, global, cfg.steps);
        const Minibatch batch = stream.next();
        Rng rng = make_rng(stream_key(cfg.seed, "augment",
                                      {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(s), 0, aug.stream}));
        const Minibatch view = apply_augmentation(aug, batch, rng);
        LossAndGrad lg = objective.evaluate(theta, view);
        theta = optim::inner_step(inner, theta, lg.grad);
        if (!all_finite(theta)) throw std::runtime_error("train: non-finite parameter after step");
        loss_sum += lg.loss;
      }
      if (should_eval(r)) {
        rec.train_loss = {loss_sum / static_cast<double>(n_steps)};
        rec.mean_acc = accuracy(log.widths, theta, test);
        rec.replica_acc = {rec.mean_acc};
        rec.mean_test_loss = mean_loss(log.widths, theta, test);
        rec.wall_seconds = elapsed();
        log.records.push_back(std::move(rec));
      }
    }
    log.final_params = theta;
    log.last_replicas = {theta};
  } else {
    optim::LookaheadConfig la = optim::LookaheadConfig::create(make_inner(cfg, init.size()), cfg.k, cfg.alpha, init);
    const AugmentationSpec& aug = log.augs.front();
    BatchStream stream(dataset.train, cfg.batch_size, cfg.seed, 0);
    long global = 0;
    for (long r = 0; r < rounds; ++r) {
      RoundRecord rec;
      rec.round = r + 1;
      rec.lr = cfg.schedule.lr_at(cfg.lr, global, cfg.steps);
      la.inner.lr = rec.lr;
      const long n_steps = steps_in_round(r);
      la.k = static_cast<int>(n_steps);
      std::vector<Minibatch> batches;
      for (long s = 0; s < n_steps; ++s, ++global) {
        Rng rng = make_rng(stream_key(cfg.seed, "augment",
                                      {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(s), 0, aug.stream}));
        batches.push_back(apply_augmentation(aug, stream.next(), rng));
      }
      std::vector<double> losses;
      optim::lookahead_round(la, objective, batches, &losses);
      if (should_eval(r)) {
        rec.train_loss = {mean_of(losses)};
        rec.mean_acc = accuracy(log.widths, la.slow, test);
        rec.replica_acc = {rec.mean_acc};
        rec.mean_test_loss = mean_loss(log.widths, la.slow, test);
        rec.wall_seconds = elapsed();
        log.records.push_back(std::move(rec));
      }
    }
    log.final_params = la.slow;
    log.last_replicas = {la.slow};
  }

  log.final_test_acc = accuracy(log.widths, log.final_params, test);
  log.final_test_loss = mean_loss(log.widths, log.final_params, test);
  return log;
}

double logit_ensemble(std::span<const MLP> models, const Dataset& dataset) {
  if (models.empty()) throw std::invalid_argument("logit_ensemble needs at least one model");
  for (const MLP& m : models) {
    if (m.widths().front() != models.front().widths().front() || m.widths().back() != models.front().widths().back()) {
      throw std::invalid_argument("logit_ensemble members disagree on input/output dimensions");
    }
  }
  std::size_t hits = 0;
  const auto classes = static_cast<std::size_t>(models.front().widths().back());
  for (const Example& ex : dataset.test) {
    std::vector<double> sum(classes, 0.0);
    for (const MLP& m : models) {
      const std::vector<double> z = m.logits(ex.input);
      for (std::size_t c = 0; c < classes; ++c) sum[c] += z[c];
    }
    for (double& z : sum) z /= static_cast<double>(models.size());
    if (std::max_element(sum.begin(), sum.end()) - sum.begin() == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.test.size());
}

MLP posthoc_average(std::span<const MLP> models) {
  if (models.empty()) throw std::invalid_argument("posthoc_average needs at least one model");
  std::vector<ParamVector> flat;
  for (const MLP& m : models) {
    if (m.widths() != models.front().widths()) throw std::invalid_argument("posthoc_average: architecture mismatch");
    flat.push_back(m.params());
  }
  return MLP(models.front().widths(), optim::uniform_mean(flat));
}

}  // namespace lookaround::nn
