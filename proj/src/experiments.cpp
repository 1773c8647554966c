#include "lookaround/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <mutex>
#include <numeric>
#include <optional>

#include "lookaround/mlp.hpp"
#include "lookaround/rng.hpp"

namespace lookaround::nn {

Dataset NnSetup::make_dataset(std::uint64_t seed) const {
  return nn::make_dataset(kind, n_train, n_test, seed, noise);
}

TrainConfig NnSetup::config_for(std::uint64_t seed) const {
  TrainConfig c = train;
  c.seed = seed;
  return c;
}

NnSetup reference_setup() {
  NnSetup s;
  s.kind = DatasetKind::Spirals;
  s.n_train = 150;
  s.n_test = 1000;
  s.train.method = TrainMethod::Lookaround;
  s.train.inner = optim::InnerKind::Sgd;
  s.train.lr = 1.0;
  s.train.schedule.kind = ScheduleKind::Constant;
  s.train.batch_size = 32;
  s.train.steps = 2000;
  s.train.k = 10;
  s.train.hidden = {32, 32};
  s.train.eval_every = 20;
  s.d = 3;
  return s;
}

SeedStats summarize(std::vector<double> values) {
  SeedStats s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  const double n = static_cast<double>(s.values.size());
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
  if (s.values.size() > 1) {
    double ss = 0.0;
    for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

double trend_slope(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "trend_slope");
  if (x.size() < 2) throw std::invalid_argument("trend_slope needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("trend_slope: x values are all equal");
  return sxy / sxx;
}

JobError::JobError(std::uint64_t s, std::string a, const std::string& what)
    : std::runtime_error("run failed (seed=" + std::to_string(s) + ", arm=" + a + "): " + what),
      seed(s),
      arm(std::move(a)) {}

void run_jobs(std::vector<Job>& jobs, int workers) {
  std::vector<std::optional<std::string>> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i].fn();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      } catch (...) {
        errors[i] = "unknown exception";
      }
    }
  };
  const int n = std::clamp<int>(workers, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::future<void>> pool;
  for (int t = 1; t < n; ++t) pool.push_back(std::async(std::launch::async, work));
  work();
  for (auto& f : pool) f.get();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) throw JobError(jobs[i].seed, jobs[i].arm, *errors[i]);
  }
}

RunLog baseline_run(const NnSetup& setup, std::uint64_t seed) {
  TrainConfig c = setup.config_for(seed);
  c.method = TrainMethod::Sgd;
  return train(c, setup.make_dataset(seed), {});
}

std::vector<AugScreen> screen_augmentations(const NnSetup& setup, std::uint64_t seed) {
  const Dataset ds = setup.make_dataset(seed);
  TrainConfig c = setup.config_for(seed);
  c.method = TrainMethod::Sgd;
  const RunLog base = train(c, ds, {});
  const MLP net = base.final_model();
  const double base_acc = accuracy(net, ds.test);

  std::vector<AugScreen> out;
  const std::vector<AugmentationSpec> catalog = augmentation_catalog(setup.kind);
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    Rng rng = make_rng(seed, "screen", {j});
    std::vector<Example> shifted = ds.test;
    for (Example& ex : shifted) ex.input = augment_input(catalog[j], ex.input, rng);
    AugScreen s;
    s.name = catalog[j].name;
    s.baseline_acc = base_acc;
    s.augmented_acc = accuracy(net, shifted);
    s.ok = std::abs(s.augmented_acc - base_acc) < 0.20;
    out.push_back(s);
  }
  return out;
}

const AblationCell& AblationResult::cell(bool da, bool wa) const {
  for (const AblationCell& c : cells) {
    if (c.da == da && c.wa == wa) return c;
  }
  throw std::logic_error("ablation cell missing");
}

bool AblationResult::da_wa_is_max() const {
  const double top = cell(true, true).acc.mean;
  return std::all_of(cells.begin(), cells.end(), [&](const AblationCell& c) { return c.acc.mean <= top; });
}

AblationResult ablation_grid(const NnSetup& setup, std::span<const std::uint64_t> seeds, int workers) {
  if (seeds.size() < 3) throw std::invalid_argument("ablation_grid needs at least 3 seeds");
  const int d = setup.d;
  const std::vector<AugmentationSpec> augs = make_augmentations(setup.kind, d);
  const std::size_t n = seeds.size();
  std::vector<Dataset> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = setup.make_dataset(seeds[i]);

  std::vector<double> plain(n), da_wa(n), noda_wa(n);
  std::vector<std::vector<double>> singles(n, std::vector<double>(static_cast<std::size_t>(d), 0.0));
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = seeds[i];
    jobs.push_back({seed, "sgd", [&, i, seed] {
                      TrainConfig c = setup.config_for(seed);
                      c.method = TrainMethod::Sgd;
                      plain[i] = train(c, data[i], {}).final_test_acc;
                    }});
    // Replica 0 is the identity transform, whose single net is the plain run.
    for (int j = 1; j < d; ++j) {
      jobs.push_back({seed, "single/" + augs[static_cast<std::size_t>(j)].name, [&, i, j, seed] {
                        TrainConfig c = setup.config_for(seed);
                        c.method = TrainMethod::Sgd;
                        const AugmentationSpec one[] = {augs[static_cast<std::size_t>(j)]};
                        singles[i][static_cast<std::size_t>(j)] = train(c, data[i], one).final_test_acc;
                      }});
    }
    jobs.push_back({seed, "lookaround", [&, i, seed] {
                      TrainConfig c = setup.config_for(seed);
                      c.method = TrainMethod::Lookaround;
                      da_wa[i] = train(c, data[i], augs).final_test_acc;
                    }});
    jobs.push_back({seed, "lookaround/identity", [&, i, seed] {
                      TrainConfig c = setup.config_for(seed);
                      c.method = TrainMethod::Lookaround;
                      c.independent_batches = true;
                      noda_wa[i] = train(c, data[i], identity_augmentations(d)).final_test_acc;
                    }});
  }
  run_jobs(jobs, workers);

  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) {
    singles[i][0] = plain[i];
    best[i] = *std::max_element(singles[i].begin(), singles[i].end());
  }
  AblationResult r;
  r.cells[0] = {"noDA-noWA", false, false, summarize(plain)};
  r.cells[1] = {"DA-noWA", true, false, summarize(best)};
  r.cells[2] = {"noDA-WA", false, true, summarize(noda_wa)};
  r.cells[3] = {"DA-WA", true, true, summarize(da_wa)};
  return r;
}

namespace {

std::vector<SweepPoint> lookaround_sweep(const NnSetup& setup, std::span<const int> values,
                                         std::span<const std::uint64_t> seeds, int workers,
                                         const std::function<void(int, TrainConfig&, std::vector<AugmentationSpec>&)>& apply,
                                         const char* label) {
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  std::vector<Dataset> data(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) data[i] = setup.make_dataset(seeds[i]);
  std::vector<SweepPoint> points(values.size());
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < values.size(); ++v) {
    points[v].value = values[v];
    points[v].logs.resize(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      jobs.push_back({seeds[i], std::string(label) + "=" + std::to_string(values[v]), [&, v, i] {
                        TrainConfig c = setup.config_for(seeds[i]);
                        c.method = TrainMethod::Lookaround;
                        std::vector<AugmentationSpec> augs = make_augmentations(setup.kind, setup.d);
                        apply(values[v], c, augs);
                        points[v].logs[i] = train(c, data[i], augs);
                      }});
    }
  }
  run_jobs(jobs, workers);
  for (SweepPoint& p : points) {
    std::vector<double> accs;
    for (const RunLog& l : p.logs) accs.push_back(l.final_test_acc);
    p.acc = summarize(std::move(accs));
  }
  return points;
}

}  // namespace

std::vector<SweepPoint> sweep_d(const NnSetup& setup, std::span<const int> d_values,
                                std::span<const std::uint64_t> seeds, int workers) {
  for (int d : d_values) make_augmentations(setup.kind, d);  // range check before any work
  return lookaround_sweep(
      setup, d_values, seeds, workers,
      [&](int d, TrainConfig&, std::vector<AugmentationSpec>& augs) { augs = make_augmentations(setup.kind, d); },
      "d");
}

std::vector<SweepPoint> sweep_k(const NnSetup& setup, std::span<const int> k_values,
                                std::span<const std::uint64_t> seeds, int workers) {
  const int epoch = std::max(1, static_cast<int>(setup.n_train) / std::max(1, setup.train.batch_size));
  return lookaround_sweep(
      setup, k_values, seeds, workers,
      [epoch](int k, TrainConfig& c, std::vector<AugmentationSpec>&) {
        c.k = k > 0 ? k : epoch;
        c.eval_every = 1;
      },
      "k");
}

double sweep_slope(const std::vector<SweepPoint>& points) {
  std::vector<double> x, y;
  for (const SweepPoint& p : points) {
    x.push_back(static_cast<double>(p.value));
    y.push_back(p.acc.mean);
  }
  return trend_slope(x, y);
}

CollapseResult soups_collapse(const NnSetup& setup, std::uint64_t seed, long long_steps, double small_lr,
                              int workers) {
  const Dataset ds = setup.make_dataset(seed);
  RunLog a, b;
  CollapseResult r;
  std::vector<Job> jobs;
  for (std::uint64_t m = 0; m < 2; ++m) {
    jobs.push_back({seed, m == 0 ? "soup/a" : "soup/b", [&, m] {
                      TrainConfig c = setup.config_for(stream_key(seed, "soup", {m}));
                      c.method = TrainMethod::Sgd;
                      c.steps = long_steps;
                      c.eval_every = static_cast<int>(std::max<long>(1, long_steps));
                      (m == 0 ? a : b) = train(c, ds, {});
                    }});
  }
  jobs.push_back({seed, "lookaround/small-lr", [&] {
                    TrainConfig c = setup.config_for(seed);
                    c.method = TrainMethod::Lookaround;
                    c.lr = small_lr;
                    c.steps = long_steps;
                    c.eval_every = 1;
                    r.lookaround = train(c, ds, make_augmentations(setup.kind, setup.d));
                  }});
  run_jobs(jobs, workers);

  r.acc_a = a.final_test_acc;
  r.acc_b = b.final_test_acc;
  const MLP models[] = {a.final_model(), b.final_model()};
  r.acc_averaged = accuracy(posthoc_average(models), ds.test);
  r.drop = std::min(r.acc_a, r.acc_b) - r.acc_averaged;

  std::size_t above = 0;
  for (const RoundRecord& rec : r.lookaround.records) {
    const double mean_rep = std::accumulate(rec.replica_acc.begin(), rec.replica_acc.end(), 0.0) /
                            static_cast<double>(rec.replica_acc.size());
    const double gap = std::abs(rec.mean_acc - mean_rep);
    r.sync_gaps.push_back(gap);
    r.max_sync_gap = std::max(r.max_sync_gap, gap);
    if (rec.mean_acc >= *std::min_element(rec.replica_acc.begin(), rec.replica_acc.end())) ++above;
  }
  if (!r.lookaround.records.empty()) {
    r.mean_above_min_fraction = static_cast<double>(above) / static_cast<double>(r.lookaround.records.size());
  }
  return r;
}

LandscapeRegime landscape_run(const NnSetup& setup, std::uint64_t seed, double lr, int k, int resolution,
                              double margin, int workers) {
  const Dataset ds = setup.make_dataset(seed);
  TrainConfig c = setup.config_for(seed);
  c.method = TrainMethod::Lookaround;
  c.lr = lr;
  c.k = k;
  c.eval_every = static_cast<int>(c.steps);
  const RunLog log = train(c, ds, make_augmentations(setup.kind, 3));
  const std::vector<ParamVector>& w = log.last_replicas;

  LandscapeRegime out;
  out.lr = lr;
  out.k = k;
  out.proj = plane_projection(w[0], w[1], w[2]);
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    out.corners[j] = plane_coords(out.proj, w[j]);
    out.corner_loss[j] = mean_loss(log.widths, plane_point(out.proj, out.corners[j].x, out.corners[j].y), ds.test);
    x_lo = std::min(x_lo, out.corners[j].x);
    x_hi = std::max(x_hi, out.corners[j].x);
    y_lo = std::min(y_lo, out.corners[j].y);
    y_hi = std::max(y_hi, out.corners[j].y);
    out.mean_x += out.corners[j].x / 3.0;
    out.mean_y += out.corners[j].y / 3.0;
  }
  out.mean_loss = mean_loss(log.widths, plane_point(out.proj, out.mean_x, out.mean_y), ds.test);
  out.min_corner_loss = *std::min_element(out.corner_loss.begin(), out.corner_loss.end());
  out.mean_below_min = out.mean_loss <= out.min_corner_loss;

  // Symmetric around the origin so the (0, 0) node is w_v itself.
  const double span = std::max({x_hi - x_lo, y_hi - y_lo, 1e-12});
  const double reach = std::max({std::abs(x_lo), std::abs(x_hi), std::abs(y_lo), std::abs(y_hi)}) + margin * span;
  const int res = resolution % 2 == 0 ? resolution + 1 : resolution;
  out.grid = plane_grid_eval(out.proj, log.widths, ds.test, -reach, reach, -reach, reach, res, workers);
  return out;
}

}  // namespace lookaround::nn
