#include "lookaround/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lookaround/artifacts.hpp"
#include "lookaround/convergence.hpp"
#include "lookaround/rng.hpp"

namespace lookaround::cli {

using json = nlohmann::json;
using io::fmt;
namespace fs = std::filesystem;

nn::NnSetup make_setup(const ExperimentConfig& cfg) {
  nn::NnSetup s;
  s.kind = nn::parse_dataset_kind(cfg.dataset.kind);
  s.n_train = static_cast<std::size_t>(cfg.dataset.n_train);
  s.n_test = static_cast<std::size_t>(cfg.dataset.n_test);
  s.noise = cfg.dataset.noise;
  const TrainSettings& t = cfg.train;
  s.train.method = nn::parse_train_method(t.method);
  s.train.inner = t.inner == "momentum" ? optim::InnerKind::Momentum : optim::InnerKind::Sgd;
  s.train.lr = t.lr;
  s.train.momentum = t.momentum;
  s.train.k = t.k;
  s.train.alpha = t.alpha;
  s.train.batch_size = t.batch_size;
  s.train.steps = t.steps;
  s.train.schedule.kind = nn::parse_schedule_kind(t.schedule.kind);
  s.train.schedule.factor = t.schedule.factor;
  s.train.schedule.milestones = t.schedule.milestones;
  s.train.hidden = t.hidden;
  s.train.carry_velocity = t.carry_velocity;
  s.train.independent_batches = t.independent_batches;
  s.train.eval_every = t.eval_every;
  s.train.seed = cfg.seed;
  s.d = t.d;
  return s;
}

std::vector<QuadCase> sample_quad_cases(const QuadSettings& s, std::uint64_t seed, int count) {
  std::vector<QuadCase> out;
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, "quad/cases", {static_cast<std::uint64_t>(i)});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    QuadCase c;
    const int n = uniform_int(1, s.max_coords);
    const double l_max = std::exp(std::log(0.01) + u(rng) * std::log(1e4));  // L in [0.01, 100]
    for (int j = 0; j < n; ++j) {
      c.model.a.push_back(j == 0 ? l_max : l_max * (0.1 + 0.9 * u(rng)));
      c.model.sigma2.push_back(0.1 + 1.9 * u(rng));
    }
    c.gamma = (0.05 + 0.9 * u(rng)) / l_max;
    c.k = uniform_int(1, s.max_k);
    c.d = uniform_int(1, s.max_d);
    c.alpha = 0.5 + 0.5 * u(rng);
    if (c.alpha >= 1.0) c.alpha = 0.5;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<FixedPointRow> verify_fixed_points(const std::vector<QuadCase>& cases) {
  std::vector<FixedPointRow> rows;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const QuadCase& c = cases[ci];
    for (const quad::Method m : {quad::Method::Sgd, quad::Method::Lookaround}) {
      quad::MethodSpec spec{m, c.gamma, m == quad::Method::Sgd ? 1 : c.k, c.alpha, m == quad::Method::Sgd ? 1 : c.d};
      const std::vector<double> closed = quad::fixed_point(c.model, spec);
      const quad::Stationary st = quad::iterate_to_stationarity(c.model, spec);
      for (std::size_t i = 0; i < closed.size(); ++i) {
        FixedPointRow r;
        r.config = static_cast<int>(ci);
        r.coordinate = static_cast<int>(i);
        r.method = std::string(quad::to_string(m));
        r.closed_form = closed[i];
        r.iterated = st.var[i];
        r.rel_error = std::abs(st.var[i] - closed[i]) / std::abs(closed[i]);
        r.rounds = st.converged ? st.rounds : -1;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

OrderingStudy ordering_study(const std::vector<QuadCase>& cases, std::uint64_t seed) {
  OrderingStudy out;
  for (QuadCase c : cases) {
    c.d = std::max(c.d, 3);
    ++out.sampled;
    if (quad::check_ordering(c.model, c.gamma, c.k, c.d, c.alpha).holds) ++out.holding;
  }
  QuadSettings wide;
  wide.max_k = 50;
  const std::vector<QuadCase> probes = sample_quad_cases(wide, stream_key(seed, "quad/counterexample"), 2000);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    QuadCase c = probes[i];
    c.d = 1;
    Rng rng = make_rng(seed, "quad/counterexample/alpha", {i});
    c.alpha = std::uniform_real_distribution<double>(0.05, 0.5)(rng);
    quad::OrderingReport rep = quad::check_ordering(c.model, c.gamma, c.k, c.d, c.alpha);
    if (!rep.holds) {
      out.found_counterexample = true;
      out.counterexample = c;
      out.counter_report = std::move(rep);
      break;
    }
  }
  return out;
}

std::vector<GapRow> lookaround_gap(const QuadSettings& s, std::uint64_t seed, int workers) {
  quad::DiagNoisyQuadratic m{{s.a.front()}, {s.sigma2.front()}};
  const double v_sgd = quad::fixed_point(m, {quad::Method::Sgd, s.gamma, 1, 0.5, 1}).front();
  std::vector<GapRow> rows;
  for (int d : s.gap_d) {
    for (int k : s.gap_k) {
      quad::MethodSpec spec{quad::Method::Lookaround, s.gamma, k, 0.5, d};
      quad::MonteCarloOptions opt;
      // Enough rounds for q^(2 k R) to vanish at double precision.
      const double q2 = std::pow(1.0 - s.gamma * m.a[0], 2.0);
      opt.rounds = std::max<long>(10, static_cast<long>(std::ceil(40.0 / (-std::log(q2) * k))));
      opt.trials = s.gap_trials;
      opt.noise = quad::NoiseMode::Independent;
      opt.seed = stream_key(seed, "quad/gap", {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(k)});
      opt.theta0 = {0.0};
      opt.workers = workers;
      const quad::Trajectory t = quad::monte_carlo(m, spec, opt);
      GapRow r;
      r.d = d;
      r.k = k;
      r.empirical = t.rounds.back().var[0];
      r.empirical_se = r.empirical * std::sqrt(2.0 / static_cast<double>(opt.trials - 1));
      r.reference = quad::fixed_point(m, spec).front();
      r.independent = quad::lookaround_fixed_point_independent(m, s.gamma, d).front();
      r.sgd = v_sgd;
      r.within_bounds = r.empirical >= 0.8 * v_sgd / d && r.empirical <= 1.05 * v_sgd;
      rows.push_back(r);
    }
  }
  return rows;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Context {
  const ExperimentConfig& cfg;
  fs::path out;
  json summary = json::object();
  std::vector<std::string> violations;
  std::string line;

  void violate(std::string what) { violations.push_back(std::move(what)); }
};

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// --- quadratic experiments -------------------------------------------------

void run_quad_fixed_points(Context& ctx) {
  const QuadSettings& s = ctx.cfg.quad;
  const std::vector<QuadCase> cases = sample_quad_cases(s, ctx.cfg.seed, s.configs);
  const std::vector<FixedPointRow> rows = verify_fixed_points(cases);

  io::CsvTable t({"config", "coordinate", "method", "gamma", "k", "d", "a", "sigma2", "closed_form", "iterated",
                  "rel_error", "rounds"});
  double worst = 0.0;
  for (const FixedPointRow& r : rows) {
    const QuadCase& c = cases[static_cast<std::size_t>(r.config)];
    const auto i = static_cast<std::size_t>(r.coordinate);
    const bool sgd = r.method == "sgd";
    t.add_row({std::to_string(r.config), std::to_string(r.coordinate), r.method, fmt(c.gamma),
               std::to_string(sgd ? 1 : c.k), std::to_string(sgd ? 1 : c.d), fmt(c.model.a[i]), fmt(c.model.sigma2[i]),
               fmt(r.closed_form), fmt(r.iterated), fmt(r.rel_error), std::to_string(r.rounds)});
    worst = std::max(worst, r.rel_error);
    if (!(r.rel_error <= 1e-10)) {
      ctx.violate("fixed point mismatch: config " + std::to_string(r.config) + " coordinate " +
                  std::to_string(r.coordinate) + " " + r.method + " rel_error " + fmt(r.rel_error));
    }
  }
  io::write_csv(ctx.out / "fixed_points.csv", t);

  const OrderingStudy o = ordering_study(cases, ctx.cfg.seed);
  io::CsvTable ot({"case", "gamma", "k", "d", "alpha", "coordinate", "a", "lookahead_over_sgd",
                   "lookaround_over_lookahead", "holds"});
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    QuadCase c = cases[ci];
    c.d = std::max(c.d, 3);
    const quad::OrderingReport rep = quad::check_ordering(c.model, c.gamma, c.k, c.d, c.alpha);
    for (std::size_t i = 0; i < c.model.dim(); ++i) {
      ot.add_row({std::to_string(ci), fmt(c.gamma), std::to_string(c.k), std::to_string(c.d), fmt(c.alpha),
                  std::to_string(i), fmt(c.model.a[i]), fmt(rep.lookahead_over_sgd[i]),
                  fmt(rep.lookaround_over_lookahead[i]), rep.holds ? "1" : "0"});
    }
  }
  if (o.found_counterexample) {
    const QuadCase& c = o.counterexample;
    for (std::size_t i = 0; i < c.model.dim(); ++i) {
      ot.add_row({"counterexample", fmt(c.gamma), std::to_string(c.k), std::to_string(c.d), fmt(c.alpha),
                  std::to_string(i), fmt(c.model.a[i]), fmt(o.counter_report.lookahead_over_sgd[i]),
                  fmt(o.counter_report.lookaround_over_lookahead[i]), "0"});
    }
  }
  io::write_csv(ctx.out / "ordering.csv", ot);
  if (o.holding != o.sampled) {
    ctx.violate("variance ordering failed on " + std::to_string(o.sampled - o.holding) + " in-range cases");
  }

  ctx.summary["max_rel_error"] = worst;
  ctx.summary["cases"] = s.configs;
  ctx.summary["ordering_holds"] = o.holding;
  ctx.summary["ordering_sampled"] = o.sampled;
  ctx.summary["counterexample_found"] = o.found_counterexample;
  ctx.summary["notes"] = {std::string(quad::kStepSizeNote), std::string(quad::kSigmaNote)};
  ctx.line = std::to_string(s.configs) + " configs, max rel error " + fmt(worst) + ", ordering " +
             std::to_string(o.holding) + "/" + std::to_string(o.sampled) +
             (o.found_counterexample ? ", counterexample recorded" : ", no counterexample found");
}

void run_quad_monte_carlo(Context& ctx) {
  const QuadSettings& s = ctx.cfg.quad;
  const quad::DiagNoisyQuadratic m{s.a, s.sigma2};
  m.validate();
  io::CsvTable t({"round", "method", "noise", "coordinate", "analytic_mean", "analytic_var", "empirical_mean",
                  "empirical_var", "expected_loss"});
  const std::vector<double> theta0(m.dim(), 1.0);
  long beyond = 0, checked = 0;
  for (const std::string& mode_name : s.noise_modes) {
    const quad::NoiseMode mode = quad::parse_noise_mode(mode_name);
    for (const quad::Method method : {quad::Method::Sgd, quad::Method::Lookahead, quad::Method::Lookaround}) {
      quad::MethodSpec spec{method, s.gamma, method == quad::Method::Sgd ? 1 : s.k, s.alpha,
                            method == quad::Method::Lookaround ? s.d : 1};
      quad::MonteCarloOptions opt;
      opt.rounds = s.rounds;
      opt.trials = s.trials;
      opt.noise = mode;
      opt.seed = stream_key(ctx.cfg.seed, "quad/mc", {static_cast<std::uint64_t>(method),
                                                      static_cast<std::uint64_t>(mode)});
      opt.theta0 = theta0;
      opt.workers = ctx.cfg.workers;
      const quad::Trajectory emp = quad::monte_carlo(m, spec, opt);
      const std::vector<quad::MomentState> ana = quad::analytic_trajectory(m, spec, theta0, s.rounds);
      for (std::size_t r = 0; r < ana.size(); ++r) {
        const double loss = quad::expected_loss(m, ana[r]);
        for (std::size_t i = 0; i < m.dim(); ++i) {
          t.add_row({std::to_string(r), std::string(quad::to_string(method)), mode_name, std::to_string(i),
                     fmt(ana[r].mean[i]), fmt(ana[r].var[i]), fmt(emp.rounds[r].mean[i]), fmt(emp.rounds[r].var[i]),
                     fmt(loss)});
          const double se = std::sqrt(emp.rounds[r].var[i] / static_cast<double>(emp.trials));
          if (r > 0 && se > 0.0) {
            ++checked;
            if (std::abs(emp.rounds[r].mean[i] - ana[r].mean[i]) > 3.0 * se) ++beyond;
          }
        }
      }
    }
  }
  io::write_csv(ctx.out / "monte_carlo.csv", t);

  const std::vector<GapRow> gaps = lookaround_gap(s, ctx.cfg.seed, ctx.cfg.workers);
  io::CsvTable g({"d", "k", "empirical_var", "empirical_se", "reference_fixed_point", "independent_fixed_point",
                  "sgd_fixed_point", "gap_to_reference", "within_bounds"});
  for (const GapRow& r : gaps) {
    g.add_row({std::to_string(r.d), std::to_string(r.k), fmt(r.empirical), fmt(r.empirical_se), fmt(r.reference),
               fmt(r.independent), fmt(r.sgd), fmt(r.empirical - r.reference), r.within_bounds ? "1" : "0"});
    if (!r.within_bounds) {
      ctx.violate("empirical Lookaround variance outside [0.8 V_sgd/d, 1.05 V_sgd] at d=" + std::to_string(r.d) +
                  " k=" + std::to_string(r.k));
    }
  }
  io::write_csv(ctx.out / "lookaround_gap.csv", g);

  ctx.summary["mean_checks"] = checked;
  ctx.summary["mean_beyond_3se"] = beyond;
  ctx.summary["gap_rows"] = gaps.size();
  ctx.line = "mean within 3 SE at " + std::to_string(checked - beyond) + "/" + std::to_string(checked) +
             " (round, coordinate) points; gap table " + std::to_string(gaps.size()) + " rows";
}

void run_rate_sweep(Context& ctx) {
  const RateSweepSettings& r = ctx.cfg.rate_sweep;
  conv::SweepOptions opt;
  opt.kappas = r.kappas;
  opt.methods.clear();
  for (const std::string& m : r.methods) opt.methods.push_back(conv::parse_rate_method(m));
  opt.k = r.k;
  opt.beta = r.beta;
  opt.alpha = r.alpha;
  opt.gamma_points = r.gamma_points;
  opt.gamma_min = r.gamma_min;
  opt.workers = ctx.cfg.workers;
  const std::vector<conv::SweepRow> rows = conv::rate_sweep(opt);

  io::CsvTable t({"kappa", "method", "rate", "gamma_best", "optimal_rate"});
  std::vector<io::Series> series;
  for (const conv::RateMethod m : opt.methods) series.push_back({std::string(conv::to_string(m)), {}, {}});
  io::Series bound{"optimal", {}, {}};
  for (const conv::SweepRow& row : rows) {
    const double lb = conv::optimal_rate(row.kappa);
    t.add_row({fmt(row.kappa), std::string(conv::to_string(row.method)), fmt(row.best_rate), fmt(row.best_gamma),
               fmt(lb)});
    if (row.best_rate < lb - 1e-9) {
      ctx.violate("rate below optimal bound at kappa " + fmt(row.kappa) + " for " +
                  std::string(conv::to_string(row.method)));
    }
    for (std::size_t i = 0; i < opt.methods.size(); ++i) {
      if (opt.methods[i] == row.method) {
        series[i].xs.push_back(row.kappa);
        series[i].ys.push_back(row.best_rate);
      }
    }
  }
  for (double kappa : opt.kappas) {
    bound.xs.push_back(kappa);
    bound.ys.push_back(conv::optimal_rate(kappa));
  }
  series.push_back(bound);
  io::write_csv(ctx.out / "rate_sweep.csv", t);
  io::write_svg(ctx.out / "rate_sweep.svg",
                io::line_chart_svg(series, {"best per-step rate vs condition number", "kappa", "rate", true}));
  ctx.summary["rows"] = rows.size();
  ctx.line = std::to_string(rows.size()) + " (kappa, method) rates written";
}

// --- neural-network experiments --------------------------------------------

void write_runlog(const fs::path& path, const nn::RunLog& log) {
  const std::size_t reps = log.records.empty() ? 1 : log.records.front().replica_acc.size();
  std::vector<std::string> header{"round", "lr", "mean_acc", "mean_test_loss", "max_pairwise_distance"};
  for (std::size_t j = 0; j < reps; ++j) header.push_back("train_loss_r" + std::to_string(j));
  for (std::size_t j = 0; j < reps; ++j) header.push_back("acc_r" + std::to_string(j));
  io::CsvTable t(header);
  for (const nn::RoundRecord& r : log.records) {
    std::vector<std::string> row{std::to_string(r.round), fmt(r.lr), fmt(r.mean_acc), fmt(r.mean_test_loss),
                                 fmt(r.max_pairwise_distance)};
    for (std::size_t j = 0; j < reps; ++j) row.push_back(j < r.train_loss.size() ? fmt(r.train_loss[j]) : "");
    for (std::size_t j = 0; j < reps; ++j) row.push_back(j < r.replica_acc.size() ? fmt(r.replica_acc[j]) : "");
    t.add_row(std::move(row));
  }
  io::write_csv(path, t);
}

io::Series accuracy_series(const nn::RunLog& log, std::string name) {
  io::Series s{std::move(name), {}, {}};
  for (const nn::RoundRecord& r : log.records) {
    s.xs.push_back(static_cast<double>(r.round));
    s.ys.push_back(r.mean_acc);
  }
  return s;
}

void run_train(Context& ctx) {
  const nn::NnSetup setup = make_setup(ctx.cfg);
  const nn::Dataset ds = setup.make_dataset(ctx.cfg.seed);
  const nn::TrainConfig c = setup.config_for(ctx.cfg.seed);
  const std::vector<AugmentationSpec> augs = c.method == nn::TrainMethod::Lookaround
                                                 ? nn::make_augmentations(setup.kind, setup.d)
                                                 : std::vector<AugmentationSpec>{};
  const nn::RunLog log = nn::train(c, ds, augs);
  write_runlog(ctx.out / "runlog.csv", log);
  io::write_svg(ctx.out / "accuracy.svg",
                io::line_chart_svg({accuracy_series(log, std::string(nn::to_string(c.method)))},
                                   {"test accuracy per synchronization", "round", "accuracy"}));
  ctx.summary["final_test_acc"] = log.final_test_acc;
  ctx.summary["final_test_loss"] = log.final_test_loss;
  ctx.summary["rounds"] = log.records.empty() ? 0 : log.records.back().round;
  ctx.summary["train_seconds"] = log.records.empty() ? 0.0 : log.records.back().wall_seconds;
  ctx.line = std::string(nn::to_string(c.method)) + " final test accuracy " + pct(log.final_test_acc);
}

void run_ablation(Context& ctx) {
  const nn::NnSetup setup = make_setup(ctx.cfg);
  const nn::AblationResult r = nn::ablation_grid(setup, ctx.cfg.seeds, ctx.cfg.workers);
  io::CsvTable per({"cell", "da", "wa", "seed", "accuracy"});
  io::CsvTable agg({"cell", "da", "wa", "mean", "std"});
  json cells = json::object();
  for (const nn::AblationCell& c : r.cells) {
    for (std::size_t i = 0; i < c.acc.values.size(); ++i) {
      per.add_row({c.name, c.da ? "1" : "0", c.wa ? "1" : "0", std::to_string(ctx.cfg.seeds[i]),
                   fmt(c.acc.values[i])});
      if (c.acc.values[i] < 0.0 || c.acc.values[i] > 1.0) ctx.violate("accuracy outside [0, 1] in " + c.name);
    }
    agg.add_row({c.name, c.da ? "1" : "0", c.wa ? "1" : "0", fmt(c.acc.mean), fmt(c.acc.std)});
    cells[c.name] = {{"mean", c.acc.mean}, {"std", c.acc.std}};
  }
  io::write_csv(ctx.out / "ablation_runs.csv", per);
  io::write_csv(ctx.out / "ablation.csv", agg);
  ctx.summary["cells"] = cells;
  ctx.summary["da_wa_is_max"] = r.da_wa_is_max();
  ctx.summary["lookaround_ge_sgd"] = r.cell(true, true).acc.mean >= r.cell(false, false).acc.mean;
  std::ostringstream line;
  for (const nn::AblationCell& c : r.cells) line << c.name << " " << pct(c.acc.mean) << "  ";
  line << (r.da_wa_is_max() ? "(DA-WA is max)" : "(DA-WA is not max)");
  ctx.line = line.str();
}

void write_sweep(Context& ctx, const std::vector<nn::SweepPoint>& pts, const char* name, bool curves) {
  io::CsvTable per({name, "seed", "accuracy"});
  io::CsvTable agg({name, "mean", "std"});
  io::CsvTable cur({name, "seed", "round", "step", "mean_acc", "mean_test_loss"});
  std::vector<io::Series> series;
  for (const nn::SweepPoint& p : pts) {
    for (std::size_t i = 0; i < p.acc.values.size(); ++i) {
      per.add_row({std::to_string(p.value), std::to_string(ctx.cfg.seeds[i]), fmt(p.acc.values[i])});
    }
    agg.add_row({std::to_string(p.value), fmt(p.acc.mean), fmt(p.acc.std)});
    if (!curves) continue;
    for (std::size_t i = 0; i < p.logs.size(); ++i) {
      const int k = p.logs[i].config.k;
      for (const nn::RoundRecord& r : p.logs[i].records) {
        cur.add_row({std::to_string(p.value), std::to_string(ctx.cfg.seeds[i]), std::to_string(r.round),
                     std::to_string(std::min<long>(r.round * k, p.logs[i].config.steps)), fmt(r.mean_acc),
                     fmt(r.mean_test_loss)});
      }
    }
    io::Series s{std::string(name) + "=" + std::to_string(p.value), {}, {}};
    const nn::RunLog& first = p.logs.front();
    for (const nn::RoundRecord& r : first.records) {
      s.xs.push_back(static_cast<double>(std::min<long>(r.round * first.config.k, first.config.steps)));
      s.ys.push_back(r.mean_acc);
    }
    series.push_back(std::move(s));
  }
  const std::string stem = std::string("sweep_") + name;
  io::write_csv(ctx.out / (stem + "_runs.csv"), per);
  io::write_csv(ctx.out / (stem + ".csv"), agg);
  if (curves) {
    io::write_csv(ctx.out / (stem + "_curves.csv"), cur);
    io::write_svg(ctx.out / (stem + "_curves.svg"),
                  io::line_chart_svg(series, {"test accuracy (first seed)", "inner step", "accuracy"}));
  }
}

void run_sweep_d(Context& ctx) {
  const nn::NnSetup setup = make_setup(ctx.cfg);
  const auto pts = nn::sweep_d(setup, ctx.cfg.sweep.d_values, ctx.cfg.seeds, ctx.cfg.workers);
  write_sweep(ctx, pts, "d", false);
  const double slope = nn::sweep_slope(pts);
  ctx.summary["slope"] = slope;
  json means = json::object();
  for (const auto& p : pts) means[std::to_string(p.value)] = p.acc.mean;
  ctx.summary["mean_accuracy"] = means;
  ctx.line = "accuracy-vs-d slope " + fmt(slope);
}

void run_sweep_k(Context& ctx) {
  const nn::NnSetup setup = make_setup(ctx.cfg);
  const auto pts = nn::sweep_k(setup, ctx.cfg.sweep.k_values, ctx.cfg.seeds, ctx.cfg.workers);
  write_sweep(ctx, pts, "k", true);
  json means = json::object();
  for (const auto& p : pts) means[std::to_string(p.value)] = p.acc.mean;
  ctx.summary["mean_accuracy"] = means;
  ctx.line = std::to_string(pts.size()) + " k values, per-round curves logged";
}

void write_grid(const fs::path& path, const nn::PlaneGrid& g) {
  std::vector<std::string> header{"y\\x"};
  for (double x : g.xs) header.push_back(fmt(x));
  io::CsvTable t(header);
  for (std::size_t iy = 0; iy < g.ys.size(); ++iy) {
    std::vector<std::string> row{fmt(g.ys[iy])};
    for (std::size_t ix = 0; ix < g.xs.size(); ++ix) row.push_back(fmt(g.at(ix, iy)));
    t.add_row(std::move(row));
  }
  io::write_csv(path, t);
}

void run_landscape(Context& ctx) {
  const nn::NnSetup setup = make_setup(ctx.cfg);
  const LandscapeSettings& l = ctx.cfg.landscape;
  io::CsvTable corners({"regime", "lr", "k", "point", "x", "y", "residual_norm", "loss"});
  json regimes = json::object();
  std::string line;
  for (const bool small : {true, false}) {
    const std::string tag = small ? "small_lr" : "large_lr";
    const nn::LandscapeRegime r =
        nn::landscape_run(setup, ctx.cfg.seed, small ? l.small_lr : l.large_lr, small ? l.small_k : l.large_k,
                          l.resolution, l.margin, ctx.cfg.workers);
    write_grid(ctx.out / ("plane_" + tag + ".csv"), r.grid);
    const char* names[] = {"w_v", "w_h", "w_r"};
    std::vector<io::Marker> markers;
    for (std::size_t j = 0; j < 3; ++j) {
      corners.add_row({tag, fmt(r.lr), std::to_string(r.k), names[j], fmt(r.corners[j].x), fmt(r.corners[j].y),
                       fmt(r.corners[j].residual_norm()), fmt(r.corner_loss[j])});
      markers.push_back({names[j], r.corners[j].x, r.corners[j].y});
    }
    corners.add_row({tag, fmt(r.lr), std::to_string(r.k), "mean", fmt(r.mean_x), fmt(r.mean_y), "0", fmt(r.mean_loss)});
    markers.push_back({"mean", r.mean_x, r.mean_y});
    io::write_svg(ctx.out / ("plane_" + tag + ".svg"),
                  io::heatmap_svg(r.grid.xs, r.grid.ys, r.grid.loss, markers,
                                  {"test loss, lr " + fmt(r.lr) + ", k " + std::to_string(r.k), "x", "y"}));

    // Frame invariants.
    double uu = 0, vv = 0, uv = 0;
    for (std::size_t i = 0; i < r.proj.dimension(); ++i) {
      uu += r.proj.u_hat[i] * r.proj.u_hat[i];
      vv += r.proj.v_hat[i] * r.proj.v_hat[i];
      uv += r.proj.u_hat[i] * r.proj.v_hat[i];
    }
    if (std::abs(uu - 1) > 1e-10 || std::abs(vv - 1) > 1e-10 || std::abs(uv) > 1e-10) {
      ctx.violate(tag + ": plane basis not orthonormal");
    }
    const std::size_t mid = r.grid.xs.size() / 2;
    if (r.grid.xs[mid] != 0.0 || r.grid.ys[mid] != 0.0 || r.grid.at(mid, mid) != r.corner_loss[0]) {
      ctx.violate(tag + ": grid origin loss differs from loss(w_v)");
    }
    regimes[tag] = {{"lr", r.lr},
                    {"k", r.k},
                    {"corner_loss", r.corner_loss},
                    {"mean_loss", r.mean_loss},
                    {"mean_below_min_corner", r.mean_below_min}};
    const double best = *std::min_element(r.corner_loss.begin(), r.corner_loss.end());
    if (!line.empty()) line += "; ";
    line += tag + " mean loss " + fmt_short(r.mean_loss) + (r.mean_below_min ? " <= " : " > ") + "best corner " +
            fmt_short(best);
  }
  io::write_csv(ctx.out / "plane_points.csv", corners);
  ctx.summary["regimes"] = regimes;
  ctx.line = line;
}

void run_soups_collapse(Context& ctx) {
  const nn::NnSetup setup = make_setup(ctx.cfg);
  const CollapseSettings& c = ctx.cfg.collapse;
  const nn::CollapseResult r =
      nn::soups_collapse(setup, ctx.cfg.seed, c.long_steps, c.small_lr, ctx.cfg.workers);
  write_runlog(ctx.out / "lookaround_small_lr.csv", r.lookaround);
  io::CsvTable t({"model", "accuracy"});
  t.add_row({"net_a", fmt(r.acc_a)});
  t.add_row({"net_b", fmt(r.acc_b)});
  t.add_row({"weight_average", fmt(r.acc_averaged)});
  io::write_csv(ctx.out / "collapse.csv", t);
  ctx.summary["acc_a"] = r.acc_a;
  ctx.summary["acc_b"] = r.acc_b;
  ctx.summary["acc_averaged"] = r.acc_averaged;
  ctx.summary["drop"] = r.drop;
  ctx.summary["max_sync_gap"] = r.max_sync_gap;
  ctx.summary["mean_above_min_fraction"] = r.mean_above_min_fraction;
  ctx.line = "post-hoc average drops " + pct(r.drop) + " below the worse net; Lookaround max sync gap " +
             pct(r.max_sync_gap);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  fs::create_directories(out_dir);
  io::write_atomic(out_dir / "config.json", to_json(cfg));
  Context ctx{cfg, out_dir, json::object(), {}, {}};
  const auto t0 = Clock::now();
  switch (cfg.kind) {
    case ExperimentKind::QuadFixedPoints: run_quad_fixed_points(ctx); break;
    case ExperimentKind::QuadMonteCarlo: run_quad_monte_carlo(ctx); break;
    case ExperimentKind::RateSweep: run_rate_sweep(ctx); break;
    case ExperimentKind::Train: run_train(ctx); break;
    case ExperimentKind::Ablation: run_ablation(ctx); break;
    case ExperimentKind::SweepD: run_sweep_d(ctx); break;
    case ExperimentKind::SweepK: run_sweep_k(ctx); break;
    case ExperimentKind::Landscape: run_landscape(ctx); break;
    case ExperimentKind::SoupsCollapse: run_soups_collapse(ctx); break;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  ctx.summary["experiment"] = std::string(to_string(cfg.kind));
  ctx.summary["seed"] = cfg.seed;
  ctx.summary["wall_seconds"] = secs;
  ctx.summary["violations"] = ctx.violations;
  io::write_atomic(out_dir / "summary.json", ctx.summary.dump(2) + "\n");

  RunResult res;
  res.violations = ctx.violations;
  res.exit_code = ctx.violations.empty() ? 0 : 3;
  char t[32];
  std::snprintf(t, sizeof t, "%.1fs", secs);
  res.summary = std::string(to_string(cfg.kind)) + ": " + ctx.line + " [" + t + "]" +
                (ctx.violations.empty() ? "" : " INVARIANT VIOLATIONS: " + std::to_string(ctx.violations.size()));
  return res;
}

}  // namespace lookaround::cli
