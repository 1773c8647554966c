#include "lookaround/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lookaround/artifacts.hpp"
#include "lookaround/convergence.hpp"
#include "lookaround/dataset.hpp"
#include "lookaround/quad.hpp"
#include "lookaround/train.hpp"

namespace lookaround::cli {

using json = nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::QuadFixedPoints, "quad-fixed-points"},
    {ExperimentKind::QuadMonteCarlo, "quad-monte-carlo"},
    {ExperimentKind::RateSweep, "rate-sweep"},
    {ExperimentKind::Train, "train"},
    {ExperimentKind::Ablation, "ablation"},
    {ExperimentKind::SweepD, "sweep-d"},
    {ExperimentKind::SweepK, "sweep-k"},
    {ExperimentKind::Landscape, "landscape"},
    {ExperimentKind::SoupsCollapse, "soups-collapse"},
};

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void read(const json& v, double& out, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  out = v.get<double>();
}

void read(const json& v, bool& out, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  out = v.get<bool>();
}

void read(const json& v, std::string& out, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  out = v.get<std::string>();
}

void read(const json& v, std::uint64_t& out, const std::string& path) {
  if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
  out = v.get<std::uint64_t>();
}

template <class I>
  requires(std::is_same_v<I, int> || std::is_same_v<I, long>)
void read(const json& v, I& out, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<I>::min() || x > std::numeric_limits<I>::max()) fail(path, "integer out of range");
  out = static_cast<I>(x);
}

template <class T>
void read(const json& v, std::vector<T>& out, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
  std::vector<T> tmp(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) read(v[i], tmp[i], path + "[" + std::to_string(i) + "]");
  out = std::move(tmp);
}

/// Object reader that remembers which keys were consumed so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read(*it, out, name(key));
  }

  template <class F>
  void section(const char* key, F&& f) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = j_.find(key);
    Section s(it == j_.end() ? empty : *it, name(key));
    f(s);
    s.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) fail(name(it.key().c_str()), "unknown key");
    }
  }

 private:
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class T>
void check(bool ok, const std::string& key, const T& value, const std::string& bound) {
  if (ok) return;
  std::ostringstream v;
  if constexpr (std::is_floating_point_v<T>) {
    v << io::fmt(value);
  } else {
    v << value;
  }
  throw ConfigError(key + " = " + v.str() + " violates " + bound);
}

template <class F>
void check_parse(const std::string& key, const std::string& value, F&& parse) {
  try {
    parse(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const KindName& e : kKinds) {
    if (e.kind == k) return e.name;
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const KindName& e : kKinds) {
    if (name == e.name) return e.kind;
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> all = [] {
    std::vector<ExperimentKind> v;
    for (const KindName& e : kKinds) v.push_back(e.kind);
    return v;
  }();
  return all;
}

void validate(const ExperimentConfig& c) {
  check(c.schema_version == kSchemaVersion, "schema_version", c.schema_version,
        "schema_version = " + std::to_string(kSchemaVersion));
  check(!c.seeds.empty(), "seeds", c.seeds.size(), "at least one seed");
  check(c.workers >= 1, "workers", c.workers, "workers >= 1");

  const QuadSettings& q = c.quad;
  check(q.configs >= 1, "quad.configs", q.configs, "configs >= 1");
  check(q.max_coords >= 1 && q.max_coords <= 64, "quad.max_coords", q.max_coords, "max_coords ∈ [1,64]");
  check(q.max_k >= 1, "quad.max_k", q.max_k, "max_k >= 1");
  check(q.max_d >= 1, "quad.max_d", q.max_d, "max_d >= 1");
  check(!q.a.empty() && q.a.size() == q.sigma2.size(), "quad.a", q.a.size(), "len(a) = len(sigma2) >= 1");
  for (double a : q.a) check(a > 0.0, "quad.a", a, "a > 0");
  for (double s : q.sigma2) check(s >= 0.0, "quad.sigma2", s, "sigma2 >= 0");
  check(q.gamma > 0.0, "quad.gamma", q.gamma, "γ > 0");
  const double a_max = *std::max_element(q.a.begin(), q.a.end());
  check(q.gamma * a_max < 1.0, "quad.gamma", q.gamma, "γ < 1/L_max");
  check(q.k >= 1, "quad.k", q.k, "k >= 1");
  check(q.d >= 1, "quad.d", q.d, "d >= 1");
  check(q.alpha > 0.0 && q.alpha <= 1.0, "quad.alpha", q.alpha, "α ∈ (0,1]");
  check(q.rounds >= 1, "quad.rounds", q.rounds, "rounds >= 1");
  check(q.trials >= 2, "quad.trials", q.trials, "trials >= 2");
  check(q.gap_trials >= 2, "quad.gap_trials", q.gap_trials, "gap_trials >= 2");
  check(!q.noise_modes.empty(), "quad.noise_modes", q.noise_modes.size(), "at least one mode");
  for (const std::string& m : q.noise_modes) check_parse("quad.noise_modes", m, quad::parse_noise_mode);
  for (int d : q.gap_d) check(d >= 1, "quad.gap_d", d, "d >= 1");
  for (int k : q.gap_k) check(k >= 1, "quad.gap_k", k, "k >= 1");

  const RateSweepSettings& r = c.rate_sweep;
  check(!r.kappas.empty(), "rate_sweep.kappas", r.kappas.size(), "at least one κ");
  for (double kappa : r.kappas) check(kappa >= 1.0, "rate_sweep.kappas", kappa, "κ >= 1");
  check(!r.methods.empty(), "rate_sweep.methods", r.methods.size(), "at least one method");
  for (const std::string& m : r.methods) check_parse("rate_sweep.methods", m, conv::parse_rate_method);
  check(r.k >= 1, "rate_sweep.k", r.k, "k >= 1");
  check(r.beta >= 0.0 && r.beta < 1.0, "rate_sweep.beta", r.beta, "β ∈ [0,1)");
  check(r.alpha > 0.0 && r.alpha <= 1.0, "rate_sweep.alpha", r.alpha, "α ∈ (0,1]");
  check(r.gamma_points >= 2, "rate_sweep.gamma_points", r.gamma_points, "gamma_points >= 2");
  check(r.gamma_min > 0.0, "rate_sweep.gamma_min", r.gamma_min, "gamma_min > 0");

  const DatasetSettings& ds = c.dataset;
  check_parse("dataset.kind", ds.kind, nn::parse_dataset_kind);
  check(ds.n_train >= 1, "dataset.n_train", ds.n_train, "n_train >= 1");
  check(ds.n_test >= 1, "dataset.n_test", ds.n_test, "n_test >= 1");
  check(ds.noise >= 0.0, "dataset.noise", ds.noise, "noise >= 0");

  const TrainSettings& t = c.train;
  check_parse("train.method", t.method, nn::parse_train_method);
  check(t.inner == "sgd" || t.inner == "momentum", "train.inner", t.inner, "inner ∈ {sgd, momentum}");
  check(t.lr > 0.0, "train.lr", t.lr, "lr > 0");
  check(t.momentum >= 0.0 && t.momentum < 1.0, "train.momentum", t.momentum, "β ∈ [0,1)");
  check(t.k >= 1, "train.k", t.k, "k >= 1");
  check(t.alpha > 0.0 && t.alpha <= 1.0, "train.alpha", t.alpha, "α ∈ (0,1]");
  check(t.d >= 1 && t.d <= 6, "train.d", t.d, "d ∈ [1,6]");
  check(t.batch_size >= 1, "train.batch_size", t.batch_size, "batch_size >= 1");
  check(t.steps >= 1, "train.steps", t.steps, "steps >= 1");
  check_parse("train.schedule.kind", t.schedule.kind, nn::parse_schedule_kind);
  check(t.schedule.factor > 0.0 && t.schedule.factor <= 1.0, "train.schedule.factor", t.schedule.factor,
        "factor ∈ (0,1]");
  for (double m : t.schedule.milestones) check(m > 0.0 && m < 1.0, "train.schedule.milestones", m, "milestone ∈ (0,1)");
  check(std::is_sorted(t.schedule.milestones.begin(), t.schedule.milestones.end()), "train.schedule.milestones",
        t.schedule.milestones.size(), "ascending order");
  check(!t.hidden.empty(), "train.hidden", t.hidden.size(), "at least one hidden layer");
  for (int w : t.hidden) check(w >= 1, "train.hidden", w, "width >= 1");
  check(t.eval_every >= 1, "train.eval_every", t.eval_every, "eval_every >= 1");

  for (int d : c.sweep.d_values) check(d >= 1 && d <= 6, "sweep.d_values", d, "d ∈ [1,6]");
  check(c.sweep.d_values.size() >= 2, "sweep.d_values", c.sweep.d_values.size(), "at least two values");
  check(!c.sweep.k_values.empty(), "sweep.k_values", c.sweep.k_values.size(), "at least one value");

  const LandscapeSettings& l = c.landscape;
  check(l.small_lr > 0.0, "landscape.small_lr", l.small_lr, "lr > 0");
  check(l.large_lr > 0.0, "landscape.large_lr", l.large_lr, "lr > 0");
  check(l.small_k >= 1, "landscape.small_k", l.small_k, "k >= 1");
  check(l.large_k >= 1, "landscape.large_k", l.large_k, "k >= 1");
  check(l.resolution >= 2, "landscape.resolution", l.resolution, "resolution >= 2");
  check(l.margin >= 0.0, "landscape.margin", l.margin, "margin >= 0");

  check(c.collapse.long_steps >= 1, "collapse.long_steps", c.collapse.long_steps, "long_steps >= 1");
  check(c.collapse.small_lr > 0.0, "collapse.small_lr", c.collapse.small_lr, "lr > 0");
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section s(root, "");
  s.get("schema_version", c.schema_version);
  check(c.schema_version == kSchemaVersion, "schema_version", c.schema_version,
        "schema_version = " + std::to_string(kSchemaVersion));
  std::string kind = std::string(to_string(c.kind));
  s.get("kind", kind);
  c.kind = parse_experiment_kind(kind);
  s.get("seed", c.seed);
  s.get("seeds", c.seeds);
  s.get("workers", c.workers);

  s.section("quad", [&](Section& q) {
    q.get("configs", c.quad.configs);
    q.get("max_coords", c.quad.max_coords);
    q.get("max_k", c.quad.max_k);
    q.get("max_d", c.quad.max_d);
    q.get("a", c.quad.a);
    q.get("sigma2", c.quad.sigma2);
    q.get("gamma", c.quad.gamma);
    q.get("k", c.quad.k);
    q.get("d", c.quad.d);
    q.get("alpha", c.quad.alpha);
    q.get("rounds", c.quad.rounds);
    q.get("trials", c.quad.trials);
    q.get("noise_modes", c.quad.noise_modes);
    q.get("gap_d", c.quad.gap_d);
    q.get("gap_k", c.quad.gap_k);
    q.get("gap_trials", c.quad.gap_trials);
  });
  s.section("rate_sweep", [&](Section& r) {
    r.get("kappas", c.rate_sweep.kappas);
    r.get("methods", c.rate_sweep.methods);
    r.get("k", c.rate_sweep.k);
    r.get("beta", c.rate_sweep.beta);
    r.get("alpha", c.rate_sweep.alpha);
    r.get("gamma_points", c.rate_sweep.gamma_points);
    r.get("gamma_min", c.rate_sweep.gamma_min);
  });
  s.section("dataset", [&](Section& d) {
    d.get("kind", c.dataset.kind);
    d.get("n_train", c.dataset.n_train);
    d.get("n_test", c.dataset.n_test);
    d.get("noise", c.dataset.noise);
  });
  s.section("train", [&](Section& t) {
    t.get("method", c.train.method);
    t.get("inner", c.train.inner);
    t.get("lr", c.train.lr);
    t.get("momentum", c.train.momentum);
    t.get("k", c.train.k);
    t.get("alpha", c.train.alpha);
    t.get("d", c.train.d);
    t.get("batch_size", c.train.batch_size);
    t.get("steps", c.train.steps);
    t.section("schedule", [&](Section& sc) {
      sc.get("kind", c.train.schedule.kind);
      sc.get("factor", c.train.schedule.factor);
      sc.get("milestones", c.train.schedule.milestones);
    });
    t.get("hidden", c.train.hidden);
    t.get("carry_velocity", c.train.carry_velocity);
    t.get("independent_batches", c.train.independent_batches);
    t.get("eval_every", c.train.eval_every);
  });
  s.section("sweep", [&](Section& w) {
    w.get("d_values", c.sweep.d_values);
    w.get("k_values", c.sweep.k_values);
  });
  s.section("landscape", [&](Section& l) {
    l.get("small_lr", c.landscape.small_lr);
    l.get("small_k", c.landscape.small_k);
    l.get("large_lr", c.landscape.large_lr);
    l.get("large_k", c.landscape.large_k);
    l.get("resolution", c.landscape.resolution);
    l.get("margin", c.landscape.margin);
  });
  s.section("collapse", [&](Section& l) {
    l.get("long_steps", c.collapse.long_steps);
    l.get("small_lr", c.collapse.small_lr);
  });
  s.finish();

  if (c.dataset.noise < 0.0) {
    check_parse("dataset.kind", c.dataset.kind, nn::parse_dataset_kind);
    c.dataset.noise = nn::default_noise(nn::parse_dataset_kind(c.dataset.kind));
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["kind"] = std::string(to_string(c.kind));
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  j["workers"] = c.workers;
  const QuadSettings& q = c.quad;
  j["quad"] = {{"configs", q.configs},       {"max_coords", q.max_coords},   {"max_k", q.max_k},
               {"max_d", q.max_d},           {"a", q.a},                     {"sigma2", q.sigma2},
               {"gamma", q.gamma},           {"k", q.k},                     {"d", q.d},
               {"alpha", q.alpha},           {"rounds", q.rounds},           {"trials", q.trials},
               {"noise_modes", q.noise_modes}, {"gap_d", q.gap_d},           {"gap_k", q.gap_k},
               {"gap_trials", q.gap_trials}};
  const RateSweepSettings& r = c.rate_sweep;
  j["rate_sweep"] = {{"kappas", r.kappas}, {"methods", r.methods},           {"k", r.k},
                     {"beta", r.beta},     {"alpha", r.alpha},               {"gamma_points", r.gamma_points},
                     {"gamma_min", r.gamma_min}};
  j["dataset"] = {{"kind", c.dataset.kind},
                  {"n_train", c.dataset.n_train},
                  {"n_test", c.dataset.n_test},
                  {"noise", c.dataset.noise}};
  const TrainSettings& t = c.train;
  j["train"] = {{"method", t.method},
                {"inner", t.inner},
                {"lr", t.lr},
                {"momentum", t.momentum},
                {"k", t.k},
                {"alpha", t.alpha},
                {"d", t.d},
                {"batch_size", t.batch_size},
                {"steps", t.steps},
                {"schedule",
                 {{"kind", t.schedule.kind}, {"factor", t.schedule.factor}, {"milestones", t.schedule.milestones}}},
                {"hidden", t.hidden},
                {"carry_velocity", t.carry_velocity},
                {"independent_batches", t.independent_batches},
                {"eval_every", t.eval_every}};
  j["sweep"] = {{"d_values", c.sweep.d_values}, {"k_values", c.sweep.k_values}};
  const LandscapeSettings& l = c.landscape;
  j["landscape"] = {{"small_lr", l.small_lr}, {"small_k", l.small_k},       {"large_lr", l.large_lr},
                    {"large_k", l.large_k},   {"resolution", l.resolution}, {"margin", l.margin}};
  j["collapse"] = {{"long_steps", c.collapse.long_steps}, {"small_lr", c.collapse.small_lr}};
  return j.dump(2) + "\n";
}

}  // namespace lookaround::cli
