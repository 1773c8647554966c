// Experiment driver: one subcommand per experiment kind.
//
//   lookaround <kind> [--config FILE] [--seed N] [--out DIR] [--workers N] [--force] [--print-config]
//
// Precedence: built-in defaults < config file < flags. Without --out the run
// goes to $LOOKAROUND_OUT_ROOT/<kind>-seed<N> (root defaults to ./runs).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lookaround/config.hpp"
#include "lookaround/experiments.hpp"
#include "lookaround/runner.hpp"

namespace fs = std::filesystem;
using namespace lookaround;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool force = false;
  bool print_config = false;
};

fs::path output_dir(const cli::ExperimentConfig& cfg, const Flags& f) {
  if (!f.out.empty()) return f.out;
  const char* root = std::getenv("LOOKAROUND_OUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
  return base / (std::string(cli::to_string(cfg.kind)) + "-seed" + std::to_string(cfg.seed));
}

int execute(cli::ExperimentKind kind, const Flags& f) {
  cli::ExperimentConfig cfg;
  if (!f.config.empty()) {
    cfg = cli::load_config(f.config);
    if (cfg.kind != kind) {
      std::cerr << "error: " << f.config << " describes '" << cli::to_string(cfg.kind) << "', not '"
                << cli::to_string(kind) << "'\n";
      return 2;
    }
  } else {
    cfg = cli::parse_config("{\"kind\": \"" + std::string(cli::to_string(kind)) + "\"}");
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  cli::validate(cfg);

  if (f.print_config) {
    std::cout << cli::to_json(cfg);
    return 0;
  }
  const fs::path out = output_dir(cfg, f);
  if (fs::exists(out) && !fs::is_empty(out) && !f.force) {
    std::cerr << "error: output directory " << out.string() << " already exists; pass --force to overwrite\n";
    return 2;
  }
  const cli::RunResult r = cli::run_experiment(cfg, out);
  std::cout << r.summary << '\n';
  for (const std::string& v : r.violations) std::cerr << "violation: " << v << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lookaround desk-scale experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::optional<cli::ExperimentKind> chosen;

  for (const cli::ExperimentKind kind : cli::all_experiment_kinds()) {
    const std::string name(cli::to_string(kind));
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "top-level seed (overrides the config)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--workers", flags.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_flag("--force", flags.force, "write into an existing output directory");
    sub->add_flag("--print-config", flags.print_config, "print the materialized config and exit");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    return execute(*chosen, flags);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nn::JobError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
