#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "lookaround/artifacts.hpp"
#include "lookaround/config.hpp"
#include "lookaround/runner.hpp"

using namespace lookaround;
using namespace lookaround::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lookaround-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& json) {
  try {
    parse_config(json);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsRoundTripThroughJson) {
  for (const ExperimentKind kind : all_experiment_kinds()) {
    const ExperimentConfig c = parse_config("{\"kind\": \"" + std::string(to_string(kind)) + "\"}");
    EXPECT_EQ(c.kind, kind);
    EXPECT_EQ(parse_config(to_json(c)), c) << to_string(kind);
  }
}

TEST(Config, NonDefaultValuesRoundTrip) {
  const ExperimentConfig c = parse_config(R"({"kind": "train", "seed": 17,
    "train": {"lr": 0.25, "k": 7, "hidden": [8, 4], "schedule": {"kind": "cosine"}},
    "dataset": {"kind": "blobs", "noise": 0.5}})");
  EXPECT_EQ(c.seed, 17u);
  EXPECT_EQ(c.train.k, 7);
  EXPECT_EQ(c.train.hidden, (std::vector<int>{8, 4}));
  EXPECT_EQ(c.dataset.kind, "blobs");
  EXPECT_EQ(parse_config(to_json(c)), c);
}

TEST(Config, MissingNoiseMaterializesToKindDefault) {
  const ExperimentConfig c = parse_config(R"({"kind": "train", "dataset": {"kind": "blobs"}})");
  EXPECT_GE(c.dataset.noise, 0.0);
}

TEST(Config, AlphaOutOfRangeNamesKeyAndBound) {
  const std::string msg = config_error(R"({"kind": "train", "train": {"alpha": 1.5}})");
  EXPECT_NE(msg.find("train.alpha"), std::string::npos) << msg;
  EXPECT_NE(msg.find("α ∈ (0,1]"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyIsRejected) {
  const std::string msg = config_error(R"({"kind": "train", "train": {"learning_rate": 0.1}})");
  EXPECT_NE(msg.find("learning_rate"), std::string::npos) << msg;
}

TEST(Config, WrongTypeIsRejected) {
  EXPECT_FALSE(config_error(R"({"kind": "train", "train": {"k": "ten"}})").empty());
  EXPECT_FALSE(config_error(R"({"kind": "nonsense"})").empty());
  EXPECT_FALSE(config_error("not json").empty());
}

TEST(Config, CheckedInConfigsParse) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(LOOKAROUND_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 1);
}

TEST(Artifacts, WriteAtomicLeavesNoTemporary) {
  const fs::path dir = scratch_dir("atomic");
  io::write_atomic(dir / "a.txt", "first");
  io::write_atomic(dir / "a.txt", "second");
  EXPECT_EQ(slurp(dir / "a.txt"), "second");
  EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
  fs::remove_all(dir);
}

TEST(Artifacts, CsvQuotesSpecialFields) {
  io::CsvTable t({"name", "value"});
  t.add_row({"plain", "1"});
  t.add_row({"with,comma", "say \"hi\""});
  EXPECT_EQ(t.str(), "name,value\nplain,1\n\"with,comma\",\"say \"\"hi\"\"\"\n");
  EXPECT_THROW(t.add_row({"short"}), std::invalid_argument);
}

TEST(Artifacts, FmtRoundTrips) {
  for (const double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5}) {
    EXPECT_EQ(std::strtod(io::fmt(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(io::fmt(0.5), "0.5");
}

TEST(Runner, QuadFixedPointsFinishesQuickly) {
  const fs::path dir = scratch_dir("fixed-points");
  const ExperimentConfig c = parse_config(R"({"kind": "quad-fixed-points"})");
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_experiment(c, dir);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.exit_code, 0) << r.summary;
  EXPECT_TRUE(r.violations.empty());
  EXPECT_LT(seconds, 10.0);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_EQ(load_config(dir / "config.json"), c);
  fs::remove_all(dir);
}

TEST(Cli, RefusesNonEmptyOutputWithoutForce) {
  const fs::path dir = scratch_dir("cli-force");
  io::write_atomic(dir / "keep.txt", "x");
  const std::string base = std::string(LOOKAROUND_CLI_PATH) + " rate-sweep --out " + dir.string();
  const int refused = std::system((base + " > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(refused));
  EXPECT_EQ(WEXITSTATUS(refused), 2);
  EXPECT_TRUE(fs::exists(dir / "keep.txt"));
  EXPECT_FALSE(fs::exists(dir / "summary.json"));

  const int forced = std::system((base + " --force > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(forced));
  EXPECT_EQ(WEXITSTATUS(forced), 0);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  fs::remove_all(dir);
}

TEST(Cli, MismatchedConfigKindIsAUsageError) {
  const fs::path dir = scratch_dir("cli-kind");
  io::write_atomic(dir / "c.json", R"({"kind": "train"})");
  const std::string cmd = std::string(LOOKAROUND_CLI_PATH) + " rate-sweep --config " + (dir / "c.json").string() +
                          " --out " + (dir / "out").string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  fs::remove_all(dir);
}
