// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"
#include "hsrdm/io.hpp"

namespace hsrdm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommandResult {
  int code;
  std::string out;
  std::string err;
};

CommandResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

// Last line of stderr is the error record.
json error_record(const std::string& err) {
  const auto end = err.find_last_not_of('\n');
  const auto start = err.rfind('\n', end);
  return json::parse(err.substr(start == std::string::npos ? 0 : start + 1, end - start));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("hsrdm_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  const CommandResult r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(error_record(r.err)["error"], "UsageError");
  EXPECT_EQ(run({"fit"}).code, cli::kExitUsage);  // --config is required
  EXPECT_EQ(run({"generate", "--out", at("d")}).code, cli::kExitUsage);  // no source
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, FitOnEmptyDatasetReportsError) {
  // Hand-written zero-length dataset; save_dataset refuses to produce one.
  fs::create_directories(dir_ / "empty");
  std::ofstream(at("empty/meta")) << R"({"format_version": 1, "T": 0, "J": 1, "D": 2,
    "example_end_times": [], "system_covariate_dim": 0, "entity_covariate_dim": 0,
    "has_mask": false, "has_latents": false})";
  std::ofstream(at("empty/observations"), std::ios::binary);
  std::ofstream(at("c.json")) << R"({"model": {"L": 1, "K": 2}, "data": {"path": "empty"}})";
  const CommandResult r = run({"fit", "--config", at("c.json"), "--out", at("m")});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_EQ(error_record(r.err)["error"], "EmptyDataset");
}

TEST_F(CliTest, BadConfigReportsViolations) {
  std::ofstream(at("c.json")) << R"({"model": {"L": 0, "K": 2}, "data": {"generator": "figure_eight"}})";
  const CommandResult r = run({"fit", "--config", at("c.json"), "--out", at("m")});
  EXPECT_EQ(r.code, cli::kExitFailure);
  const json rec = error_record(r.err);
  EXPECT_EQ(rec["error"], "InvalidConfig");
  EXPECT_NE(rec["message"].get<std::string>().find("model.L"), std::string::npos);
}

TEST_F(CliTest, FigureEightPipeline) {
  ASSERT_EQ(run({"generate", "--preset", "figure-eight", "--seed", "120", "--out", at("data")}).code, 0);
  ASSERT_TRUE(has_latents(at("data")));
  std::ofstream(at("c.json")) << R"({
    "model": {"L": 2, "K": 2, "entity_recurrence": {"kind": "rbf", "bandwidth": 0.25, "scale": 1.0}},
    "inference": {"n_iterations": 3, "bottom_iters": 2, "top_iters": 3, "m_step_substeps": 10},
    "data": {"path": "data"},
    "forecast": {"target_entities": [2], "begin": 280, "end": 399, "n_samples": 2, "seed": 7},
    "seed": 120
  })";
  CommandResult r = run({"fit", "--config", at("c.json"), "--out", at("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"checkpoint", "trace.csv", "fit.json", "config.json"})
    EXPECT_TRUE(fs::exists(dir_ / "m" / f)) << f;
  const json fit = json::parse(std::ifstream(at("m/fit.json")));
  EXPECT_EQ(fit["digest"], checkpoint_digest(at("m/checkpoint")));

  r = run({"forecast", "--config", at("c.json"), "--model", at("m"), "--out", at("fc")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "fc" / "sample_001.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "fc" / "sample_002.csv"));

  r = run({"segment", "--data", at("data"), "--model", at("m"), "--out", at("seg")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "seg" / "system_states.csv"));

  r = run({"evaluate", "--data", at("data"), "--forecast", at("fc"), "--segments", at("seg"),
           "--out", at("metrics.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(std::ifstream(at("metrics.json")));
  EXPECT_EQ(m["forecast"]["trials"].size(), 1u);
  EXPECT_EQ(m["forecast"]["trials"][0]["sample_mse"].size(), 2u);
  const double acc = m["segmentation"]["system_accuracy"];
  EXPECT_GE(acc, 0.5);
  EXPECT_LE(acc, 1.0);

  // Refitting with the same seed reproduces the checkpoint bit for bit.
  ASSERT_EQ(run({"fit", "--config", at("c.json"), "--out", at("m2")}).code, 0);
  const json fit2 = json::parse(std::ifstream(at("m2/fit.json")));
  EXPECT_EQ(fit["digest"], fit2["digest"]);
}

TEST_F(CliTest, MissingModelDirectory) {
  ASSERT_EQ(run({"generate", "--preset", "figure-eight", "--out", at("data")}).code, 0);
  const CommandResult r = run({"segment", "--data", at("data"), "--model", at("nope"), "--out", at("seg")});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_TRUE(error_record(r.err).contains("error"));
}

}  // namespace
}  // namespace hsrdm
