// Copyright 2026 The Rewrite Again Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rewrite_again/pipeline.h"

#include <sstream>

#include <gtest/gtest.h>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"
#include "test_util.h"

namespace rewrite_again {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

fs::path SourceDir() { return REWRITE_AGAIN_SOURCE_DIR; }

json ToyConfig(const std::string& track) {
  json config = json::parse(ReadFile(SourceDir() / "configs" / ("toy_" + track + ".json")));
  config.erase("run_dir");
  config["dataset"]["path"] = (SourceDir() / "data/toy/private.jsonl").string();
  config["public_corpus"]["path"] = (SourceDir() / "data/toy/public.jsonl").string();
  return config;
}

CliOptions Options(const TempDir& dir, const json& config) {
  WriteFileAtomic(dir.path() / "config.json", config.dump(2));
  CliOptions options;
  options.config_path = dir.path() / "config.json";
  options.run_dir = dir.path() / "run";
  return options;
}

ErrorCode RunExpectingError(const CliOptions& options, const std::string& subcommand) {
  std::ostringstream log;
  try {
    Pipeline::Open(options, log).Run(subcommand);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << subcommand << " unexpectedly succeeded";
  return ErrorCode::kStageFailure;
}

TEST(PipelineTest, BasicTrackEndToEndAndIdempotent) {
  TempDir dir("pipe");
  const auto options = Options(dir, ToyConfig("basic"));
  std::ostringstream log;
  {
    auto pipeline = Pipeline::Open(options, log);
    pipeline.Run("pipeline");
    EXPECT_NE(pipeline.last_report().find("Basic 2x"), std::string::npos);
  }
  const auto reports = json::parse(ReadFile(dir.path() / "run/reports/privacy_reports.json"));
  ASSERT_EQ(reports.size(), 2u);
  const std::string first = ReadFile(dir.path() / "run/reports/privacy_reports.json");

  std::ostringstream rerun_log;
  auto pipeline = Pipeline::Open(options, rerun_log);
  pipeline.Run("pipeline");
  EXPECT_EQ(ReadFile(dir.path() / "run/reports/privacy_reports.json"), first);
  EXPECT_EQ(rerun_log.str().find("running"), std::string::npos) << rerun_log.str();
  size_t skipped = 0;
  for (const auto& event : pipeline.manifest().at("events")) {
    if (event.at("action") == "skipped") ++skipped;
  }
  EXPECT_EQ(skipped, 8u);
}

TEST(PipelineTest, MissingArtifactNamesStage) {
  TempDir dir("pipe");
  const auto options = Options(dir, ToyConfig("basic"));
  std::ostringstream log;
  try {
    Pipeline::Open(options, log).Run("attack");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingArtifact);
    EXPECT_NE(std::string(e.what()).find("sample-corpus"), std::string::npos) << e.what();
  }
}

TEST(PipelineTest, ConfigMismatchNeedsForce) {
  TempDir dir("pipe");
  auto config = ToyConfig("basic");
  auto options = Options(dir, config);
  std::ostringstream log;
  Pipeline::Open(options, log).Run("sample-corpus");
  config["seeds"]["mechanism"] = 5;
  options = Options(dir, config);
  EXPECT_EQ(RunExpectingError(options, "sample-corpus"), ErrorCode::kConfig);
  options.force = true;
  EXPECT_NO_THROW(Pipeline::Open(options, log).Run("sample-corpus"));
}

TEST(PipelineTest, ReusesManifestConfigWithoutConfigFlag) {
  TempDir dir("pipe");
  auto options = Options(dir, ToyConfig("basic"));
  std::ostringstream log;
  Pipeline::Open(options, log).Run("sample-corpus");
  options.config_path.reset();
  EXPECT_NO_THROW(Pipeline::Open(options, log).Run("rewrite"));
}

TEST(PipelineTest, AdvancedTrackGuardsValidationLeak) {
  TempDir dir("pipe");
  auto config = ToyConfig("advanced");
  config["advanced"] = {{"domain_split", "all"}};
  const auto options = Options(dir, config);
  std::ostringstream log;
  auto pipeline = Pipeline::Open(options, log);
  pipeline.Run("sample-corpus");
  pipeline.Run("rewrite");
  pipeline.Run("build-pairs");
  EXPECT_EQ(RunExpectingError(options, "finetune"), ErrorCode::kValidationLeak);
}

TEST(PipelineTest, AdvancedTrackProducesThreeStages) {
  TempDir dir("pipe");
  const auto options = Options(dir, ToyConfig("advanced"));
  std::ostringstream log;
  Pipeline::Open(options, log).Run("pipeline");
  const auto reports = json::parse(ReadFile(dir.path() / "run/reports/privacy_reports.json"));
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[2].at("stage"), "advanced2x");
  const auto tpp = json::parse(ReadFile(dir.path() / "run/models/Tpp/manifest.json"));
  EXPECT_EQ(tpp.at("parent"), "T");
}

TEST(PipelineTest, RunDirFromEnvironment) {
  TempDir dir("pipe");
  auto options = Options(dir, ToyConfig("basic"));
  options.run_dir.reset();
  ::setenv(kRunDirEnv, (dir.path() / "envrun").c_str(), 1);
  std::ostringstream log;
  auto pipeline = Pipeline::Open(options, log);
  ::unsetenv(kRunDirEnv);
  EXPECT_EQ(pipeline.run_dir(), dir.path() / "envrun");
}

TEST(PipelineTest, MissingRunDirIsConfigError) {
  TempDir dir("pipe");
  auto options = Options(dir, ToyConfig("basic"));
  options.run_dir.reset();
  ::unsetenv(kRunDirEnv);
  EXPECT_EQ(RunExpectingError(options, "sample-corpus"), ErrorCode::kConfig);
}

TEST(ExitCodeTest, Mapping) {
  EXPECT_EQ(ExitCodeFor(ErrorCode::kConfig), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kInvalidArgument), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kMissingArtifact), 3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kStageFailure), 4);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kValidationLeak), 4);
}

}  // namespace
}  // namespace rewrite_again
