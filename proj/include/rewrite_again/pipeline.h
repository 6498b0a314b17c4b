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

#ifndef REWRITE_AGAIN_PIPELINE_H_
#define REWRITE_AGAIN_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rewrite_again/errors.h"

namespace rewrite_again {

inline constexpr char kRunDirEnv[] = "REWRITE_AGAIN_RUN_DIR";
inline constexpr char kRunManifestFile[] = "manifest.json";

// Subcommands in pipeline order, followed by "pipeline".
const std::vector<std::string>& SubcommandNames();

struct CliOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> run_dir;
  std::optional<std::string> track;
  std::optional<uint64_t> seed;
  // Text stage for rerewrite/attack/similarity: rewritten|basic2x|advanced2x.
  std::optional<std::string> stage;
  bool force = false;
  // Additional run directories merged by `report`.
  std::vector<std::filesystem::path> extra_runs;
};

// Defaults for every config key. User configs are merged over this.
nlohmann::json DefaultRunConfig();

// Loads and merges the config file, applies CLI overrides, and resolves
// relative paths against the config file's directory.
nlohmann::json ResolveRunConfig(const CliOptions& options);

// Exit status for the CLI: 0 success, 2 config error, 3 missing prerequisite
// artifact, 4 stage failure.
int ExitCodeFor(ErrorCode code);

// One run directory with its manifest. Stages record a fingerprint of the
// effective config and their input artifacts; a stage whose fingerprint and
// recorded outputs still match is skipped.
class Pipeline {
 public:
  // Resolves the config (falling back to the snapshot in an existing run
  // manifest when no config file is given) and refuses to reuse a run
  // directory created with a different config unless `force` is set.
  static Pipeline Open(const CliOptions& options, std::ostream& log);

  // Runs one subcommand ("pipeline" chains all stages for the track).
  void Run(std::string_view subcommand);

  const std::filesystem::path& run_dir() const { return run_dir_; }
  const nlohmann::json& config() const { return config_; }
  const nlohmann::json& manifest() const { return manifest_; }

  // Table rendering printed by `report`.
  const std::string& last_report() const { return last_report_; }

 private:
  Pipeline(nlohmann::json config, std::filesystem::path run_dir,
           CliOptions options, std::ostream& log);

  struct StageSpec {
    std::string name;
    std::vector<std::string> inputs;   // run-relative, must exist
    std::vector<std::string> outputs;  // run-relative
  };

  void RunStage(const StageSpec& spec, const std::function<nlohmann::json()>& body);
  std::string StageFingerprint(const StageSpec& spec) const;
  void SaveManifest();
  std::filesystem::path Path(std::string_view relative) const;

  std::vector<std::string> ReleaseStages() const;
  std::vector<std::string> SelectedStages() const;
  nlohmann::json BackendOptions() const;

  void SampleCorpus();
  void Rewrite();
  void BuildPairs();
  void Finetune();
  void Rerewrite();
  void Attack();
  void Similarity();
  void Report();

  nlohmann::json config_;
  std::filesystem::path run_dir_;
  CliOptions options_;
  std::ostream& log_;
  nlohmann::json manifest_;
  std::string last_report_;
};

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_PIPELINE_H_
