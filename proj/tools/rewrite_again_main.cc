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

// Command-line driver for the rewrite / re-align / evaluate pipeline.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rewrite_again/errors.h"
#include "rewrite_again/pipeline.h"

namespace {

struct SubcommandHelp {
  const char* name;
  const char* description;
};

constexpr SubcommandHelp kSubcommands[] = {
    {"sample-corpus", "Sample the public corpus and split the private dataset"},
    {"rewrite", "Privatize the public and private corpora with the mechanism"},
    {"build-pairs", "Build reversed (rewritten -> original) training pairs"},
    {"finetune", "Train the re-alignment model T (and T++ on the advanced track)"},
    {"rerewrite", "Re-rewrite the released texts with T or T++"},
    {"attack", "Run static and adaptive attribute inference attacks"},
    {"similarity", "Score semantic similarity of released texts"},
    {"report", "Assemble privacy reports and print the results table"},
    {"pipeline", "Run every stage for the configured track"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privatize texts with DP rewriting mechanisms, re-align them, and "
               "measure empirical privacy."};
  app.require_subcommand(1);

  rewrite_again::CliOptions options;
  std::string config_path;
  std::string run_dir;
  std::string track;
  std::string stage;
  uint64_t seed = 0;
  std::vector<std::string> extra_runs;

  for (const auto& help : kSubcommands) {
    CLI::App* sub = app.add_subcommand(help.name, help.description);
    sub->add_option("--config", config_path, "JSON run config");
    sub->add_option("--run-dir", run_dir,
                    std::string("Run directory (overrides config and $") +
                        rewrite_again::kRunDirEnv + ")");
    sub->add_option("--track", track, "basic or advanced")
        ->check(CLI::IsMember({"basic", "advanced"}));
    sub->add_option("--seed", seed, "Mechanism sampling seed");
    sub->add_option("--stage", stage, "Text stage: rewritten, basic2x or advanced2x")
        ->check(CLI::IsMember({"rewritten", "basic2x", "advanced2x"}));
    sub->add_flag("--force", options.force,
                  "Overwrite a run created with another config and rerun stages");
    if (std::string(help.name) == "report") {
      sub->add_option("--merge", extra_runs, "Extra run directories to tabulate");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (!config_path.empty()) options.config_path = config_path;
  if (!run_dir.empty()) options.run_dir = run_dir;
  if (!track.empty()) options.track = track;
  if (!stage.empty()) options.stage = stage;
  if (chosen->count("--seed") > 0) options.seed = seed;
  for (const auto& run : extra_runs) options.extra_runs.emplace_back(run);

  try {
    auto pipeline = rewrite_again::Pipeline::Open(options, std::cerr);
    pipeline.Run(chosen->get_name());
    if (!pipeline.last_report().empty()) std::cout << pipeline.last_report();
  } catch (const rewrite_again::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rewrite_again::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
