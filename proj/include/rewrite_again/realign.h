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

#ifndef REWRITE_AGAIN_REALIGN_H_
#define REWRITE_AGAIN_REALIGN_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewrite_again/backends.h"
#include "rewrite_again/mechanisms.h"
#include "rewrite_again/types.h"

namespace rewrite_again {

enum class Track { kBasic, kAdvanced };

std::string_view TrackName(Track track);
Track ParseTrack(std::string_view name);

inline constexpr char kModelManifestFile[] = "manifest.json";

// Content hash of a pair sequence in the given order.
std::string PairsFingerprint(std::span<const ReversePair> pairs);

// Trains model T (rewritten -> original) from `backend`'s initial state and
// stores it under models_dir/id with a manifest recording the training
// config, the data fingerprint and the aligned-corpus fingerprint. Pair
// order is shuffled once with cfg.seed before fitting.
TrainedModelHandle TrainT(std::span<const ReversePair> pairs,
                          const FineTuneConfig& cfg, TrainableBackend& backend,
                          const std::filesystem::path& models_dir,
                          const std::string& id,
                          const std::string& aligned_corpus_fingerprint);

// Ids that must not appear in domain fine-tuning data.
struct LeakGuard {
  std::set<std::string> validation_ids;
  // Reproduction experiments may knowingly train on validation ids.
  bool allow_overlap = false;
};

// Continues training `base` on domain pairs to obtain T++. The manifest links
// the parent id and the SHA-256 of the parent manifest.
TrainedModelHandle TrainTpp(const TrainedModelHandle& base,
                            std::span<const ReversePair> domain_pairs,
                            const FineTuneConfig& cfg, const LeakGuard& guard,
                            const std::filesystem::path& models_dir,
                            const std::string& id);

// Reads models_dir/id/manifest.json.
TrainedModelHandle ResolveModel(const std::filesystem::path& model_dir);
nlohmann::json ReadModelManifest(const TrainedModelHandle& handle);
std::unique_ptr<TrainableBackend> LoadTrainedModel(const TrainedModelHandle& handle);

// Checks the T++ -> T -> aligned corpus chain from manifests alone. Raises a
// validation error describing the first broken link.
void VerifyLineage(const TrainedModelHandle& handle);

struct RerewriteItem {
  // Budget fields are copied unchanged from the input. On failure the text
  // is empty and `error` is set.
  RewriteResult result;
  std::optional<std::string> error;
};

// Decodes every rewritten text through `model`. Item i uses
// RandomSource(options.seed, i) when sampling. Post-processing spends no
// budget, so epsilon, granularity and the composed epsilon pass through.
std::vector<RerewriteItem> Rerewrite(std::span<const RewriteResult> results,
                                     const InferenceBackend& model,
                                     const DecodeOptions& options = {});

// A mechanism followed by a re-alignment model. Reports the base mechanism's
// name and budget.
class RealignedMechanism final : public Mechanism {
 public:
  RealignedMechanism(std::shared_ptr<const Mechanism> base,
                     std::shared_ptr<const InferenceBackend> model,
                     DecodeOptions options);

  std::string_view name() const override { return base_->name(); }
  PrivacyBudget budget() const override { return base_->budget(); }
  RewriteResult Rewrite(std::string_view text, RandomSource& rng) const override;
  bool thread_safe() const override {
    return base_->thread_safe() && model_->thread_safe();
  }

 private:
  std::shared_ptr<const Mechanism> base_;
  std::shared_ptr<const InferenceBackend> model_;
  DecodeOptions options_;
};

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_REALIGN_H_
