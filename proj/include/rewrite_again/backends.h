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

#ifndef REWRITE_AGAIN_BACKENDS_H_
#define REWRITE_AGAIN_BACKENDS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rewrite_again/dp_core.h"
#include "rewrite_again/random.h"
#include "rewrite_again/types.h"

namespace rewrite_again {

using TokenId = int32_t;
using TokenSequence = std::vector<TokenId>;
using BackendOptions = nlohmann::json;

// Text-to-text model surface used by the mechanisms and by re-alignment.
//
// NextTokenLogits must return exactly vocab_size() finite values. Backends
// without an encoder/decoder split report SupportsLatent() == false and throw
// a capability error from Encode and DecodeFromLatent.
class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;

  virtual std::string kind() const = 0;
  virtual size_t vocab_size() const = 0;
  virtual size_t max_length() const = 0;
  virtual TokenId eos_token() const = 0;

  virtual TokenSequence Tokenize(std::string_view text) const = 0;
  virtual std::string Detokenize(std::span<const TokenId> tokens) const = 0;
  virtual LogitVector NextTokenLogits(
      std::span<const TokenId> prompt,
      std::span<const TokenId> generated) const = 0;

  virtual bool SupportsLatent() const { return false; }
  virtual LatentVector Encode(std::string_view text) const;
  virtual std::string DecodeFromLatent(const LatentVector& latent,
                                       RandomSource& rng) const;

  // True when const methods may be called from several threads at once.
  virtual bool thread_safe() const { return false; }
};

// Fine-tuning regime. Defaults follow the reference setup: one epoch at
// learning rate 5e-5.
struct FineTuneConfig {
  std::string base_spec = "toy";
  int epochs = 1;
  double learning_rate = 5e-5;
  uint64_t seed = 42;
  size_t max_source_length = 512;
  size_t max_target_length = 512;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static FineTuneConfig FromJson(const nlohmann::json& j);
};

class TrainableBackend : public InferenceBackend {
 public:
  // Continues training from the current state. Deterministic given the pair
  // order and cfg.seed.
  virtual void Fit(std::span<const ReversePair> pairs,
                   const FineTuneConfig& cfg) = 0;

  // Writes everything needed to reload the model into `dir`.
  virtual void SaveState(const std::filesystem::path& dir) const = 0;

  // Backend-specific trainer settings recorded in model manifests.
  virtual nlohmann::ordered_json TrainerSettings() const = 0;
};

struct TrainedModelHandle {
  std::string id;
  std::string backend_kind;
  std::filesystem::path artifact_path;

  bool operator==(const TrainedModelHandle&) const = default;
};

// Resolves a backend spec string:
//   "toy"                       deterministic in-process toy model
//   "seq2seq-checkpoint:<name>" external worker process hosting a checkpoint
// Unknown specs raise a configuration error.
std::unique_ptr<InferenceBackend> LoadBackend(std::string_view spec,
                                              const BackendOptions& options);
std::unique_ptr<TrainableBackend> LoadTrainableBackend(
    std::string_view spec, const BackendOptions& options);

// Reloads a model previously written by SaveState.
std::unique_ptr<TrainableBackend> LoadBackendState(
    std::string_view kind, const std::filesystem::path& dir);

struct Decoded {
  TokenSequence tokens;
  std::string text;
};

// Argmax decoding, ties to the lower token id. Stops at end-of-sequence or
// after min(max_new_tokens, max_length) tokens. Each step's logits are passed
// to `observer` when provided.
Decoded GreedyDecode(
    const InferenceBackend& backend, std::span<const TokenId> prompt,
    size_t max_new_tokens,
    const std::function<void(const LogitVector&)>& observer = nullptr);

enum class DecodeStrategy { kGreedy, kSample };

struct DecodeOptions {
  DecodeStrategy strategy = DecodeStrategy::kGreedy;
  double temperature = 1.0;
  size_t max_new_tokens = 256;
  uint64_t seed = 0;

  nlohmann::ordered_json ToJson() const;
  static DecodeOptions FromJson(const nlohmann::json& j);
};

// Tokenizes `text` and decodes it through the model. Raises a backend error
// if the text is non-empty but shares no token with the model vocabulary.
Decoded DecodeText(const InferenceBackend& backend, std::string_view text,
                   const DecodeOptions& options, RandomSource& rng);

// Fills the single "{text}" slot of a prompt template.
std::string FillTemplate(std::string_view prompt_template, std::string_view text);

// Number of "{text}" slots in a template.
size_t CountTemplateSlots(std::string_view prompt_template);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_BACKENDS_H_
