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

#ifndef REWRITE_AGAIN_TOY_BACKEND_H_
#define REWRITE_AGAIN_TOY_BACKEND_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rewrite_again/backends.h"

namespace rewrite_again {

inline constexpr std::string_view kEosToken = "<eos>";

struct ToyBackendOptions {
  // Whitespace-delimited word vocabulary. "<eos>" is appended when absent.
  std::vector<std::string> vocab;
  // Logits returned for contexts without a table entry. Zeros when empty.
  std::vector<double> default_row;
  // Exact-context overrides keyed by ToyBackend::ContextKey.
  std::map<uint64_t, std::vector<double>> table;
  // Added to the logit of every vocabulary word present in the prompt.
  double copy_bias = 0.0;
  // Added to the end-of-sequence logit once per already generated token.
  double eos_step_bias = 0.0;
  // Margin by which a memorized continuation beats every other token.
  double memory_margin = 10.0;
  size_t latent_dims = 16;
  // Number of words emitted by DecodeFromLatent.
  size_t decode_words = 8;
  size_t max_length = 256;
  uint64_t seed = 0;

  static ToyBackendOptions FromJson(const nlohmann::json& j);
  nlohmann::ordered_json ToJson() const;
};

// Deterministic stand-in for a pretrained text-to-text model.
//
// Logits come from the exact-context table, else the default row with the
// copy and end-of-sequence biases applied. Fit memorizes (source, target)
// token sequences. When the prompt shares words with a memorized source, the
// entry with the highest Jaccard overlap (latest entry on ties) drives the
// continuation: the next target token, then end-of-sequence, is lifted
// memory_margin above the rest of the row.
//
// Encode averages per-word pseudo-random vectors in [-1, 1]^latent_dims
// derived from a hash of each word. DecodeFromLatent emits the decode_words
// vocabulary words whose vectors score highest against the latent.
class ToyBackend final : public TrainableBackend {
 public:
  explicit ToyBackend(ToyBackendOptions options);

  static uint64_t ContextKey(std::span<const TokenId> prompt,
                             std::span<const TokenId> generated);

  std::string kind() const override { return "toy"; }
  size_t vocab_size() const override { return vocab_.size(); }
  size_t max_length() const override { return options_.max_length; }
  TokenId eos_token() const override { return eos_; }

  TokenSequence Tokenize(std::string_view text) const override;
  std::string Detokenize(std::span<const TokenId> tokens) const override;
  LogitVector NextTokenLogits(std::span<const TokenId> prompt,
                              std::span<const TokenId> generated) const override;

  bool SupportsLatent() const override { return true; }
  LatentVector Encode(std::string_view text) const override;
  std::string DecodeFromLatent(const LatentVector& latent,
                               RandomSource& rng) const override;

  bool thread_safe() const override { return true; }

  void Fit(std::span<const ReversePair> pairs,
           const FineTuneConfig& cfg) override;
  void SaveState(const std::filesystem::path& dir) const override;
  nlohmann::ordered_json TrainerSettings() const override;

  static std::unique_ptr<ToyBackend> LoadState(const std::filesystem::path& dir);

  size_t memory_size() const { return memory_.size(); }
  const ToyBackendOptions& options() const { return options_; }

 private:
  struct MemoryEntry {
    TokenSequence source;
    TokenSequence target;
    std::vector<TokenId> distinct_source;  // sorted unique
  };

  std::vector<double> WordVector(std::string_view word) const;
  // Index of the best memorized source for `prompt`, or -1.
  int64_t BestMemoryMatch(std::span<const TokenId> prompt) const;
  void Memorize(TokenSequence source, TokenSequence target);

  ToyBackendOptions options_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
  std::vector<MemoryEntry> memory_;
  // token -> memory entries whose source contains it
  std::unordered_map<TokenId, std::vector<uint32_t>> postings_;
};

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_TOY_BACKEND_H_
