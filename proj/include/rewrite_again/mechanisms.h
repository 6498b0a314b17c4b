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

#ifndef REWRITE_AGAIN_MECHANISMS_H_
#define REWRITE_AGAIN_MECHANISMS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rewrite_again/backends.h"
#include "rewrite_again/dp_core.h"
#include "rewrite_again/random.h"
#include "rewrite_again/types.h"

namespace rewrite_again {

inline constexpr std::string_view kDpPromptName = "dp-prompt";
inline constexpr std::string_view kDpBartName = "dp-bart-clv";
inline constexpr std::string_view kDefaultPromptTemplate =
    "Paraphrase the following text: {text}\nParaphrase:";

// A randomized text-to-text mechanism. Rewrite is deterministic in
// (text, rng state).
class Mechanism {
 public:
  virtual ~Mechanism() = default;

  virtual std::string_view name() const = 0;
  virtual PrivacyBudget budget() const = 0;
  virtual RewriteResult Rewrite(std::string_view text, RandomSource& rng) const = 0;
  virtual bool thread_safe() const { return false; }
};

struct DpPromptConfig {
  std::string backend_spec = "toy";
  ClipRange clip{-95.0, 8.0};
  double temperature = 1.0;
  std::string prompt_template{kDefaultPromptTemplate};
  size_t max_new_tokens = 256;

  void Validate() const;
};

struct DpBartConfig {
  std::string backend_spec = "toy";
  double epsilon = 625.0;
  double clip_value = 0.1;
  // nullopt selects "auto": Laplace with scale LatentSensitivity(C, n) / eps.
  std::optional<NoiseSpec> noise;

  void Validate() const;
};

// Word-level mechanism: temperature sampling over clipped next-token logits.
class DpPromptMechanism final : public Mechanism {
 public:
  DpPromptMechanism(DpPromptConfig config,
                    std::shared_ptr<const InferenceBackend> backend);

  std::string_view name() const override { return kDpPromptName; }
  PrivacyBudget budget() const override;
  RewriteResult Rewrite(std::string_view text, RandomSource& rng) const override;
  bool thread_safe() const override { return backend_->thread_safe(); }

  const DpPromptConfig& config() const { return config_; }

 private:
  DpPromptConfig config_;
  std::shared_ptr<const InferenceBackend> backend_;
};

struct PerturbedLatent {
  std::vector<double> clipped;
  std::vector<double> noised;
  double noise_scale = 0.0;
};

// Document-level mechanism: clip the encoder latent by value, add noise,
// decode.
class DpBartMechanism final : public Mechanism {
 public:
  DpBartMechanism(DpBartConfig config,
                  std::shared_ptr<const InferenceBackend> backend);

  std::string_view name() const override { return kDpBartName; }
  PrivacyBudget budget() const override;
  RewriteResult Rewrite(std::string_view text, RandomSource& rng) const override;
  bool thread_safe() const override { return backend_->thread_safe(); }

  NoiseSpec ResolveNoise(size_t dims) const;
  PerturbedLatent Perturb(const LatentVector& latent, RandomSource& rng) const;

  const DpBartConfig& config() const { return config_; }

 private:
  DpBartConfig config_;
  std::shared_ptr<const InferenceBackend> backend_;
};

RewriteResult DpPromptRewrite(std::string_view text, const DpPromptConfig& cfg,
                              std::shared_ptr<const InferenceBackend> backend,
                              RandomSource& rng);
RewriteResult DpBartRewrite(std::string_view text, const DpBartConfig& cfg,
                            std::shared_ptr<const InferenceBackend> backend,
                            RandomSource& rng);

struct CorpusRewrite {
  // Canonical (id-sorted) order, one entry per input record.
  std::vector<AlignedPair> pairs;
  size_t failure_count = 0;

  std::vector<AlignedPair> Successful() const;
};

// Rewrites every record. Records are sorted by id and record i in that order
// draws from RandomSource(base_seed, i), so the result does not depend on the
// input order or on `workers`. Failures are marked per pair.
CorpusRewrite RewriteCorpus(std::span<const TextRecord> records,
                            const Mechanism& mechanism, uint64_t base_seed,
                            size_t workers = 1);

// Builds a mechanism from its JSON description:
//   {"name": "dp-prompt", "clip": [lo, hi], "temperature": T,
//    "prompt_template": "...", "max_new_tokens": N}
//   {"name": "dp-bart-clv", "epsilon": e, "clip_value": C,
//    "noise": "auto" | {"distribution": "laplace", "scale": b}}
std::unique_ptr<Mechanism> MakeMechanism(
    const nlohmann::json& config, std::shared_ptr<const InferenceBackend> backend);

nlohmann::ordered_json AlignedPairToJson(const AlignedPair& pair);
AlignedPair AlignedPairFromJson(const nlohmann::json& j);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_MECHANISMS_H_
