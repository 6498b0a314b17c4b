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

#include "rewrite_again/backends.h"

#include <algorithm>
#include <string>

#include "rewrite_again/errors.h"
#include "rewrite_again/external_process.h"
#include "rewrite_again/toy_backend.h"

namespace rewrite_again {
namespace {

constexpr std::string_view kCheckpointPrefix = "seq2seq-checkpoint:";
constexpr std::string_view kTextSlot = "{text}";

}  // namespace

LatentVector InferenceBackend::Encode(std::string_view) const {
  throw Error(ErrorCode::kCapability,
              "backend '" + kind() + "' has no encoder latent");
}

std::string InferenceBackend::DecodeFromLatent(const LatentVector&,
                                               RandomSource&) const {
  throw Error(ErrorCode::kCapability,
              "backend '" + kind() + "' cannot decode from a latent");
}

void FineTuneConfig::Validate() const {
  if (epochs < 1) ThrowInvalidArgument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) {
    ThrowInvalidArgument("learning rate must be positive");
  }
  if (max_source_length == 0 || max_target_length == 0) {
    ThrowInvalidArgument("max source/target lengths must be positive");
  }
}

nlohmann::ordered_json FineTuneConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["base_spec"] = base_spec;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["max_source_length"] = max_source_length;
  j["max_target_length"] = max_target_length;
  return j;
}

FineTuneConfig FineTuneConfig::FromJson(const nlohmann::json& j) {
  FineTuneConfig cfg;
  cfg.base_spec = j.value("base_spec", cfg.base_spec);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.max_source_length = j.value("max_source_length", cfg.max_source_length);
  cfg.max_target_length = j.value("max_target_length", cfg.max_target_length);
  cfg.Validate();
  return cfg;
}

std::unique_ptr<InferenceBackend> LoadBackend(std::string_view spec,
                                              const BackendOptions& options) {
  return LoadTrainableBackend(spec, options);
}

std::unique_ptr<TrainableBackend> LoadTrainableBackend(
    std::string_view spec, const BackendOptions& options) {
  const BackendOptions opts = options.is_null() ? BackendOptions::object() : options;
  if (spec == "toy") {
    return std::make_unique<ToyBackend>(ToyBackendOptions::FromJson(opts));
  }
  if (spec.starts_with(kCheckpointPrefix)) {
    std::string checkpoint(spec.substr(kCheckpointPrefix.size()));
    if (checkpoint.empty()) {
      throw Error(ErrorCode::kConfig, "checkpoint spec names no checkpoint");
    }
    return ExternalSeq2SeqBackend::Start(checkpoint, opts);
  }
  throw Error(ErrorCode::kConfig,
              "unknown backend spec '" + std::string(spec) +
                  "' (expected 'toy' or 'seq2seq-checkpoint:<name>')");
}

std::unique_ptr<TrainableBackend> LoadBackendState(
    std::string_view kind, const std::filesystem::path& dir) {
  if (kind == "toy") return ToyBackend::LoadState(dir);
  if (kind == "seq2seq-checkpoint") return ExternalSeq2SeqBackend::LoadState(dir);
  throw Error(ErrorCode::kLoad,
              "no loader for backend kind '" + std::string(kind) + "'");
}

Decoded GreedyDecode(const InferenceBackend& backend,
                     std::span<const TokenId> prompt, size_t max_new_tokens,
                     const std::function<void(const LogitVector&)>& observer) {
  Decoded out;
  const size_t limit = std::min(max_new_tokens, backend.max_length());
  while (out.tokens.size() < limit) {
    const LogitVector logits = backend.NextTokenLogits(prompt, out.tokens);
    if (logits.size() != backend.vocab_size()) {
      throw Error(ErrorCode::kBackend, "backend returned " +
                                           std::to_string(logits.size()) +
                                           " logits for a vocabulary of " +
                                           std::to_string(backend.vocab_size()));
    }
    if (observer) observer(logits);
    const auto values = logits.values();
    const TokenId next = static_cast<TokenId>(
        std::max_element(values.begin(), values.end()) - values.begin());
    if (next == backend.eos_token()) break;
    out.tokens.push_back(next);
  }
  out.text = backend.Detokenize(out.tokens);
  return out;
}

nlohmann::ordered_json DecodeOptions::ToJson() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy == DecodeStrategy::kGreedy ? "greedy" : "sample";
  j["temperature"] = temperature;
  j["max_new_tokens"] = max_new_tokens;
  j["seed"] = seed;
  return j;
}

DecodeOptions DecodeOptions::FromJson(const nlohmann::json& j) {
  DecodeOptions o;
  const std::string strategy = j.value("strategy", std::string("greedy"));
  if (strategy == "greedy") {
    o.strategy = DecodeStrategy::kGreedy;
  } else if (strategy == "sample") {
    o.strategy = DecodeStrategy::kSample;
  } else {
    throw Error(ErrorCode::kConfig, "unknown decode strategy '" + strategy + "'");
  }
  o.temperature = j.value("temperature", o.temperature);
  o.max_new_tokens = j.value("max_new_tokens", o.max_new_tokens);
  o.seed = j.value("seed", o.seed);
  if (!(o.temperature > 0.0)) ThrowInvalidArgument("temperature must be positive");
  if (o.max_new_tokens == 0) ThrowInvalidArgument("max_new_tokens must be positive");
  return o;
}

Decoded DecodeText(const InferenceBackend& backend, std::string_view text,
                   const DecodeOptions& options, RandomSource& rng) {
  const TokenSequence prompt = backend.Tokenize(text);
  if (prompt.empty() && text.find_first_not_of(" \t\r\n") != std::string_view::npos) {
    throw Error(ErrorCode::kBackend,
                "input shares no token with the model vocabulary");
  }
  if (options.strategy == DecodeStrategy::kGreedy) {
    return GreedyDecode(backend, prompt, options.max_new_tokens);
  }
  Decoded out;
  const size_t limit = std::min(options.max_new_tokens, backend.max_length());
  while (out.tokens.size() < limit) {
    const LogitVector logits = backend.NextTokenLogits(prompt, out.tokens);
    const std::vector<double> probs =
        TemperatureSoftmax(logits.values(), options.temperature);
    const double u = rng.Uniform01();
    double cumulative = 0.0;
    TokenId next = static_cast<TokenId>(probs.size() - 1);
    for (size_t i = 0; i < probs.size(); ++i) {
      cumulative += probs[i];
      if (u < cumulative) {
        next = static_cast<TokenId>(i);
        break;
      }
    }
    if (next == backend.eos_token()) break;
    out.tokens.push_back(next);
  }
  out.text = backend.Detokenize(out.tokens);
  return out;
}

size_t CountTemplateSlots(std::string_view prompt_template) {
  size_t count = 0;
  for (size_t pos = prompt_template.find(kTextSlot);
       pos != std::string_view::npos;
       pos = prompt_template.find(kTextSlot, pos + kTextSlot.size())) {
    ++count;
  }
  return count;
}

std::string FillTemplate(std::string_view prompt_template, std::string_view text) {
  const size_t pos = prompt_template.find(kTextSlot);
  if (pos == std::string_view::npos || CountTemplateSlots(prompt_template) != 1) {
    ThrowInvalidArgument("prompt template must contain exactly one {text} slot");
  }
  std::string out(prompt_template.substr(0, pos));
  out += text;
  out += prompt_template.substr(pos + kTextSlot.size());
  return out;
}

}  // namespace rewrite_again
