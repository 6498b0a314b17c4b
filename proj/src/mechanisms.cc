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

#include "rewrite_again/mechanisms.h"

#include <algorithm>
#include <numeric>
#include <thread>

#include "rewrite_again/errors.h"

namespace rewrite_again {
namespace {

void RequireText(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    ThrowInvalidArgument("cannot rewrite an empty text");
  }
}

}  // namespace

RewriteResult AlignedPair::AsRewriteResult() const {
  RewriteResult r;
  r.text = rewritten;
  r.epsilon_per_unit = epsilon;
  r.granularity = granularity;
  r.tokens_generated = tokens_generated;
  if (granularity == Granularity::kWordLevel) {
    r.naive_composed_epsilon = NaiveComposedEpsilon(epsilon, tokens_generated);
  }
  return r;
}

void DpPromptConfig::Validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    ThrowInvalidArgument("temperature must be positive");
  }
  if (CountTemplateSlots(prompt_template) != 1) {
    ThrowInvalidArgument("prompt template must contain exactly one {text} slot");
  }
  if (max_new_tokens == 0) ThrowInvalidArgument("max_new_tokens must be positive");
}

void DpBartConfig::Validate() const {
  PrivacyBudget(epsilon, Granularity::kDocumentLevel);
  if (!(clip_value > 0.0) || !std::isfinite(clip_value)) {
    ThrowInvalidArgument("clip value C must be positive");
  }
  if (noise) noise->Validate();
}

DpPromptMechanism::DpPromptMechanism(DpPromptConfig config,
                                     std::shared_ptr<const InferenceBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  config_.Validate();
  if (!backend_) ThrowInvalidArgument("mechanism needs a backend");
}

PrivacyBudget DpPromptMechanism::budget() const {
  return EpsilonFromTemperature(config_.clip, config_.temperature);
}

RewriteResult DpPromptMechanism::Rewrite(std::string_view text,
                                         RandomSource& rng) const {
  RequireText(text);
  const TokenSequence prompt =
      backend_->Tokenize(FillTemplate(config_.prompt_template, text));
  const size_t limit = std::min(config_.max_new_tokens, backend_->max_length());
  TokenSequence generated;
  while (generated.size() < limit) {
    const LogitVector logits = backend_->NextTokenLogits(prompt, generated);
    if (logits.size() != backend_->vocab_size()) {
      throw Error(ErrorCode::kBackend, "backend returned a logit vector of the "
                                       "wrong length");
    }
    const auto next = static_cast<TokenId>(
        SampleToken(logits, config_.clip, config_.temperature, rng));
    if (next == backend_->eos_token()) break;
    generated.push_back(next);
  }
  const PrivacyBudget per_token = budget();
  RewriteResult result;
  result.text = backend_->Detokenize(generated);
  result.epsilon_per_unit = per_token.epsilon();
  result.granularity = per_token.granularity();
  result.tokens_generated = static_cast<int64_t>(generated.size());
  result.naive_composed_epsilon =
      NaiveComposedEpsilon(per_token.epsilon(), result.tokens_generated);
  return result;
}

DpBartMechanism::DpBartMechanism(DpBartConfig config,
                                 std::shared_ptr<const InferenceBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  config_.Validate();
  if (!backend_) ThrowInvalidArgument("mechanism needs a backend");
  if (!backend_->SupportsLatent()) {
    throw Error(ErrorCode::kCapability,
                "dp-bart-clv needs a backend with encode/decode, got '" +
                    backend_->kind() + "'");
  }
}

PrivacyBudget DpBartMechanism::budget() const {
  return PrivacyBudget(config_.epsilon, Granularity::kDocumentLevel);
}

NoiseSpec DpBartMechanism::ResolveNoise(size_t dims) const {
  if (config_.noise) return *config_.noise;
  return NoiseSpec{NoiseDistribution::kLaplace,
                   LatentSensitivity(config_.clip_value,
                                     static_cast<int64_t>(dims)) /
                       config_.epsilon};
}

PerturbedLatent DpBartMechanism::Perturb(const LatentVector& latent,
                                         RandomSource& rng) const {
  PerturbedLatent out;
  out.clipped = ClipValues(latent.values(),
                           ClipRange(-config_.clip_value, config_.clip_value));
  const NoiseSpec noise = ResolveNoise(out.clipped.size());
  out.noise_scale = noise.scale;
  const std::vector<double> draws = SampleNoise(noise, out.clipped.size(), rng);
  out.noised.resize(out.clipped.size());
  for (size_t i = 0; i < out.clipped.size(); ++i) {
    out.noised[i] = out.clipped[i] + draws[i];
  }
  return out;
}

RewriteResult DpBartMechanism::Rewrite(std::string_view text,
                                       RandomSource& rng) const {
  RequireText(text);
  const PerturbedLatent perturbed = Perturb(backend_->Encode(text), rng);
  RewriteResult result;
  result.text = backend_->DecodeFromLatent(LatentVector(perturbed.noised), rng);
  result.epsilon_per_unit = config_.epsilon;
  result.granularity = Granularity::kDocumentLevel;
  result.tokens_generated =
      static_cast<int64_t>(backend_->Tokenize(result.text).size());
  return result;
}

RewriteResult DpPromptRewrite(std::string_view text, const DpPromptConfig& cfg,
                              std::shared_ptr<const InferenceBackend> backend,
                              RandomSource& rng) {
  return DpPromptMechanism(cfg, std::move(backend)).Rewrite(text, rng);
}

RewriteResult DpBartRewrite(std::string_view text, const DpBartConfig& cfg,
                            std::shared_ptr<const InferenceBackend> backend,
                            RandomSource& rng) {
  return DpBartMechanism(cfg, std::move(backend)).Rewrite(text, rng);
}

std::vector<AlignedPair> CorpusRewrite::Successful() const {
  std::vector<AlignedPair> out;
  for (const auto& pair : pairs) {
    if (!pair.error) out.push_back(pair);
  }
  return out;
}

CorpusRewrite RewriteCorpus(std::span<const TextRecord> records,
                            const Mechanism& mechanism, uint64_t base_seed,
                            size_t workers) {
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return records[a].id < records[b].id; });
  for (size_t i = 1; i < order.size(); ++i) {
    if (records[order[i]].id == records[order[i - 1]].id) {
      ThrowValidation("duplicate record id '" + records[order[i]].id + "'");
    }
  }

  const PrivacyBudget budget = mechanism.budget();
  CorpusRewrite out;
  out.pairs.resize(order.size());
  auto process = [&](size_t i) {
    const TextRecord& record = records[order[i]];
    AlignedPair& pair = out.pairs[i];
    pair.id = record.id;
    pair.original = record.text;
    pair.mechanism = std::string(mechanism.name());
    pair.epsilon = budget.epsilon();
    pair.granularity = budget.granularity();
    try {
      RandomSource rng(base_seed, i);
      RewriteResult result = mechanism.Rewrite(record.text, rng);
      pair.rewritten = std::move(result.text);
      pair.tokens_generated = result.tokens_generated;
    } catch (const std::exception& e) {
      pair.error = e.what();
    }
  };

  if (workers <= 1 || !mechanism.thread_safe() || order.size() < 2) {
    for (size_t i = 0; i < order.size(); ++i) process(i);
  } else {
    const size_t n = std::min(workers, order.size());
    std::vector<std::jthread> threads;
    for (size_t w = 0; w < n; ++w) {
      threads.emplace_back([&, w] {
        for (size_t i = w; i < order.size(); i += n) process(i);
      });
    }
  }
  for (const auto& pair : out.pairs) {
    if (pair.error) ++out.failure_count;
  }
  return out;
}

std::unique_ptr<Mechanism> MakeMechanism(
    const nlohmann::json& config, std::shared_ptr<const InferenceBackend> backend) {
  const std::string name = config.value("name", std::string());
  try {
    if (name == kDpPromptName) {
      DpPromptConfig cfg;
      cfg.backend_spec = config.value("backend_spec", cfg.backend_spec);
      if (config.contains("clip")) {
        const auto& clip = config.at("clip");
        if (!clip.is_array() || clip.size() != 2) {
          throw Error(ErrorCode::kConfig,
                      "dp-prompt clip must be [low, high] once resolved");
        }
        cfg.clip = ClipRange(clip[0].get<double>(), clip[1].get<double>());
      }
      cfg.temperature = config.value("temperature", cfg.temperature);
      cfg.prompt_template = config.value("prompt_template", cfg.prompt_template);
      cfg.max_new_tokens = config.value("max_new_tokens", cfg.max_new_tokens);
      return std::make_unique<DpPromptMechanism>(cfg, std::move(backend));
    }
    if (name == kDpBartName) {
      DpBartConfig cfg;
      cfg.backend_spec = config.value("backend_spec", cfg.backend_spec);
      cfg.epsilon = config.value("epsilon", cfg.epsilon);
      cfg.clip_value = config.value("clip_value", cfg.clip_value);
      if (config.contains("noise") && !(config.at("noise").is_string() &&
                                        config.at("noise") == "auto")) {
        const auto& noise = config.at("noise");
        if (noise.value("distribution", std::string("laplace")) != "laplace") {
          throw Error(ErrorCode::kConfig, "only laplace noise is supported");
        }
        cfg.noise = NoiseSpec{NoiseDistribution::kLaplace,
                              noise.at("scale").get<double>()};
      }
      return std::make_unique<DpBartMechanism>(cfg, std::move(backend));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, "bad mechanism config: " + std::string(e.what()));
  }
  throw Error(ErrorCode::kConfig, "unknown mechanism '" + name +
                                      "' (expected dp-prompt or dp-bart-clv)");
}

nlohmann::ordered_json AlignedPairToJson(const AlignedPair& pair) {
  nlohmann::ordered_json j;
  j["id"] = pair.id;
  j["original"] = pair.original;
  j["rewritten"] = pair.rewritten;
  j["mechanism"] = pair.mechanism;
  j["epsilon"] = pair.epsilon;
  j["granularity"] = GranularityName(pair.granularity);
  j["tokens_generated"] = pair.tokens_generated;
  if (pair.error) j["error"] = *pair.error;
  return j;
}

AlignedPair AlignedPairFromJson(const nlohmann::json& j) {
  AlignedPair pair;
  pair.id = j.at("id").get<std::string>();
  pair.original = j.at("original").get<std::string>();
  pair.rewritten = j.at("rewritten").get<std::string>();
  pair.mechanism = j.at("mechanism").get<std::string>();
  pair.epsilon = j.at("epsilon").get<double>();
  pair.granularity = ParseGranularity(j.at("granularity").get<std::string>());
  pair.tokens_generated = j.at("tokens_generated").get<int64_t>();
  if (j.contains("error")) pair.error = j.at("error").get<std::string>();
  return pair;
}

}  // namespace rewrite_again
