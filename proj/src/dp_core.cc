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

#include "rewrite_again/dp_core.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rewrite_again/backends.h"
#include "rewrite_again/types.h"

namespace rewrite_again {

std::string_view GranularityName(Granularity granularity) {
  switch (granularity) {
    case Granularity::kWordLevel:
      return "word_level";
    case Granularity::kDocumentLevel:
      return "document_level";
  }
  return "unknown";
}

Granularity ParseGranularity(std::string_view name) {
  if (name == "word_level") return Granularity::kWordLevel;
  if (name == "document_level") return Granularity::kDocumentLevel;
  ThrowInvalidArgument("unknown granularity '" + std::string(name) + "'");
}

PrivacyBudget::PrivacyBudget(double epsilon, Granularity granularity)
    : epsilon_(epsilon), granularity_(granularity) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    ThrowInvalidArgument("epsilon must be positive and finite, got " +
                         std::to_string(epsilon));
  }
}

ClipRange::ClipRange(double low, double high) : low_(low), high_(high) {
  if (!std::isfinite(low) || !std::isfinite(high)) {
    ThrowInvalidArgument("clip bounds must be finite");
  }
  if (!(low < high)) {
    ThrowInvalidArgument("clip range requires low < high, got (" +
                         std::to_string(low) + ", " + std::to_string(high) +
                         ")");
  }
}

double ClipRange::Clamp(double value) const {
  return std::min(std::max(value, low_), high_);
}

void NoiseSpec::Validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    ThrowInvalidArgument("noise scale must be positive and finite");
  }
}

PrivacyBudget EpsilonFromTemperature(const ClipRange& clip,
                                     double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    ThrowInvalidArgument("temperature must be positive");
  }
  return PrivacyBudget(2.0 * clip.width() / temperature,
                       Granularity::kWordLevel);
}

double TemperatureFromEpsilon(const ClipRange& clip, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    ThrowInvalidArgument("epsilon must be positive");
  }
  return 2.0 * clip.width() / epsilon;
}

std::vector<double> ClipValues(std::span<const double> values,
                               const ClipRange& clip) {
  if (values.empty()) ThrowInvalidArgument("cannot clip an empty vector");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (std::isnan(v)) ThrowInvalidArgument("cannot clip NaN");
    out.push_back(clip.Clamp(v));
  }
  return out;
}

std::vector<double> TemperatureSoftmax(std::span<const double> logits,
                                       double temperature) {
  if (logits.empty()) ThrowInvalidArgument("softmax over empty logits");
  if (!(temperature > 0.0)) ThrowInvalidArgument("temperature must be positive");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - max_logit) / temperature);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

size_t SampleToken(const LogitVector& logits, const ClipRange& clip,
                   double temperature, RandomSource& rng) {
  const std::vector<double> clipped = ClipValues(logits.values(), clip);
  const std::vector<double> probs = TemperatureSoftmax(clipped, temperature);
  const double u = rng.Uniform01();
  double cumulative = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  // Rounding left the total just under u; take the last token with mass.
  for (size_t i = probs.size(); i > 0; --i) {
    if (probs[i - 1] > 0.0) return i - 1;
  }
  return probs.size() - 1;
}

double LatentSensitivity(double clip_value, int64_t dims) {
  if (!(clip_value > 0.0) || !std::isfinite(clip_value)) {
    ThrowInvalidArgument("clip value C must be positive");
  }
  if (dims < 1) ThrowInvalidArgument("latent dimension must be at least 1");
  return 2.0 * clip_value * static_cast<double>(dims);
}

std::vector<double> LaplaceNoise(double scale, size_t dims, RandomSource& rng) {
  NoiseSpec{NoiseDistribution::kLaplace, scale}.Validate();
  std::vector<double> noise(dims);
  for (double& x : noise) {
    // u in (-1/2, 1/2); X = -b * sgn(u) * ln(1 - 2|u|).
    const double u = rng.UniformOpen01() - 0.5;
    const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
    x = u < 0.0 ? -magnitude : magnitude;
  }
  return noise;
}

std::vector<double> SampleNoise(const NoiseSpec& spec, size_t dims,
                                RandomSource& rng) {
  spec.Validate();
  switch (spec.distribution) {
    case NoiseDistribution::kLaplace:
      return LaplaceNoise(spec.scale, dims, rng);
  }
  ThrowInvalidArgument("unsupported noise distribution");
}

double NaiveComposedEpsilon(double epsilon_per_token, int64_t tokens) {
  if (tokens < 0) ThrowInvalidArgument("token count must be non-negative");
  return epsilon_per_token * static_cast<double>(tokens);
}

ClipRange EstimateLogitRange(const InferenceBackend& backend,
                             std::span<const TextRecord> texts, size_t n,
                             std::string_view prompt_template,
                             size_t max_new_tokens) {
  if (n == 0) ThrowInvalidArgument("logit range estimation needs n > 0");
  if (texts.size() < n) {
    ThrowInvalidArgument("logit range estimation needs " + std::to_string(n) +
                         " texts, got " + std::to_string(texts.size()));
  }
  double low = std::numeric_limits<double>::infinity();
  double high = -std::numeric_limits<double>::infinity();
  auto observe = [&](const LogitVector& logits) {
    for (double v : logits.values()) {
      low = std::min(low, v);
      high = std::max(high, v);
    }
  };
  for (size_t i = 0; i < n; ++i) {
    const TokenSequence prompt =
        backend.Tokenize(FillTemplate(prompt_template, texts[i].text));
    GreedyDecode(backend, prompt, max_new_tokens, observe);
  }
  if (!(low < high)) {
    ThrowInvalidArgument("observed logits are constant; clip range undefined");
  }
  return ClipRange(low, high);
}

}  // namespace rewrite_again
