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

#ifndef REWRITE_AGAIN_DP_CORE_H_
#define REWRITE_AGAIN_DP_CORE_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rewrite_again/errors.h"
#include "rewrite_again/random.h"

namespace rewrite_again {

class InferenceBackend;
struct TextRecord;

enum class Granularity { kWordLevel, kDocumentLevel };

std::string_view GranularityName(Granularity granularity);
Granularity ParseGranularity(std::string_view name);

// Pure epsilon budget together with the unit it protects.
class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, Granularity granularity);

  double epsilon() const { return epsilon_; }
  Granularity granularity() const { return granularity_; }

  bool operator==(const PrivacyBudget&) const = default;

 private:
  double epsilon_;
  Granularity granularity_;
};

// Closed interval [low, high] with low < high. For logit clipping the width
// is the sensitivity of a single logit.
class ClipRange {
 public:
  ClipRange(double low, double high);

  double low() const { return low_; }
  double high() const { return high_; }
  double width() const { return high_ - low_; }

  double Clamp(double value) const;

  bool operator==(const ClipRange&) const = default;

 private:
  double low_;
  double high_;
};

// Non-empty vector of finite reals. The tag keeps logits and latents apart.
template <typename Tag>
class FiniteVector {
 public:
  explicit FiniteVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) ThrowInvalidArgument("vector must be non-empty");
    for (double v : values_) {
      if (!std::isfinite(v)) ThrowInvalidArgument("vector entries must be finite");
    }
  }

  std::span<const double> values() const { return values_; }
  size_t size() const { return values_.size(); }
  double operator[](size_t i) const { return values_[i]; }

  bool operator==(const FiniteVector&) const = default;

 private:
  std::vector<double> values_;
};

using LogitVector = FiniteVector<struct LogitTag>;
using LatentVector = FiniteVector<struct LatentTag>;

enum class NoiseDistribution { kLaplace };

struct NoiseSpec {
  NoiseDistribution distribution = NoiseDistribution::kLaplace;
  double scale = 1.0;

  void Validate() const;
};

// epsilon = 2 * width / T for temperature sampling over logits clipped to
// `clip`. Word-level: the guarantee covers one generated token.
PrivacyBudget EpsilonFromTemperature(const ClipRange& clip, double temperature);

// Inverse of EpsilonFromTemperature.
double TemperatureFromEpsilon(const ClipRange& clip, double epsilon);

// Elementwise min(max(v, low), high). Rejects empty input and NaN.
std::vector<double> ClipValues(std::span<const double> values,
                               const ClipRange& clip);

// softmax(logits / T), computed after subtracting the maximum logit.
std::vector<double> TemperatureSoftmax(std::span<const double> logits,
                                       double temperature);

// Exponential-mechanism token selection: clip, then draw one index from
// softmax(clipped / T) by inverting the CDF with a single Uniform01 draw. The
// first index whose cumulative mass exceeds the draw wins, so ties resolve
// toward the lower index.
size_t SampleToken(const LogitVector& logits, const ClipRange& clip,
                   double temperature, RandomSource& rng);

// L1 sensitivity 2*C*n of an n-dimensional vector clipped to [-C, C] per
// coordinate.
double LatentSensitivity(double clip_value, int64_t dims);

// `dims` iid draws from Laplace(0, scale) by inverse-CDF sampling.
std::vector<double> LaplaceNoise(double scale, size_t dims, RandomSource& rng);

std::vector<double> SampleNoise(const NoiseSpec& spec, size_t dims,
                                RandomSource& rng);

// Sequential composition of a per-token epsilon over `tokens` steps. Reported
// alongside the per-token guarantee, never in place of it.
double NaiveComposedEpsilon(double epsilon_per_token, int64_t tokens);

// Observed (min, max) over every decoder-step logit while greedily decoding
// the first `n` texts through `prompt_template`.
ClipRange EstimateLogitRange(const InferenceBackend& backend,
                             std::span<const TextRecord> texts, size_t n = 100,
                             std::string_view prompt_template = "{text}",
                             size_t max_new_tokens = 256);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_DP_CORE_H_
