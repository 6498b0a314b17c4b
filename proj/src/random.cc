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

#include "rewrite_again/random.h"

#include "rewrite_again/errors.h"

namespace rewrite_again {
namespace {

constexpr double kTwoPowMinus53 = 1.0 / 9007199254740992.0;

uint64_t EngineSeed(uint64_t seed, uint64_t stream) {
  return SplitMix64(SplitMix64(seed) ^
                    SplitMix64(stream + 0x9E3779B97F4A7C15ULL));
}

}  // namespace

uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomSource::RandomSource(uint64_t seed, uint64_t stream)
    : seed_(seed), stream_(stream), engine_(EngineSeed(seed, stream)) {}

double RandomSource::Uniform01() {
  return static_cast<double>(engine_() >> 11) * kTwoPowMinus53;
}

double RandomSource::UniformOpen01() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * kTwoPowMinus53;
}

uint64_t RandomSource::UniformIndex(uint64_t n) {
  if (n == 0) ThrowInvalidArgument("UniformIndex requires n > 0");
  // Reject the top partial block so every residue is equally likely.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x > limit);
  return x % n;
}

}  // namespace rewrite_again
