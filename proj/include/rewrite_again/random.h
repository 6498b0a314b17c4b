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

#ifndef REWRITE_AGAIN_RANDOM_H_
#define REWRITE_AGAIN_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace rewrite_again {

// SplitMix64 finalizer. Used to derive engine seeds and to hash integers.
uint64_t SplitMix64(uint64_t x);

// Deterministic random stream identified by (seed, stream id).
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. It is seeded with
//   SplitMix64(SplitMix64(seed) ^ SplitMix64(stream + 0x9E3779B97F4A7C15)).
// Floating-point and index draws are derived from raw 64-bit outputs here
// rather than through <random> distributions, whose algorithms vary between
// standard library implementations. Equal (seed, stream) therefore yields the
// same draws on every platform.
class RandomSource {
 public:
  RandomSource(uint64_t seed, uint64_t stream);

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform01();

  // Uniform on the open interval (0, 1).
  double UniformOpen01();

  // Uniform integer on [0, n) by rejection sampling. n must be positive.
  uint64_t UniformIndex(uint64_t n);

 private:
  uint64_t seed_;
  uint64_t stream_;
  std::mt19937_64 engine_;
};

// Fisher-Yates shuffle running from the back of the sequence, drawing
// j = UniformIndex(i + 1) for i = n-1 .. 1.
template <typename T>
void Shuffle(std::vector<T>& items, RandomSource& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.UniformIndex(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_RANDOM_H_
