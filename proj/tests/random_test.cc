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

#include <set>

#include <gtest/gtest.h>

namespace rewrite_again {
namespace {

TEST(RandomSourceTest, SameSeedAndStreamRepeat) {
  RandomSource a(9, 3), b(9, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(RandomSourceTest, StreamsDiffer) {
  RandomSource a(9, 3), b(9, 4), c(10, 3);
  const uint64_t x = a.NextU64();
  EXPECT_NE(x, b.NextU64());
  EXPECT_NE(x, c.NextU64());
}

TEST(RandomSourceTest, UniformRanges) {
  RandomSource rng(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.Uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = rng.UniformOpen01();
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_LT(rng.UniformIndex(7), 7u);
  }
}

TEST(RandomSourceTest, SplitMixKnownValue) {
  // Reference output of the SplitMix64 finalizer for input 0.
  EXPECT_EQ(SplitMix64(0), 0xE220A8397B1DCDAFull);
}

TEST(ShuffleTest, IsPermutationAndDeterministic) {
  std::vector<int> a(50), b;
  for (int i = 0; i < 50; ++i) a[i] = i;
  b = a;
  RandomSource r1(5, 0), r2(5, 0);
  Shuffle(a, r1);
  Shuffle(b, r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 50u);
}

}  // namespace
}  // namespace rewrite_again
