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

#include <gtest/gtest.h>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"
#include "rewrite_again/toy_backend.h"
#include "test_util.h"

namespace rewrite_again {
namespace {

using testing::MakeToy;
using testing::TempDir;

TEST(LoadBackendTest, ToyFromVocab) {
  auto backend = LoadBackend("toy", {{"vocab", {"a", "b", "c"}}});
  EXPECT_EQ(backend->vocab_size(), 4u);
  EXPECT_EQ(backend->kind(), "toy");
}

TEST(LoadBackendTest, ToyFromVocabFile) {
  TempDir dir("vocab");
  WriteFileAtomic(dir.path() / "v.txt", "x\ny\n");
  auto backend = LoadBackend("toy", {{"vocab_file", (dir.path() / "v.txt").string()}});
  EXPECT_EQ(backend->vocab_size(), 3u);
}

TEST(LoadBackendTest, UnknownSpecIsConfigError) {
  try {
    LoadBackend("xyz", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(ToyBackendTest, TokenizeDropsUnknownWords) {
  auto toy = MakeToy({"a", "b"});
  EXPECT_EQ(toy->Tokenize("a zzz b"), (TokenSequence{0, 1}));
  EXPECT_EQ(toy->Detokenize(TokenSequence{1, 0}), "b a");
  EXPECT_EQ(toy->eos_token(), 2);
}

TEST(ToyBackendTest, UnseenContextUsesDefaultRow) {
  auto toy = MakeToy({"a", "b"}, {0.5, -1, 2});
  const auto logits = toy->NextTokenLogits(TokenSequence{0}, TokenSequence{});
  EXPECT_EQ(std::vector<double>(logits.values().begin(), logits.values().end()),
            (std::vector<double>{0.5, -1, 2}));
}

TEST(ToyBackendTest, TableOverridesExactContext) {
  ToyBackendOptions options;
  options.vocab = {"a", "b"};
  const TokenSequence prompt{0};
  const TokenSequence generated{1};
  options.table[ToyBackend::ContextKey(prompt, generated)] = {9, 8, 7};
  ToyBackend toy(options);
  EXPECT_EQ(toy.NextTokenLogits(prompt, generated)[0], 9);
  EXPECT_EQ(toy.NextTokenLogits(prompt, TokenSequence{})[0], 0);
}

TEST(ToyBackendTest, LogitLengthMatchesVocab) {
  auto toy = MakeToy({"a", "b", "c", "d"});
  EXPECT_EQ(toy->NextTokenLogits(TokenSequence{}, TokenSequence{}).size(), toy->vocab_size());
  EXPECT_THROW(MakeToy({"a"}, {1, 2, 3}), Error);
}

TEST(ToyBackendTest, FitMemorizesDirection) {
  auto toy = MakeToy({"a", "b"});
  toy->Fit(std::vector<ReversePair>{{"1", "b", "a"}}, FineTuneConfig{});
  RandomSource rng(0, 0);
  EXPECT_EQ(DecodeText(*toy, "b", DecodeOptions{}, rng).text, "a");
}

TEST(ToyBackendTest, FitIsDeterministic) {
  std::vector<ReversePair> pairs = {{"1", "a b", "c"}, {"2", "c", "a a"}, {"3", "b", "b c"}};
  auto x = MakeToy({"a", "b", "c"});
  auto y = MakeToy({"a", "b", "c"});
  x->Fit(pairs, FineTuneConfig{});
  y->Fit(pairs, FineTuneConfig{});
  TempDir dx("fitx"), dy("fity");
  x->SaveState(dx.path());
  y->SaveState(dy.path());
  EXPECT_EQ(ReadFile(dx.path() / "toy_state.json"), ReadFile(dy.path() / "toy_state.json"));
}

TEST(ToyBackendTest, StateRoundTrip) {
  auto toy = MakeToy({"a", "b", "c"});
  toy->Fit(std::vector<ReversePair>{{"1", "c b", "a"}}, FineTuneConfig{});
  TempDir dir("state");
  toy->SaveState(dir.path());
  auto loaded = LoadBackendState("toy", dir.path());
  RandomSource r1(0, 0), r2(0, 0);
  EXPECT_EQ(DecodeText(*loaded, "c b", DecodeOptions{}, r1).text, "a");
  EXPECT_EQ(DecodeText(*toy, "c b", DecodeOptions{}, r2).text, "a");
}

TEST(ToyBackendTest, EncodeIsDeterministic) {
  auto toy = MakeToy({"a", "b"});
  EXPECT_EQ(toy->Encode("a b"), toy->Encode("a b"));
  EXPECT_EQ(toy->Encode("a b").size(), 16u);
}

TEST(GreedyDecodeTest, RespectsMaxLength) {
  ToyBackendOptions options;
  options.vocab = {"a"};
  options.default_row = {5, 0};
  options.max_length = 7;
  ToyBackend toy(options);
  EXPECT_EQ(GreedyDecode(toy, TokenSequence{}, 100).tokens.size(), 7u);
  EXPECT_EQ(GreedyDecode(toy, TokenSequence{}, 3).tokens.size(), 3u);
}

TEST(GreedyDecodeTest, TiesGoToLowerId) {
  auto toy = MakeToy({"a", "b"}, {1, 1, 0});
  EXPECT_EQ(GreedyDecode(*toy, TokenSequence{}, 2).text, "a a");
}

TEST(DecodeTextTest, UntokenizableInputIsBackendError) {
  auto toy = MakeToy({"a"});
  RandomSource rng(0, 0);
  try {
    DecodeText(*toy, "zzz", DecodeOptions{}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackend);
  }
}

TEST(TemplateTest, SlotMustAppearOnce) {
  EXPECT_EQ(FillTemplate("x {text} y", "abc"), "x abc y");
  EXPECT_EQ(CountTemplateSlots("{text}{text}"), 2u);
  EXPECT_THROW(FillTemplate("none", "abc"), Error);
  EXPECT_THROW(FillTemplate("{text} {text}", "abc"), Error);
}

TEST(FineTuneConfigTest, DefaultsAndValidation) {
  FineTuneConfig cfg;
  EXPECT_EQ(cfg.epochs, 1);
  EXPECT_EQ(cfg.learning_rate, 5e-5);
  cfg.epochs = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg.epochs = 1;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  EXPECT_EQ(FineTuneConfig::FromJson(FineTuneConfig{}.ToJson()).ToJson(),
            FineTuneConfig{}.ToJson());
}

TEST(DecodeOptionsTest, JsonRoundTrip) {
  DecodeOptions o;
  o.strategy = DecodeStrategy::kSample;
  o.temperature = 0.5;
  o.seed = 3;
  const auto back = DecodeOptions::FromJson(o.ToJson());
  EXPECT_EQ(back.strategy, DecodeStrategy::kSample);
  EXPECT_EQ(back.temperature, 0.5);
  EXPECT_EQ(back.seed, 3u);
}

}  // namespace
}  // namespace rewrite_again
