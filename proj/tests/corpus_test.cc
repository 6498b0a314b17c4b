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

#include "rewrite_again/corpus.h"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"
#include "test_util.h"

namespace rewrite_again {
namespace {

using testing::MakeRecords;
using testing::TempDir;

std::string ErrorMessage(const std::function<void()>& fn, ErrorCode expected) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), expected) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected an error";
  return "";
}

TEST(DatasetJsonlTest, RoundTrip) {
  TempDir dir("jsonl");
  const auto records = MakeRecords(3);
  SaveDatasetJsonl(records, dir.path() / "d.jsonl");
  EXPECT_EQ(LoadDatasetJsonl(dir.path() / "d.jsonl"), records);
}

TEST(DatasetJsonlTest, EmptyTextRejected) {
  TempDir dir("jsonl");
  WriteFileAtomic(dir.path() / "d.jsonl", "{\"id\":\"a\",\"text\":\"  \"}\n");
  ErrorMessage([&] { LoadDatasetJsonl(dir.path() / "d.jsonl"); }, ErrorCode::kValidation);
}

TEST(DatasetJsonlTest, DuplicateIdListed) {
  TempDir dir("jsonl");
  WriteFileAtomic(dir.path() / "d.jsonl",
                  "{\"id\":\"dup7\",\"text\":\"a\"}\n{\"id\":\"dup7\",\"text\":\"b\"}\n");
  const auto msg =
      ErrorMessage([&] { LoadDatasetJsonl(dir.path() / "d.jsonl"); }, ErrorCode::kValidation);
  EXPECT_NE(msg.find("dup7"), std::string::npos);
}

TEST(DatasetJsonlTest, MalformedLineNamesLineNumber) {
  TempDir dir("jsonl");
  WriteFileAtomic(dir.path() / "d.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{oops\n");
  const auto msg =
      ErrorMessage([&] { LoadDatasetJsonl(dir.path() / "d.jsonl"); }, ErrorCode::kValidation);
  EXPECT_NE(msg.find(":2"), std::string::npos) << msg;
}

TEST(DatasetJsonlTest, MissingFile) {
  ErrorMessage([] { LoadDatasetJsonl("/nonexistent/d.jsonl"); }, ErrorCode::kMissingArtifact);
}

TEST(SamplePublicCorpusTest, FullSizeIsPermutation) {
  const auto records = MakeRecords(40);
  const auto sample = SamplePublicCorpus(records, 40, 3);
  DatasetSplit s{sample, {}};
  DatasetSplit t{records, {}};
  EXPECT_EQ(s.TrainIds(), t.TrainIds());
}

TEST(SamplePublicCorpusTest, SeedDeterminesSample) {
  const auto records = MakeRecords(40);
  EXPECT_EQ(SamplePublicCorpus(records, 10, 3), SamplePublicCorpus(records, 10, 3));
  EXPECT_NE(SamplePublicCorpus(records, 10, 3), SamplePublicCorpus(records, 10, 4));
  ErrorMessage([&] { SamplePublicCorpus(records, 41, 3); }, ErrorCode::kInvalidArgument);
}

TEST(SampleFractionTest, KeepsFraction) {
  const auto records = MakeRecords(200);
  const auto sample = SampleFraction(records, 0.1, 5, "label");
  EXPECT_EQ(sample.size(), 20u);
  EXPECT_EQ(sample, SampleFraction(records, 0.1, 5, "label"));
}

TEST(SplitDatasetTest, FloorRuleAndDisjoint) {
  const auto records = MakeRecords(100);
  const auto split = SplitDataset(records, 0.9, 42);
  EXPECT_EQ(split.train.size(), 90u);
  EXPECT_EQ(split.validation.size(), 10u);
  for (const auto& id : split.TrainIds()) EXPECT_FALSE(split.ValidationIds().contains(id));
}

TEST(SplitDatasetTest, PaperCount) {
  const auto records = MakeRecords(29490);
  const auto split = SplitDataset(records, 0.9, 42);
  EXPECT_EQ(split.train.size(), 26541u);
  EXPECT_EQ(split.validation.size(), 2949u);
}

TEST(SplitDatasetTest, RandomizedSizes) {
  RandomSource rng(77, 0);
  for (int i = 0; i < 40; ++i) {
    const size_t n = 2 + rng.UniformIndex(3000);
    const double ratio = 0.05 + 0.9 * rng.Uniform01();
    const auto split = SplitDataset(MakeRecords(n), ratio, 42);
    EXPECT_EQ(split.train.size(), static_cast<size_t>(std::floor(ratio * n)));
    EXPECT_EQ(split.train.size() + split.validation.size(), n);
  }
}

TEST(SplitDatasetTest, Deterministic) {
  const auto records = MakeRecords(50);
  EXPECT_EQ(SplitDataset(records).TrainIds(), SplitDataset(records).TrainIds());
  ErrorMessage([&] { SplitDataset(MakeRecords(1)); }, ErrorCode::kInvalidArgument);
}

TEST(BuildReversePairsTest, SwapsDirection) {
  std::vector<AlignedPair> aligned = {
      {"1", "a", "b", "dp-prompt", 206, Granularity::kWordLevel, 1, std::nullopt}};
  const auto out = BuildReversePairs(aligned);
  ASSERT_EQ(out.pairs.size(), 1u);
  EXPECT_EQ(out.pairs[0], (ReversePair{"1", "b", "a"}));
}

TEST(BuildReversePairsTest, SkipsFailedAndJoinsBack) {
  std::vector<AlignedPair> aligned;
  for (int i = 0; i < 100; ++i) {
    aligned.push_back({std::to_string(i), "orig" + std::to_string(i), "rew" + std::to_string(i),
                       "dp-bart-clv", 625, Granularity::kDocumentLevel, 3, std::nullopt});
  }
  EXPECT_EQ(BuildReversePairs(aligned).pairs.size(), 100u);
  aligned[5].error = "failed";
  const auto out = BuildReversePairs(aligned);
  EXPECT_EQ(out.pairs.size(), 99u);
  EXPECT_EQ(out.skipped, 1u);
  std::map<std::string, const AlignedPair*> by_id;
  for (const auto& a : aligned) by_id[a.id] = &a;
  for (const auto& p : out.pairs) {
    ASSERT_TRUE(by_id.contains(p.id));
    EXPECT_EQ(p.source, by_id[p.id]->rewritten);
    EXPECT_EQ(p.target, by_id[p.id]->original);
  }
}

TEST(PairFilesTest, RoundTrip) {
  TempDir dir("pairs");
  std::vector<AlignedPair> aligned = {
      {"1", "a", "b", "dp-prompt", 206, Granularity::kWordLevel, 1, std::nullopt},
      {"2", "c", "", "dp-prompt", 206, Granularity::kWordLevel, 0, std::nullopt}};
  SaveAlignedJsonl(aligned, dir.path() / "a.jsonl");
  EXPECT_EQ(LoadAlignedJsonl(dir.path() / "a.jsonl"), aligned);
  const auto reverse = BuildReversePairs(aligned).pairs;
  SaveReversePairsJsonl(reverse, dir.path() / "r.jsonl");
  EXPECT_EQ(LoadReversePairsJsonl(dir.path() / "r.jsonl"), reverse);
}

TEST(IoTest, Sha256KnownVector) {
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace rewrite_again
