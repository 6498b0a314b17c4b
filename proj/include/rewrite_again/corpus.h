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

#ifndef REWRITE_AGAIN_CORPUS_H_
#define REWRITE_AGAIN_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewrite_again/types.h"

namespace rewrite_again {

struct DatasetSplit {
  std::vector<TextRecord> train;
  std::vector<TextRecord> validation;
  double ratio = 0.9;
  uint64_t seed = 42;

  std::set<std::string> TrainIds() const;
  std::set<std::string> ValidationIds() const;
};

// Dataset JSONL: {"id", "text", "attributes": {...}} per line. Attribute
// values may be strings or numbers; numbers are kept as their JSON text.
std::vector<TextRecord> LoadDatasetJsonl(const std::filesystem::path& path);
void SaveDatasetJsonl(std::span<const TextRecord> records,
                      const std::filesystem::path& path);

nlohmann::ordered_json TextRecordToJson(const TextRecord& record);
TextRecord TextRecordFromJson(const nlohmann::json& j);

// Raises a validation error on empty (after trimming) text or duplicate ids.
void ValidateRecords(std::span<const TextRecord> records);

// Uniform sample of n records without replacement, in draw order. Uses a
// partial Fisher-Yates pass over RandomSource(seed, 0).
std::vector<TextRecord> SamplePublicCorpus(std::span<const TextRecord> source,
                                           size_t n, uint64_t seed);
std::vector<TextRecord> SamplePublicCorpus(const std::filesystem::path& source,
                                           size_t n, uint64_t seed);

// Keeps records carrying `attribute`, then samples round(fraction * count) of
// them with SamplePublicCorpus.
std::vector<TextRecord> SampleFraction(std::span<const TextRecord> records,
                                       double fraction, uint64_t seed,
                                       const std::string& attribute);

// Shuffles with Shuffle(RandomSource(seed, 0)) and takes the first
// floor(ratio * N) records as train.
DatasetSplit SplitDataset(std::span<const TextRecord> records,
                          double ratio = 0.9, uint64_t seed = 42);

struct ReversePairs {
  std::vector<ReversePair> pairs;
  size_t skipped = 0;
};

// source = rewritten, target = original. Pairs carrying an error are skipped.
ReversePairs BuildReversePairs(std::span<const AlignedPair> aligned);

std::vector<AlignedPair> LoadAlignedJsonl(const std::filesystem::path& path);
void SaveAlignedJsonl(std::span<const AlignedPair> pairs,
                      const std::filesystem::path& path);

std::vector<ReversePair> LoadReversePairsJsonl(const std::filesystem::path& path);
void SaveReversePairsJsonl(std::span<const ReversePair> pairs,
                           const std::filesystem::path& path);

// Sorted, de-duplicated whitespace tokens over all texts.
std::vector<std::string> BuildVocabulary(std::span<const TextRecord> records);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_CORPUS_H_
