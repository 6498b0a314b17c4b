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

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"
#include "rewrite_again/mechanisms.h"
#include "rewrite_again/random.h"

namespace rewrite_again {

namespace fs = std::filesystem;

std::set<std::string> DatasetSplit::TrainIds() const {
  std::set<std::string> ids;
  for (const auto& r : train) ids.insert(r.id);
  return ids;
}

std::set<std::string> DatasetSplit::ValidationIds() const {
  std::set<std::string> ids;
  for (const auto& r : validation) ids.insert(r.id);
  return ids;
}

nlohmann::ordered_json TextRecordToJson(const TextRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["text"] = record.text;
  nlohmann::ordered_json attributes = nlohmann::ordered_json::object();
  for (const auto& [key, value] : record.attributes) attributes[key] = value;
  j["attributes"] = attributes;
  return j;
}

TextRecord TextRecordFromJson(const nlohmann::json& j) {
  TextRecord record;
  const auto& id = j.at("id");
  record.id = id.is_string() ? id.get<std::string>() : id.dump();
  record.text = j.at("text").get<std::string>();
  if (j.contains("attributes")) {
    for (const auto& [key, value] : j.at("attributes").items()) {
      record.attributes[key] =
          value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  return record;
}

void ValidateRecords(std::span<const TextRecord> records) {
  std::unordered_set<std::string> seen;
  for (const auto& record : records) {
    if (record.id.empty()) ThrowValidation("record with empty id");
    if (record.text.find_first_not_of(" \t\r\n") == std::string::npos) {
      ThrowValidation("record '" + record.id + "' has empty text");
    }
    if (!seen.insert(record.id).second) {
      ThrowValidation("duplicate id '" + record.id + "'");
    }
  }
}

std::vector<TextRecord> LoadDatasetJsonl(const fs::path& path) {
  std::vector<TextRecord> records;
  std::unordered_set<std::string> seen;
  ReadJsonLines(path, [&](size_t line, const nlohmann::json& j) {
    const std::string where = path.string() + ":" + std::to_string(line);
    TextRecord record;
    try {
      record = TextRecordFromJson(j);
    } catch (const nlohmann::json::exception& e) {
      ThrowValidation(where + ": " + e.what());
    }
    if (record.text.find_first_not_of(" \t\r\n") == std::string::npos) {
      ThrowValidation(where + ": empty text for id '" + record.id + "'");
    }
    if (!seen.insert(record.id).second) {
      ThrowValidation(where + ": duplicate id '" + record.id + "'");
    }
    records.push_back(std::move(record));
  });
  return records;
}

void SaveDatasetJsonl(std::span<const TextRecord> records, const fs::path& path) {
  std::vector<nlohmann::ordered_json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(TextRecordToJson(r));
  WriteJsonLines(path, lines);
}

std::vector<TextRecord> SamplePublicCorpus(std::span<const TextRecord> source,
                                           size_t n, uint64_t seed) {
  if (n == 0) ThrowInvalidArgument("sample size must be positive");
  if (n > source.size()) {
    ThrowInvalidArgument("cannot sample " + std::to_string(n) + " of " +
                         std::to_string(source.size()) + " records");
  }
  std::vector<size_t> index(source.size());
  for (size_t i = 0; i < index.size(); ++i) index[i] = i;
  RandomSource rng(seed, 0);
  std::vector<TextRecord> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t j = i + static_cast<size_t>(rng.UniformIndex(index.size() - i));
    std::swap(index[i], index[j]);
    out.push_back(source[index[i]]);
  }
  return out;
}

std::vector<TextRecord> SamplePublicCorpus(const fs::path& source, size_t n,
                                           uint64_t seed) {
  const auto records = LoadDatasetJsonl(source);
  return SamplePublicCorpus(records, n, seed);
}

std::vector<TextRecord> SampleFraction(std::span<const TextRecord> records,
                                       double fraction, uint64_t seed,
                                       const std::string& attribute) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    ThrowInvalidArgument("fraction must lie in (0, 1]");
  }
  std::vector<TextRecord> eligible;
  for (const auto& r : records) {
    if (r.attributes.contains(attribute)) eligible.push_back(r);
  }
  const auto n = static_cast<size_t>(
      std::llround(fraction * static_cast<double>(eligible.size())));
  if (n == 0) ThrowInvalidArgument("fraction selects no records");
  return SamplePublicCorpus(eligible, n, seed);
}

DatasetSplit SplitDataset(std::span<const TextRecord> records, double ratio,
                          uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    ThrowInvalidArgument("split ratio must lie in (0, 1)");
  }
  if (records.size() < 2) ThrowInvalidArgument("split needs at least 2 records");
  std::vector<TextRecord> shuffled(records.begin(), records.end());
  RandomSource rng(seed, 0);
  Shuffle(shuffled, rng);
  const auto train_size = static_cast<size_t>(
      std::floor(ratio * static_cast<double>(shuffled.size())));
  DatasetSplit split;
  split.ratio = ratio;
  split.seed = seed;
  split.train.assign(shuffled.begin(), shuffled.begin() + train_size);
  split.validation.assign(shuffled.begin() + train_size, shuffled.end());
  return split;
}

ReversePairs BuildReversePairs(std::span<const AlignedPair> aligned) {
  ReversePairs out;
  for (const auto& pair : aligned) {
    if (pair.error) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back({pair.id, pair.rewritten, pair.original});
  }
  return out;
}

std::vector<AlignedPair> LoadAlignedJsonl(const fs::path& path) {
  std::vector<AlignedPair> pairs;
  ReadJsonLines(path, [&](size_t line, const nlohmann::json& j) {
    try {
      pairs.push_back(AlignedPairFromJson(j));
    } catch (const nlohmann::json::exception& e) {
      ThrowValidation(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return pairs;
}

void SaveAlignedJsonl(std::span<const AlignedPair> pairs, const fs::path& path) {
  std::vector<nlohmann::ordered_json> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) lines.push_back(AlignedPairToJson(p));
  WriteJsonLines(path, lines);
}

std::vector<ReversePair> LoadReversePairsJsonl(const fs::path& path) {
  std::vector<ReversePair> pairs;
  ReadJsonLines(path, [&](size_t line, const nlohmann::json& j) {
    try {
      pairs.push_back({j.at("id").get<std::string>(),
                       j.at("source").get<std::string>(),
                       j.at("target").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      ThrowValidation(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return pairs;
}

void SaveReversePairsJsonl(std::span<const ReversePair> pairs,
                           const fs::path& path) {
  std::vector<nlohmann::ordered_json> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["source"] = p.source;
    j["target"] = p.target;
    lines.push_back(std::move(j));
  }
  WriteJsonLines(path, lines);
}

std::vector<std::string> BuildVocabulary(std::span<const TextRecord> records) {
  std::set<std::string> words;
  for (const auto& r : records) {
    for (auto& w : SplitWords(r.text)) words.insert(std::move(w));
  }
  return {words.begin(), words.end()};
}

}  // namespace rewrite_again
