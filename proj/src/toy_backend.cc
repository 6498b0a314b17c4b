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

#include "rewrite_again/toy_backend.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"

namespace rewrite_again {
namespace {

constexpr char kStateFile[] = "toy_state.json";

std::vector<std::string> ReadVocabFile(const std::filesystem::path& path) {
  std::vector<std::string> vocab;
  for (auto& word : SplitWords(ReadFile(path))) vocab.push_back(std::move(word));
  return vocab;
}

}  // namespace

ToyBackendOptions ToyBackendOptions::FromJson(const nlohmann::json& j) {
  ToyBackendOptions o;
  if (j.contains("vocab")) {
    o.vocab = j.at("vocab").get<std::vector<std::string>>();
  } else if (j.contains("vocab_file")) {
    o.vocab = ReadVocabFile(j.at("vocab_file").get<std::string>());
  }
  o.default_row = j.value("default_row", o.default_row);
  if (j.contains("table")) {
    for (const auto& [key, row] : j.at("table").items()) {
      o.table[std::stoull(key)] = row.get<std::vector<double>>();
    }
  }
  o.copy_bias = j.value("copy_bias", o.copy_bias);
  o.eos_step_bias = j.value("eos_step_bias", o.eos_step_bias);
  o.memory_margin = j.value("memory_margin", o.memory_margin);
  o.latent_dims = j.value("latent_dims", o.latent_dims);
  o.decode_words = j.value("decode_words", o.decode_words);
  o.max_length = j.value("max_length", o.max_length);
  o.seed = j.value("seed", o.seed);
  return o;
}

nlohmann::ordered_json ToyBackendOptions::ToJson() const {
  nlohmann::ordered_json j;
  j["vocab"] = vocab;
  j["default_row"] = default_row;
  nlohmann::ordered_json table_json = nlohmann::ordered_json::object();
  for (const auto& [key, row] : table) table_json[std::to_string(key)] = row;
  j["table"] = table_json;
  j["copy_bias"] = copy_bias;
  j["eos_step_bias"] = eos_step_bias;
  j["memory_margin"] = memory_margin;
  j["latent_dims"] = latent_dims;
  j["decode_words"] = decode_words;
  j["max_length"] = max_length;
  j["seed"] = seed;
  return j;
}

ToyBackend::ToyBackend(ToyBackendOptions options) : options_(std::move(options)) {
  vocab_ = options_.vocab;
  if (std::find(vocab_.begin(), vocab_.end(), kEosToken) == vocab_.end()) {
    vocab_.emplace_back(kEosToken);
  }
  options_.vocab = vocab_;
  for (size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<TokenId>(i)).second) {
      ThrowInvalidArgument("duplicate vocabulary entry '" + vocab_[i] + "'");
    }
  }
  eos_ = index_.at(std::string(kEosToken));
  if (options_.default_row.empty()) {
    options_.default_row.assign(vocab_.size(), 0.0);
  }
  auto check_row = [&](const std::vector<double>& row) {
    if (row.size() != vocab_.size()) {
      ThrowInvalidArgument("logit row has " + std::to_string(row.size()) +
                           " entries for a vocabulary of " +
                           std::to_string(vocab_.size()));
    }
    LogitVector validated(row);  // rejects non-finite entries
  };
  check_row(options_.default_row);
  for (const auto& [key, row] : options_.table) check_row(row);
  if (options_.latent_dims == 0) ThrowInvalidArgument("latent_dims must be positive");
  if (options_.max_length == 0) ThrowInvalidArgument("max_length must be positive");
}

uint64_t ToyBackend::ContextKey(std::span<const TokenId> prompt,
                                std::span<const TokenId> generated) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (TokenId t : prompt) mix(static_cast<uint32_t>(t));
  mix(0xFFFFFFFFFFFFFFFFULL);
  for (TokenId t : generated) mix(static_cast<uint32_t>(t));
  return h;
}

TokenSequence ToyBackend::Tokenize(std::string_view text) const {
  TokenSequence tokens;
  for (const auto& word : SplitWords(text)) {
    auto it = index_.find(word);
    if (it != index_.end() && it->second != eos_) tokens.push_back(it->second);
  }
  return tokens;
}

std::string ToyBackend::Detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (t < 0 || static_cast<size_t>(t) >= vocab_.size() || t == eos_) continue;
    if (!out.empty()) out += ' ';
    out += vocab_[t];
  }
  return out;
}

int64_t ToyBackend::BestMemoryMatch(std::span<const TokenId> prompt) const {
  if (memory_.empty() || prompt.empty()) return -1;
  std::vector<TokenId> distinct(prompt.begin(), prompt.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::unordered_map<uint32_t, size_t> overlap;
  for (TokenId t : distinct) {
    auto it = postings_.find(t);
    if (it == postings_.end()) continue;
    for (uint32_t entry : it->second) ++overlap[entry];
  }
  int64_t best = -1;
  double best_score = 0.0;
  for (const auto& [entry, shared] : overlap) {
    const size_t union_size =
        distinct.size() + memory_[entry].distinct_source.size() - shared;
    const double score = static_cast<double>(shared) / static_cast<double>(union_size);
    if (score > best_score ||
        (score == best_score && static_cast<int64_t>(entry) > best)) {
      best = entry;
      best_score = score;
    }
  }
  return best;
}

LogitVector ToyBackend::NextTokenLogits(std::span<const TokenId> prompt,
                                        std::span<const TokenId> generated) const {
  if (!options_.table.empty()) {
    auto it = options_.table.find(ContextKey(prompt, generated));
    if (it != options_.table.end()) return LogitVector(it->second);
  }
  std::vector<double> row = options_.default_row;
  if (options_.copy_bias != 0.0) {
    std::set<TokenId> seen;
    for (TokenId t : prompt) {
      if (t >= 0 && static_cast<size_t>(t) < row.size() && t != eos_ &&
          seen.insert(t).second) {
        row[t] += options_.copy_bias;
      }
    }
  }
  row[eos_] += options_.eos_step_bias * static_cast<double>(generated.size());

  const int64_t match = BestMemoryMatch(prompt);
  if (match >= 0) {
    const TokenSequence& target = memory_[match].target;
    if (generated.size() <= target.size() &&
        std::equal(generated.begin(), generated.end(), target.begin())) {
      const TokenId next =
          generated.size() < target.size() ? target[generated.size()] : eos_;
      row[next] = *std::max_element(row.begin(), row.end()) + options_.memory_margin;
    }
  }
  return LogitVector(std::move(row));
}

std::vector<double> ToyBackend::WordVector(std::string_view word) const {
  std::vector<double> v(options_.latent_dims);
  const uint64_t base = Fnv1a64(word) ^ SplitMix64(options_.seed);
  for (size_t j = 0; j < v.size(); ++j) {
    const uint64_t h = SplitMix64(base + j);
    v[j] = static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
  }
  return v;
}

LatentVector ToyBackend::Encode(std::string_view text) const {
  std::vector<double> latent(options_.latent_dims, 0.0);
  const auto words = SplitWords(text);
  for (const auto& word : words) {
    const auto v = WordVector(word);
    for (size_t j = 0; j < latent.size(); ++j) latent[j] += v[j];
  }
  if (!words.empty()) {
    for (double& x : latent) x /= static_cast<double>(words.size());
  }
  return LatentVector(std::move(latent));
}

std::string ToyBackend::DecodeFromLatent(const LatentVector& latent,
                                         RandomSource&) const {
  if (latent.size() != options_.latent_dims) {
    ThrowInvalidArgument("latent has dimension " + std::to_string(latent.size()) +
                         ", expected " + std::to_string(options_.latent_dims));
  }
  std::vector<std::pair<double, TokenId>> scored;
  for (size_t i = 0; i < vocab_.size(); ++i) {
    if (static_cast<TokenId>(i) == eos_) continue;
    const auto v = WordVector(vocab_[i]);
    double dot = 0.0;
    for (size_t j = 0; j < v.size(); ++j) dot += v[j] * latent[j];
    scored.emplace_back(dot, static_cast<TokenId>(i));
  }
  const size_t k =
      std::min({options_.decode_words, options_.max_length, scored.size()});
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first
                                                : a.second < b.second;
                    });
  TokenSequence tokens;
  for (size_t i = 0; i < k; ++i) tokens.push_back(scored[i].second);
  return Detokenize(tokens);
}

void ToyBackend::Memorize(TokenSequence source, TokenSequence target) {
  MemoryEntry entry{std::move(source), std::move(target), {}};
  entry.distinct_source = entry.source;
  std::sort(entry.distinct_source.begin(), entry.distinct_source.end());
  entry.distinct_source.erase(
      std::unique(entry.distinct_source.begin(), entry.distinct_source.end()),
      entry.distinct_source.end());
  const auto index = static_cast<uint32_t>(memory_.size());
  for (TokenId t : entry.distinct_source) postings_[t].push_back(index);
  memory_.push_back(std::move(entry));
}

void ToyBackend::Fit(std::span<const ReversePair> pairs,
                     const FineTuneConfig& cfg) {
  cfg.Validate();
  for (const auto& pair : pairs) {
    TokenSequence source = Tokenize(pair.source);
    TokenSequence target = Tokenize(pair.target);
    if (source.size() > cfg.max_source_length) source.resize(cfg.max_source_length);
    if (target.size() > cfg.max_target_length) target.resize(cfg.max_target_length);
    Memorize(std::move(source), std::move(target));
  }
}

void ToyBackend::SaveState(const std::filesystem::path& dir) const {
  nlohmann::ordered_json j;
  j["options"] = options_.ToJson();
  nlohmann::ordered_json memory = nlohmann::ordered_json::array();
  for (const auto& entry : memory_) {
    memory.push_back({{"source", entry.source}, {"target", entry.target}});
  }
  j["memory"] = memory;
  WriteFileAtomic(dir / kStateFile, j.dump() + "\n");
}

std::unique_ptr<ToyBackend> ToyBackend::LoadState(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(dir / kStateFile));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kLoad, "corrupt toy model state in " + dir.string() +
                                      ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kLoad, e.what());
  }
  auto backend =
      std::make_unique<ToyBackend>(ToyBackendOptions::FromJson(j.at("options")));
  for (const auto& entry : j.at("memory")) {
    backend->Memorize(entry.at("source").get<TokenSequence>(),
                      entry.at("target").get<TokenSequence>());
  }
  return backend;
}

nlohmann::ordered_json ToyBackend::TrainerSettings() const {
  nlohmann::ordered_json j;
  j["algorithm"] = "memorization";
  j["retrieval"] = "max jaccard over source tokens, latest entry on ties";
  j["memory_margin"] = options_.memory_margin;
  return j;
}

}  // namespace rewrite_again
