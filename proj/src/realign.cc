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

#include "rewrite_again/realign.h"

#include <string>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"
#include "rewrite_again/random.h"

namespace rewrite_again {

namespace fs = std::filesystem;

namespace {

TrainedModelHandle SaveModel(const TrainableBackend& backend,
                             const fs::path& models_dir, const std::string& id,
                             nlohmann::ordered_json manifest) {
  if (id.empty()) ThrowInvalidArgument("model id must be non-empty");
  const fs::path dir = models_dir / id;
  fs::create_directories(dir);
  backend.SaveState(dir);
  WriteFileAtomic(dir / kModelManifestFile, manifest.dump(2) + "\n");
  return {id, backend.kind(), dir};
}

std::vector<ReversePair> ShuffledPairs(std::span<const ReversePair> pairs,
                                       uint64_t seed) {
  std::vector<ReversePair> ordered(pairs.begin(), pairs.end());
  RandomSource rng(seed, 0);
  Shuffle(ordered, rng);
  return ordered;
}

}  // namespace

std::string_view TrackName(Track track) {
  return track == Track::kBasic ? "basic" : "advanced";
}

Track ParseTrack(std::string_view name) {
  if (name == "basic") return Track::kBasic;
  if (name == "advanced") return Track::kAdvanced;
  throw Error(ErrorCode::kConfig,
              "unknown track '" + std::string(name) + "' (basic|advanced)");
}

std::string PairsFingerprint(std::span<const ReversePair> pairs) {
  std::string canonical;
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["source"] = p.source;
    j["target"] = p.target;
    canonical += j.dump();
    canonical += '\n';
  }
  return Sha256Hex(canonical);
}

TrainedModelHandle TrainT(std::span<const ReversePair> pairs,
                          const FineTuneConfig& cfg, TrainableBackend& backend,
                          const fs::path& models_dir, const std::string& id,
                          const std::string& aligned_corpus_fingerprint) {
  cfg.Validate();
  if (pairs.empty()) ThrowInvalidArgument("cannot train T on zero pairs");
  const std::vector<ReversePair> ordered = ShuffledPairs(pairs, cfg.seed);
  backend.Fit(ordered, cfg);

  nlohmann::ordered_json manifest;
  manifest["id"] = id;
  manifest["role"] = "T";
  manifest["backend_kind"] = backend.kind();
  manifest["base_spec"] = cfg.base_spec;
  manifest["parent"] = nullptr;
  manifest["training_config"] = cfg.ToJson();
  manifest["trainer_settings"] = backend.TrainerSettings();
  manifest["num_pairs"] = pairs.size();
  manifest["data_fingerprint"] = PairsFingerprint(pairs);
  manifest["aligned_corpus_fingerprint"] = aligned_corpus_fingerprint;
  return SaveModel(backend, models_dir, id, std::move(manifest));
}

TrainedModelHandle TrainTpp(const TrainedModelHandle& base,
                            std::span<const ReversePair> domain_pairs,
                            const FineTuneConfig& cfg, const LeakGuard& guard,
                            const fs::path& models_dir, const std::string& id) {
  cfg.Validate();
  if (domain_pairs.empty()) {
    ThrowInvalidArgument("advanced track needs non-empty domain pairs");
  }
  if (!guard.allow_overlap) {
    std::vector<std::string> leaked;
    for (const auto& pair : domain_pairs) {
      if (guard.validation_ids.contains(pair.id)) leaked.push_back(pair.id);
    }
    if (!leaked.empty()) {
      std::string listed;
      for (size_t i = 0; i < leaked.size() && i < 10; ++i) {
        listed += (i ? ", " : "") + leaked[i];
      }
      throw Error(ErrorCode::kValidationLeak,
                  std::to_string(leaked.size()) +
                      " domain pair(s) come from the validation split: " + listed);
    }
  }
  const nlohmann::json parent_manifest = ReadModelManifest(base);
  std::unique_ptr<TrainableBackend> backend = LoadTrainedModel(base);
  const std::vector<ReversePair> ordered = ShuffledPairs(domain_pairs, cfg.seed);
  backend->Fit(ordered, cfg);

  nlohmann::ordered_json manifest;
  manifest["id"] = id;
  manifest["role"] = "T++";
  manifest["backend_kind"] = backend->kind();
  manifest["base_spec"] = cfg.base_spec;
  manifest["parent"] = base.id;
  manifest["parent_manifest_sha256"] =
      Sha256File(base.artifact_path / kModelManifestFile);
  manifest["training_config"] = cfg.ToJson();
  manifest["trainer_settings"] = backend->TrainerSettings();
  manifest["num_pairs"] = domain_pairs.size();
  manifest["data_fingerprint"] = PairsFingerprint(domain_pairs);
  manifest["validation_overlap_allowed"] = guard.allow_overlap;
  return SaveModel(*backend, models_dir, id, std::move(manifest));
}

nlohmann::json ReadModelManifest(const TrainedModelHandle& handle) {
  const fs::path path = handle.artifact_path / kModelManifestFile;
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kLoad, "model '" + handle.id + "' not found at " +
                                      handle.artifact_path.string());
  }
  try {
    return nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kLoad, "corrupt manifest " + path.string() + ": " + e.what());
  }
}

TrainedModelHandle ResolveModel(const fs::path& model_dir) {
  TrainedModelHandle probe{model_dir.filename().string(), "", model_dir};
  const nlohmann::json manifest = ReadModelManifest(probe);
  return {manifest.at("id").get<std::string>(),
          manifest.at("backend_kind").get<std::string>(), model_dir};
}

std::unique_ptr<TrainableBackend> LoadTrainedModel(const TrainedModelHandle& handle) {
  const nlohmann::json manifest = ReadModelManifest(handle);
  return LoadBackendState(manifest.at("backend_kind").get<std::string>(),
                          handle.artifact_path);
}

void VerifyLineage(const TrainedModelHandle& handle) {
  nlohmann::json manifest = ReadModelManifest(handle);
  TrainedModelHandle current = handle;
  for (int depth = 0; depth < 16; ++depth) {
    if (!manifest.contains("data_fingerprint") ||
        manifest.at("data_fingerprint").get<std::string>().empty()) {
      ThrowValidation("model '" + current.id + "' has no data fingerprint");
    }
    if (manifest.at("parent").is_null()) {
      if (manifest.value("aligned_corpus_fingerprint", std::string()).empty()) {
        ThrowValidation("root model '" + current.id +
                        "' references no aligned corpus fingerprint");
      }
      return;
    }
    const std::string parent_id = manifest.at("parent").get<std::string>();
    TrainedModelHandle parent{parent_id, "",
                              current.artifact_path.parent_path() / parent_id};
    const fs::path parent_manifest = parent.artifact_path / kModelManifestFile;
    if (!fs::exists(parent_manifest)) {
      ThrowValidation("model '" + current.id + "' references missing parent '" +
                      parent_id + "'");
    }
    if (Sha256File(parent_manifest) !=
        manifest.value("parent_manifest_sha256", std::string())) {
      ThrowValidation("parent manifest of '" + current.id + "' changed since training");
    }
    manifest = ReadModelManifest(parent);
    current = parent;
  }
  ThrowValidation("model lineage deeper than 16 levels");
}

std::vector<RerewriteItem> Rerewrite(std::span<const RewriteResult> results,
                                     const InferenceBackend& model,
                                     const DecodeOptions& options) {
  std::vector<RerewriteItem> out;
  out.reserve(results.size());
  for (size_t i = 0; i < results.size(); ++i) {
    RerewriteItem item;
    item.result = results[i];
    item.result.text.clear();
    try {
      RandomSource rng(options.seed, i);
      item.result.text = DecodeText(model, results[i].text, options, rng).text;
    } catch (const std::exception& e) {
      item.error = e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

RealignedMechanism::RealignedMechanism(std::shared_ptr<const Mechanism> base,
                                       std::shared_ptr<const InferenceBackend> model,
                                       DecodeOptions options)
    : base_(std::move(base)), model_(std::move(model)), options_(options) {
  if (!base_ || !model_) ThrowInvalidArgument("realigned mechanism needs a base and a model");
}

RewriteResult RealignedMechanism::Rewrite(std::string_view text,
                                          RandomSource& rng) const {
  RewriteResult result = base_->Rewrite(text, rng);
  result.text = DecodeText(*model_, result.text, options_, rng).text;
  return result;
}

}  // namespace rewrite_again
