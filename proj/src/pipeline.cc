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

#include "rewrite_again/pipeline.h"

#include <chrono>
#include <cstdlib>
#include <map>
#include <set>

#include "rewrite_again/backends.h"
#include "rewrite_again/corpus.h"
#include "rewrite_again/evaluation.h"
#include "rewrite_again/io.h"
#include "rewrite_again/mechanisms.h"
#include "rewrite_again/realign.h"

namespace rewrite_again {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kPublicCorpus[] = "corpus/public.jsonl";
constexpr char kTrainSplit[] = "corpus/train.jsonl";
constexpr char kValidationSplit[] = "corpus/validation.jsonl";
constexpr char kVocab[] = "corpus/vocab.txt";
constexpr char kAlignedPublic[] = "aligned/public.jsonl";
constexpr char kAlignedPrivate[] = "aligned/private.jsonl";
constexpr char kResolvedMechanism[] = "aligned/mechanism.json";
constexpr char kPublicPairs[] = "pairs/public_reverse.jsonl";
constexpr char kDomainPairs[] = "pairs/domain_reverse.jsonl";
constexpr char kModelT[] = "T";
constexpr char kModelTpp[] = "Tpp";
constexpr char kAttackScores[] = "reports/attack.json";
constexpr char kSimilarityScores[] = "reports/similarity.json";
constexpr char kPrivacyReports[] = "reports/privacy_reports.json";
constexpr char kTableText[] = "reports/table.txt";
constexpr char kTableCsv[] = "reports/table.csv";

std::string ReleasePath(std::string_view stage) {
  return "release/" + std::string(stage) + ".jsonl";
}

std::string ModelManifestPath(std::string_view id) {
  return "models/" + std::string(id) + "/" + kModelManifestFile;
}

// Which stage produces a run-relative artifact.
std::string ProducerOf(const std::string& relative) {
  if (relative.starts_with("corpus/")) return "sample-corpus";
  if (relative.starts_with("aligned/") || relative == ReleasePath("rewritten")) {
    return "rewrite";
  }
  if (relative.starts_with("pairs/")) return "build-pairs";
  if (relative.starts_with("models/")) return "finetune";
  if (relative.starts_with("release/")) return "rerewrite";
  if (relative == kAttackScores) return "attack";
  if (relative == kSimilarityScores) return "similarity";
  return "pipeline";
}

json DefaultMechanism(const std::string& name) {
  if (name == kDpBartName) {
    return {{"name", name}, {"epsilon", 625.0}, {"clip_value", 0.1}, {"noise", "auto"}};
  }
  return {{"name", std::string(kDpPromptName)},
          {"clip", {-95.0, 8.0}},
          {"temperature", 1.0},
          {"prompt_template", std::string(kDefaultPromptTemplate)},
          {"max_new_tokens", 256},
          {"estimate_texts", 100}};
}

fs::path ResolveAgainst(const fs::path& base, const json& value) {
  fs::path p = value.get<std::string>();
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

ordered_json ReleaseRecordJson(const std::string& id, const std::string& text,
                               std::string_view stage, const AlignedPair& source) {
  ordered_json j;
  j["id"] = id;
  j["text"] = text;
  j["stage"] = stage;
  j["mechanism"] = source.mechanism;
  j["epsilon"] = source.epsilon;
  j["granularity"] = GranularityName(source.granularity);
  return j;
}

std::map<std::string, std::string> LoadReleaseTexts(const fs::path& path) {
  std::map<std::string, std::string> texts;
  ReadJsonLines(path, [&](size_t line, const json& j) {
    try {
      texts[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
    } catch (const json::exception& e) {
      ThrowValidation(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return texts;
}

template <typename T>
T ConfigValue(const json& config, const json::json_pointer& pointer) {
  try {
    return config.at(pointer).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig,
                "config key " + pointer.to_string() + ": " + e.what());
  }
}

}  // namespace

const std::vector<std::string>& SubcommandNames() {
  static const std::vector<std::string> kNames = {
      "sample-corpus", "rewrite", "build-pairs", "finetune", "rerewrite",
      "attack",        "similarity", "report",   "pipeline"};
  return kNames;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kMissingArtifact:
      return 3;
    default:
      return 4;
  }
}

json DefaultRunConfig() {
  return {
      {"track", "basic"},
      {"workers", 1},
      {"dataset",
       {{"name", "dataset"}, {"path", nullptr}, {"attribute", nullptr},
        {"split_ratio", 0.9}, {"split_seed", 42}}},
      {"public_corpus", {{"path", nullptr}, {"sample_size", 100000}}},
      {"backend", {{"spec", "toy"}, {"options", json::object()}}},
      {"mechanism", DefaultMechanism(std::string(kDpPromptName))},
      {"finetune",
       {{"epochs", 1}, {"learning_rate", 5e-5}, {"max_source_length", 512},
        {"max_target_length", 512}}},
      {"rerewrite", DecodeOptions{}.ToJson()},
      {"advanced", {{"domain_split", "train"}, {"allow_validation_overlap", false}}},
      {"seeds", {{"corpus", 0}, {"mechanism", 0}, {"training", 42}, {"attack", 0}}},
      {"evaluation",
       {{"n_runs", 3},
        {"averaging", "weighted"},
        {"seed", 42},
        {"force_equal_run_seeds", false},
        {"classifier", ClassifierConfig{}.ToJson()},
        {"encoders", {{{"spec", "toy-bow:1"}}, {{"spec", "toy-bow:2"}}}}}},
  };
}

namespace {

json MergeConfig(const json& user) {
  if (!user.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  json config = DefaultRunConfig();
  json patch = user;
  json mechanism = patch.contains("mechanism") ? patch.at("mechanism")
                                               : config.at("mechanism");
  patch.erase("mechanism");
  config.merge_patch(patch);
  json merged_mechanism =
      DefaultMechanism(mechanism.value("name", std::string(kDpPromptName)));
  merged_mechanism.merge_patch(mechanism);
  config["mechanism"] = merged_mechanism;
  return config;
}

void ApplyOverrides(json& config, const CliOptions& options) {
  if (options.track) config["track"] = *options.track;
  if (options.seed) config["seeds"]["mechanism"] = *options.seed;
  ParseTrack(config.at("track").get<std::string>());
}

}  // namespace

json ResolveRunConfig(const CliOptions& options) {
  if (!options.config_path) throw Error(ErrorCode::kConfig, "no --config given");
  const fs::path config_path = fs::absolute(*options.config_path);
  if (!fs::exists(config_path)) {
    throw Error(ErrorCode::kConfig, "config file " + config_path.string() + " not found");
  }
  json user;
  try {
    user = json::parse(ReadFile(config_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "cannot parse " + config_path.string() + ": " + e.what());
  }
  json config = MergeConfig(user);
  const fs::path base = config_path.parent_path();
  for (const char* key : {"/dataset/path", "/public_corpus/path",
                          "/backend/options/vocab_file"}) {
    const json::json_pointer pointer(key);
    if (config.contains(pointer) && config.at(pointer).is_string()) {
      config[pointer] = ResolveAgainst(base, config.at(pointer)).string();
    }
  }
  if (config.contains("run_dir") && config.at("run_dir").is_string()) {
    config["run_dir"] = ResolveAgainst(base, config.at("run_dir")).string();
  }
  ApplyOverrides(config, options);
  return config;
}

Pipeline::Pipeline(json config, fs::path run_dir, CliOptions options, std::ostream& log)
    : config_(std::move(config)),
      run_dir_(std::move(run_dir)),
      options_(std::move(options)),
      log_(log) {}

Pipeline Pipeline::Open(const CliOptions& options, std::ostream& log) {
  json config;
  std::optional<fs::path> run_dir;
  if (options.run_dir) run_dir = fs::absolute(*options.run_dir);
  if (options.config_path) {
    config = ResolveRunConfig(options);
    if (!run_dir && config.contains("run_dir") && config.at("run_dir").is_string()) {
      run_dir = config.at("run_dir").get<std::string>();
    }
  }
  if (!run_dir) {
    if (const char* env = std::getenv(kRunDirEnv); env != nullptr && *env != '\0') {
      run_dir = fs::absolute(env);
    }
  }
  if (!run_dir) {
    throw Error(ErrorCode::kConfig, std::string("no run directory: pass --run-dir, set "
                                                "run_dir in the config, or set ") +
                                        kRunDirEnv);
  }
  if (config.is_object()) config.erase("run_dir");

  json manifest;
  const fs::path manifest_path = *run_dir / kRunManifestFile;
  if (fs::exists(manifest_path)) {
    try {
      manifest = json::parse(ReadFile(manifest_path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kConfig, "corrupt run manifest: " + std::string(e.what()));
    }
  }
  if (!options.config_path) {
    if (manifest.is_null()) {
      throw Error(ErrorCode::kConfig,
                  "no --config given and " + run_dir->string() + " holds no run manifest");
    }
    config = manifest.at("config");
    ApplyOverrides(config, options);
  }

  if (!manifest.is_null() && manifest.at("config") != config) {
    if (!options.force) {
      throw Error(ErrorCode::kConfig,
                  "run directory " + run_dir->string() +
                      " was created with a different config; pass --force to overwrite");
    }
    log << "config changed; --force given, previous results will be replaced\n";
  }
  if (manifest.is_null()) {
    manifest = {{"format", 1}, {"stages", json::object()}, {"events", json::array()}};
  }
  manifest["config"] = config;

  Pipeline pipeline(std::move(config), *run_dir, options, log);
  pipeline.manifest_ = std::move(manifest);
  return pipeline;
}

fs::path Pipeline::Path(std::string_view relative) const { return run_dir_ / relative; }

void Pipeline::SaveManifest() {
  WriteFileAtomic(Path(kRunManifestFile), manifest_.dump(2) + "\n");
}

std::string Pipeline::StageFingerprint(const StageSpec& spec) const {
  std::string material = spec.name + "\n" + config_.dump() + "\n";
  for (const auto& input : spec.inputs) {
    material += input + " " + Sha256File(Path(input)) + "\n";
  }
  for (const auto& output : spec.outputs) material += "out " + output + "\n";
  return Sha256Hex(material);
}

void Pipeline::RunStage(const StageSpec& spec, const std::function<json()>& body) {
  for (const auto& input : spec.inputs) {
    if (fs::exists(Path(input))) continue;
    if (fs::path(input).is_absolute()) {
      throw Error(ErrorCode::kConfig, "input file " + input + " does not exist");
    }
    throw Error(ErrorCode::kMissingArtifact,
                "stage '" + spec.name + "' needs " + input + "; run `" +
                    ProducerOf(input) + "` first");
  }
  const std::string fingerprint = StageFingerprint(spec);
  json& stages = manifest_["stages"];
  if (!options_.force && stages.contains(spec.name) &&
      stages[spec.name].value("fingerprint", "") == fingerprint) {
    bool intact = true;
    for (const auto& [output, hash] : stages[spec.name].at("outputs").items()) {
      if (!fs::exists(Path(output)) || Sha256File(Path(output)) != hash) {
        intact = false;
        break;
      }
    }
    if (intact) {
      log_ << "[" << spec.name << "] up to date, skipped\n";
      manifest_["events"].push_back(
          {{"stage", spec.name}, {"action", "skipped"}, {"fingerprint", fingerprint}});
      SaveManifest();
      return;
    }
  }

  log_ << "[" << spec.name << "] running\n";
  const auto start = std::chrono::steady_clock::now();
  json details;
  try {
    details = body();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "stage '" + spec.name + "': " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kStageFailure, "stage '" + spec.name + "': " + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json outputs = json::object();
  for (const auto& output : spec.outputs) {
    if (!fs::exists(Path(output))) {
      throw Error(ErrorCode::kStageFailure,
                  "stage '" + spec.name + "' did not produce " + output);
    }
    outputs[output] = Sha256File(Path(output));
  }
  stages[spec.name] = {{"completed", true},
                       {"fingerprint", fingerprint},
                       {"outputs", outputs},
                       {"details", details.is_null() ? json::object() : details},
                       {"seconds", seconds}};
  manifest_["events"].push_back(
      {{"stage", spec.name}, {"action", "completed"}, {"fingerprint", fingerprint}});
  SaveManifest();
  log_ << "[" << spec.name << "] completed in " << seconds << " s\n";
}

json Pipeline::BackendOptions() const {
  json options = config_.at("backend").value("options", json::object());
  if (config_.at("backend").at("spec") == "toy" && !options.contains("vocab") &&
      !options.contains("vocab_file")) {
    options["vocab_file"] = Path(kVocab).string();
  }
  return options;
}

std::vector<std::string> Pipeline::ReleaseStages() const {
  if (ParseTrack(config_.at("track").get<std::string>()) == Track::kAdvanced) {
    return {"rewritten", "basic2x", "advanced2x"};
  }
  return {"rewritten", "basic2x"};
}

std::vector<std::string> Pipeline::SelectedStages() const {
  if (!options_.stage) return ReleaseStages();
  static const std::set<std::string> kKnown = {"rewritten", "basic2x", "advanced2x"};
  if (!kKnown.contains(*options_.stage)) {
    throw Error(ErrorCode::kConfig, "unknown --stage '" + *options_.stage +
                                        "' (rewritten|basic2x|advanced2x)");
  }
  return {*options_.stage};
}

void Pipeline::SampleCorpus() {
  const auto dataset_path = ConfigValue<std::string>(config_, json::json_pointer("/dataset/path"));
  const auto public_path =
      ConfigValue<std::string>(config_, json::json_pointer("/public_corpus/path"));
  StageSpec spec{"sample-corpus",
                 {dataset_path, public_path},
                 {kPublicCorpus, kTrainSplit, kValidationSplit, kVocab}};
  RunStage(spec, [&]() -> json {
    const auto attribute =
        ConfigValue<std::string>(config_, json::json_pointer("/dataset/attribute"));
    const std::vector<TextRecord> records = LoadDatasetJsonl(dataset_path);
    for (const auto& r : records) {
      if (!r.attributes.contains(attribute)) {
        ThrowValidation("record '" + r.id + "' lacks attribute '" + attribute + "'");
      }
    }
    const DatasetSplit split =
        SplitDataset(records, config_.at("dataset").at("split_ratio").get<double>(),
                     config_.at("dataset").at("split_seed").get<uint64_t>());
    const std::vector<TextRecord> public_sample = SamplePublicCorpus(
        fs::path(public_path), config_.at("public_corpus").at("sample_size").get<size_t>(),
        config_.at("seeds").at("corpus").get<uint64_t>());
    SaveDatasetJsonl(public_sample, Path(kPublicCorpus));
    SaveDatasetJsonl(split.train, Path(kTrainSplit));
    SaveDatasetJsonl(split.validation, Path(kValidationSplit));

    std::vector<TextRecord> everything = public_sample;
    everything.insert(everything.end(), records.begin(), records.end());
    std::string vocab;
    for (const auto& word : BuildVocabulary(everything)) vocab += word + "\n";
    WriteFileAtomic(Path(kVocab), vocab);
    return {{"public_records", public_sample.size()},
            {"train_records", split.train.size()},
            {"validation_records", split.validation.size()}};
  });
}

void Pipeline::Rewrite() {
  StageSpec spec{"rewrite",
                 {kPublicCorpus, kTrainSplit, kValidationSplit, kVocab},
                 {kAlignedPublic, kAlignedPrivate, kResolvedMechanism,
                  ReleasePath("rewritten")}};
  RunStage(spec, [&]() -> json {
    std::shared_ptr<const InferenceBackend> backend = LoadBackend(
        config_.at("backend").at("spec").get<std::string>(), BackendOptions());
    const auto public_sample = LoadDatasetJsonl(Path(kPublicCorpus));
    std::vector<TextRecord> private_records = LoadDatasetJsonl(Path(kTrainSplit));
    const auto validation = LoadDatasetJsonl(Path(kValidationSplit));
    private_records.insert(private_records.end(), validation.begin(), validation.end());

    json mechanism_config = config_.at("mechanism");
    json details = json::object();
    if (mechanism_config.at("name") == kDpPromptName &&
        mechanism_config.at("clip").is_string()) {
      if (mechanism_config.at("clip") != "estimate") {
        throw Error(ErrorCode::kConfig, "dp-prompt clip must be [low, high] or \"estimate\"");
      }
      const ClipRange clip = EstimateLogitRange(
          *backend, public_sample, mechanism_config.at("estimate_texts").get<size_t>(),
          mechanism_config.at("prompt_template").get<std::string>(),
          mechanism_config.at("max_new_tokens").get<size_t>());
      mechanism_config["clip"] = {clip.low(), clip.high()};
      details["estimated_clip"] = {clip.low(), clip.high()};
    }
    const auto mechanism = MakeMechanism(mechanism_config, backend);
    const PrivacyBudget budget = mechanism->budget();
    ordered_json resolved;
    resolved["mechanism"] = mechanism_config;
    resolved["epsilon"] = budget.epsilon();
    resolved["granularity"] = GranularityName(budget.granularity());
    WriteFileAtomic(Path(kResolvedMechanism), resolved.dump(2) + "\n");

    const auto seed = config_.at("seeds").at("mechanism").get<uint64_t>();
    const auto workers = config_.at("workers").get<size_t>();
    // Private corpus base seed: SplitMix64(seed).
    const CorpusRewrite public_rewrite = RewriteCorpus(public_sample, *mechanism, seed, workers);
    const CorpusRewrite private_rewrite =
        RewriteCorpus(private_records, *mechanism, SplitMix64(seed), workers);

    const auto public_pairs = public_rewrite.Successful();
    const auto private_pairs = private_rewrite.Successful();
    SaveAlignedJsonl(public_pairs, Path(kAlignedPublic));
    SaveAlignedJsonl(private_pairs, Path(kAlignedPrivate));
    std::vector<ordered_json> release;
    for (const auto& pair : private_pairs) {
      release.push_back(ReleaseRecordJson(pair.id, pair.rewritten, "rewritten", pair));
    }
    WriteJsonLines(Path(ReleasePath("rewritten")), release);

    json failures = json::array();
    for (const auto* corpus : {&public_rewrite, &private_rewrite}) {
      for (const auto& pair : corpus->pairs) {
        if (pair.error) failures.push_back({{"id", pair.id}, {"error", *pair.error}});
      }
    }
    details["epsilon"] = budget.epsilon();
    details["epsilon_display"] = std::llround(budget.epsilon());
    details["granularity"] = GranularityName(budget.granularity());
    details["public_failures"] = public_rewrite.failure_count;
    details["private_failures"] = private_rewrite.failure_count;
    details["failures"] = failures;
    log_ << "  " << mechanism->name() << " epsilon=" << budget.epsilon() << " ("
         << GranularityName(budget.granularity()) << "), failures: "
         << public_rewrite.failure_count + private_rewrite.failure_count << "\n";
    return details;
  });
}

void Pipeline::BuildPairs() {
  StageSpec spec{"build-pairs",
                 {kAlignedPublic, kAlignedPrivate, kTrainSplit, kValidationSplit},
                 {kPublicPairs, kDomainPairs}};
  RunStage(spec, [&]() -> json {
    const ReversePairs public_pairs = BuildReversePairs(LoadAlignedJsonl(Path(kAlignedPublic)));
    const std::string domain_split = config_.at("advanced").at("domain_split").get<std::string>();
    if (domain_split != "train" && domain_split != "all") {
      throw Error(ErrorCode::kConfig, "advanced.domain_split must be train or all");
    }
    std::set<std::string> allowed;
    for (const auto& r : LoadDatasetJsonl(Path(kTrainSplit))) allowed.insert(r.id);
    if (domain_split == "all") {
      for (const auto& r : LoadDatasetJsonl(Path(kValidationSplit))) allowed.insert(r.id);
    }
    std::vector<AlignedPair> domain_aligned;
    for (auto& pair : LoadAlignedJsonl(Path(kAlignedPrivate))) {
      if (allowed.contains(pair.id)) domain_aligned.push_back(std::move(pair));
    }
    const ReversePairs domain_pairs = BuildReversePairs(domain_aligned);
    SaveReversePairsJsonl(public_pairs.pairs, Path(kPublicPairs));
    SaveReversePairsJsonl(domain_pairs.pairs, Path(kDomainPairs));
    return {{"public_pairs", public_pairs.pairs.size()},
            {"domain_pairs", domain_pairs.pairs.size()},
            {"skipped", public_pairs.skipped + domain_pairs.skipped}};
  });
}

void Pipeline::Finetune() {
  const bool advanced =
      ParseTrack(config_.at("track").get<std::string>()) == Track::kAdvanced;
  StageSpec spec{"finetune", {kPublicPairs, kAlignedPublic, kVocab}, {ModelManifestPath(kModelT)}};
  if (advanced) {
    spec.inputs.push_back(kDomainPairs);
    spec.inputs.push_back(kValidationSplit);
    spec.outputs.push_back(ModelManifestPath(kModelTpp));
  }
  RunStage(spec, [&]() -> json {
    json finetune_json = config_.at("finetune");
    if (!finetune_json.contains("base_spec")) finetune_json["base_spec"] = config_.at("backend").at("spec");
    finetune_json["seed"] = config_.at("seeds").at("training");
    const FineTuneConfig cfg = FineTuneConfig::FromJson(finetune_json);
    const auto public_pairs = LoadReversePairsJsonl(Path(kPublicPairs));
    auto backend = LoadTrainableBackend(cfg.base_spec, BackendOptions());
    const TrainedModelHandle t = TrainT(public_pairs, cfg, *backend, Path("models"), kModelT,
                                        Sha256File(Path(kAlignedPublic)));
    VerifyLineage(t);
    json details = {{"T", {{"pairs", public_pairs.size()}}}};
    if (advanced) {
      LeakGuard guard;
      for (const auto& r : LoadDatasetJsonl(Path(kValidationSplit))) {
        guard.validation_ids.insert(r.id);
      }
      guard.allow_overlap = config_.at("advanced").at("allow_validation_overlap").get<bool>();
      const auto domain_pairs = LoadReversePairsJsonl(Path(kDomainPairs));
      const TrainedModelHandle tpp =
          TrainTpp(t, domain_pairs, cfg, guard, Path("models"), kModelTpp);
      VerifyLineage(tpp);
      details["Tpp"] = {{"pairs", domain_pairs.size()}, {"parent", t.id}};
    }
    return details;
  });
}

void Pipeline::Rerewrite() {
  std::vector<std::string> stages;
  for (const auto& stage : SelectedStages()) {
    if (stage != "rewritten") stages.push_back(stage);
  }
  if (options_.stage && stages.empty()) {
    throw Error(ErrorCode::kConfig, "rerewrite produces basic2x or advanced2x only");
  }
  for (const auto& stage : stages) {
    const char* model_id = stage == "advanced2x" ? kModelTpp : kModelT;
    StageSpec spec{"rerewrite:" + stage,
                   {kAlignedPrivate, ModelManifestPath(model_id)},
                   {ReleasePath(stage)}};
    RunStage(spec, [&, model_id]() -> json {
      const TrainedModelHandle handle = ResolveModel(Path("models") / model_id);
      const auto model = LoadTrainedModel(handle);
      const auto aligned = LoadAlignedJsonl(Path(kAlignedPrivate));
      std::vector<RewriteResult> inputs;
      inputs.reserve(aligned.size());
      for (const auto& pair : aligned) inputs.push_back(pair.AsRewriteResult());
      const DecodeOptions decode = DecodeOptions::FromJson(config_.at("rerewrite"));
      const auto items = rewrite_again::Rerewrite(inputs, *model, decode);

      std::vector<ordered_json> release;
      json failures = json::array();
      for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].result.epsilon_per_unit != inputs[i].epsilon_per_unit ||
            items[i].result.granularity != inputs[i].granularity) {
          throw Error(ErrorCode::kStageFailure, "post-processing changed the budget");
        }
        if (items[i].error) {
          failures.push_back({{"id", aligned[i].id}, {"error", *items[i].error}});
          continue;
        }
        release.push_back(
            ReleaseRecordJson(aligned[i].id, items[i].result.text, stage, aligned[i]));
      }
      WriteJsonLines(Path(ReleasePath(stage)), release);
      return {{"model", handle.id}, {"released", release.size()}, {"failures", failures}};
    });
  }
}

namespace {

struct EvaluationInputs {
  DatasetSplit split;
  std::vector<StageInput> stages;
  EvaluationConfig cfg;
  ReportContext context;
};

}  // namespace

void Pipeline::Attack() {
  const auto stages = SelectedStages();
  StageSpec spec{"attack", {kTrainSplit, kValidationSplit, kResolvedMechanism, kVocab},
                 {kAttackScores}};
  for (const auto& stage : stages) {
    spec.inputs.push_back(ReleasePath(stage));
    if (stage == "basic2x") spec.inputs.push_back(ModelManifestPath(kModelT));
    if (stage == "advanced2x") spec.inputs.push_back(ModelManifestPath(kModelTpp));
  }
  if (options_.stage) spec.name += ":" + *options_.stage;
  RunStage(spec, [&]() -> json {
    DatasetSplit split;
    split.train = LoadDatasetJsonl(Path(kTrainSplit));
    split.validation = LoadDatasetJsonl(Path(kValidationSplit));
    split.ratio = config_.at("dataset").at("split_ratio").get<double>();
    split.seed = config_.at("dataset").at("split_seed").get<uint64_t>();

    json eval_json = config_.at("evaluation");
    eval_json["attribute"] = config_.at("dataset").at("attribute");
    eval_json["shadow_seed"] = config_.at("seeds").at("attack");
    const EvaluationConfig cfg = EvaluationConfig::FromJson(eval_json);

    const json resolved = json::parse(ReadFile(Path(kResolvedMechanism)));
    std::shared_ptr<const InferenceBackend> backend = LoadBackend(
        config_.at("backend").at("spec").get<std::string>(), BackendOptions());
    std::shared_ptr<const Mechanism> base = MakeMechanism(resolved.at("mechanism"), backend);
    const DecodeOptions decode = DecodeOptions::FromJson(config_.at("rerewrite"));

    std::vector<StageInput> inputs;
    for (const auto& stage : stages) {
      StageInput input;
      input.stage = stage;
      const auto texts = LoadReleaseTexts(Path(ReleasePath(stage)));
      for (const auto& record : split.validation) {
        auto it = texts.find(record.id);
        if (it == texts.end()) continue;  // reported by the id check
        TextRecord privatized = record;
        privatized.text = it->second;
        input.privatized_validation.push_back(std::move(privatized));
      }
      if (stage == "rewritten") {
        input.adaptive_mechanism = base;
      } else {
        const char* model_id = stage == "advanced2x" ? kModelTpp : kModelT;
        std::shared_ptr<const InferenceBackend> model =
            LoadTrainedModel(ResolveModel(Path("models") / model_id));
        input.adaptive_mechanism = std::make_shared<RealignedMechanism>(base, model, decode);
      }
      inputs.push_back(std::move(input));
    }
    const auto scores = RunAttacks(split, inputs, cfg);
    ordered_json out;
    out["evaluation"] = cfg.ToJson();
    ordered_json stage_scores = ordered_json::array();
    for (const auto& s : scores) {
      ordered_json j;
      j["stage"] = s.stage;
      j["baseline_f1"] = s.baseline_f1;
      j["static_f1"] = s.static_f1;
      j["adaptive_f1_runs"] = s.adaptive_f1_runs;
      j["majority_floor_f1"] = s.majority_floor_f1;
      stage_scores.push_back(j);
    }
    out["stages"] = stage_scores;
    WriteFileAtomic(Path(kAttackScores), out.dump(2) + "\n");
    return {{"stages", stages}};
  });
}

void Pipeline::Similarity() {
  const auto stages = SelectedStages();
  StageSpec spec{"similarity", {kValidationSplit}, {kSimilarityScores}};
  for (const auto& stage : stages) spec.inputs.push_back(ReleasePath(stage));
  if (options_.stage) spec.name += ":" + *options_.stage;
  RunStage(spec, [&]() -> json {
    DatasetSplit split;
    split.validation = LoadDatasetJsonl(Path(kValidationSplit));
    const json& encoders = config_.at("evaluation").at("encoders");
    if (!encoders.is_array() || encoders.size() != 2) {
      throw Error(ErrorCode::kConfig, "evaluation.encoders must list exactly two encoders");
    }
    const auto first = LoadEncoder(encoders[0].at("spec").get<std::string>(),
                                   encoders[0].value("options", json::object()));
    const auto second = LoadEncoder(encoders[1].at("spec").get<std::string>(),
                                    encoders[1].value("options", json::object()));
    std::vector<StageInput> inputs;
    for (const auto& stage : stages) {
      StageInput input;
      input.stage = stage;
      const auto texts = LoadReleaseTexts(Path(ReleasePath(stage)));
      for (const auto& record : split.validation) {
        auto it = texts.find(record.id);
        if (it == texts.end()) continue;
        TextRecord privatized = record;
        privatized.text = it->second;
        input.privatized_validation.push_back(std::move(privatized));
      }
      inputs.push_back(std::move(input));
    }
    const auto cs = RunSimilarity(split, inputs, *first, *second);
    ordered_json out;
    out["encoders"] = {first->name(), second->name()};
    ordered_json stage_scores = ordered_json::array();
    for (size_t i = 0; i < stages.size(); ++i) {
      stage_scores.push_back({{"stage", stages[i]}, {"cs", cs[i]}});
    }
    out["stages"] = stage_scores;
    WriteFileAtomic(Path(kSimilarityScores), out.dump(2) + "\n");
    return {{"stages", stages}};
  });
}

void Pipeline::Report() {
  StageSpec spec{"report",
                 {kAttackScores, kSimilarityScores, kResolvedMechanism},
                 {kPrivacyReports, kTableText, kTableCsv}};
  RunStage(spec, [&]() -> json {
    const json attack = json::parse(ReadFile(Path(kAttackScores)));
    const json similarity = json::parse(ReadFile(Path(kSimilarityScores)));
    const json resolved = json::parse(ReadFile(Path(kResolvedMechanism)));
    const EvaluationConfig cfg = EvaluationConfig::FromJson(attack.at("evaluation"));
    ReportContext context{
        config_.at("dataset").at("name").get<std::string>(),
        resolved.at("mechanism").at("name").get<std::string>(),
        PrivacyBudget(resolved.at("epsilon").get<double>(),
                      ParseGranularity(resolved.at("granularity").get<std::string>()))};
    std::map<std::string, double> cs_by_stage;
    for (const auto& s : similarity.at("stages")) {
      cs_by_stage[s.at("stage").get<std::string>()] = s.at("cs").get<double>();
    }
    std::vector<PrivacyReport> reports;
    ordered_json reports_json = ordered_json::array();
    for (const auto& s : attack.at("stages")) {
      StageAttackScores scores;
      scores.stage = s.at("stage").get<std::string>();
      scores.baseline_f1 = s.at("baseline_f1").get<double>();
      scores.static_f1 = s.at("static_f1").get<double>();
      scores.adaptive_f1_runs = s.at("adaptive_f1_runs").get<std::vector<double>>();
      scores.majority_floor_f1 = s.at("majority_floor_f1").get<double>();
      auto cs = cs_by_stage.find(scores.stage);
      if (cs == cs_by_stage.end()) {
        throw Error(ErrorCode::kMissingArtifact,
                    "no similarity score for stage '" + scores.stage +
                        "'; run `similarity` first");
      }
      reports.push_back(AssembleReport(context, cfg, scores, cs->second));
      reports_json.push_back(PrivacyReportToJson(reports.back()));
    }
    WriteFileAtomic(Path(kPrivacyReports), reports_json.dump(2) + "\n");
    WriteFileAtomic(Path(kTableText), RenderTable(reports, TableFormat::kText));
    WriteFileAtomic(Path(kTableCsv), RenderTable(reports, TableFormat::kCsv));
    return {{"reports", reports.size()}};
  });

  if (options_.extra_runs.empty()) {
    last_report_ = ReadFile(Path(kTableText));
    return;
  }
  std::vector<PrivacyReport> merged;
  std::vector<fs::path> runs = {run_dir_};
  runs.insert(runs.end(), options_.extra_runs.begin(), options_.extra_runs.end());
  for (const auto& run : runs) {
    const fs::path path = run / kPrivacyReports;
    if (!fs::exists(path)) {
      throw Error(ErrorCode::kMissingArtifact,
                  path.string() + " not found; run `report` in that run directory first");
    }
    for (const auto& j : json::parse(ReadFile(path))) {
      merged.push_back(PrivacyReportFromJson(j));
    }
  }
  last_report_ = RenderTable(merged, TableFormat::kText);
}

void Pipeline::Run(std::string_view subcommand) {
  if (subcommand == "sample-corpus") {
    SampleCorpus();
  } else if (subcommand == "rewrite") {
    Rewrite();
  } else if (subcommand == "build-pairs") {
    BuildPairs();
  } else if (subcommand == "finetune") {
    Finetune();
  } else if (subcommand == "rerewrite") {
    Rerewrite();
  } else if (subcommand == "attack") {
    Attack();
  } else if (subcommand == "similarity") {
    Similarity();
  } else if (subcommand == "report") {
    Report();
  } else if (subcommand == "pipeline") {
    options_.stage.reset();
    SampleCorpus();
    Rewrite();
    BuildPairs();
    Finetune();
    Rerewrite();
    Attack();
    Similarity();
    Report();
  } else {
    throw Error(ErrorCode::kConfig, "unknown subcommand '" + std::string(subcommand) + "'");
  }
}

}  // namespace rewrite_again
