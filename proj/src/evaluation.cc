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

#include "rewrite_again/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "rewrite_again/errors.h"
#include "rewrite_again/external_process.h"
#include "rewrite_again/io.h"
#include "rewrite_again/random.h"

namespace rewrite_again {
namespace {

constexpr std::string_view kToyEncoderPrefix = "toy-bow";
constexpr std::string_view kSentenceEncoderPrefix = "sentence-encoder:";
constexpr std::string_view kSequenceClassifierPrefix = "sequence-classifier:";

struct ClassCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t support = 0;
};

double F1FromCounts(int64_t tp, int64_t fp, int64_t fn) {
  const int64_t denominator = 2 * tp + fp + fn;
  if (denominator == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denominator);
}

std::vector<std::string> CommandOrDefault(const nlohmann::json& options) {
  if (options.is_object() && options.contains("command")) {
    return options.at("command").get<std::vector<std::string>>();
  }
  return DefaultWorkerCommand();
}

class ExternalEncoder final : public EncoderBackend {
 public:
  ExternalEncoder(std::string checkpoint, const nlohmann::json& options)
      : checkpoint_(std::move(checkpoint)),
        process_(std::make_unique<ExternalProcess>(CommandOrDefault(options))) {
    nlohmann::json worker_options = options.is_object() ? options : nlohmann::json::object();
    worker_options.erase("command");
    process_->Call({{"op", "load_encoder"},
                    {"checkpoint", checkpoint_},
                    {"options", worker_options}},
                   ErrorCode::kLoad);
  }

  std::string name() const override { return std::string(kSentenceEncoderPrefix) + checkpoint_; }

  std::vector<std::vector<double>> Embed(
      std::span<const std::string> texts) const override {
    return process_
        ->Call({{"op", "embed"},
                {"texts", std::vector<std::string>(texts.begin(), texts.end())}})
        .at("vectors")
        .get<std::vector<std::vector<double>>>();
  }

 private:
  std::string checkpoint_;
  std::unique_ptr<ExternalProcess> process_;
};

class ExternalClassifier final : public TextClassifier {
 public:
  ExternalClassifier(std::string checkpoint, std::span<const std::string> texts,
                     std::span<const Label> labels, const ClassifierConfig& cfg,
                     uint64_t shuffle_seed)
      : process_(std::make_unique<ExternalProcess>(DefaultWorkerCommand())),
        training_examples_(texts.size()) {
    const nlohmann::json reply = process_->Call(
        {{"op", "classifier_fit"},
         {"checkpoint", checkpoint},
         {"texts", std::vector<std::string>(texts.begin(), texts.end())},
         {"labels", std::vector<std::string>(labels.begin(), labels.end())},
         {"config", cfg.ToJson()},
         {"shuffle_seed", shuffle_seed}},
        ErrorCode::kLoad);
    state_ = reply.value("state_sha256", std::string());
  }

  Label Predict(std::string_view text) const override {
    return process_->Call({{"op", "classifier_predict"}, {"texts", {text}}})
        .at("labels")
        .at(0)
        .get<std::string>();
  }

  std::string Serialize() const override { return state_; }
  size_t training_examples() const override { return training_examples_; }

 private:
  std::unique_ptr<ExternalProcess> process_;
  size_t training_examples_;
  std::string state_;
};

std::string FormatFixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

std::string Pad(const std::string& s, size_t width) {
  // Right-pads to `width` code points.
  size_t length = 0;
  for (unsigned char c : s) length += (c & 0xC0) != 0x80;
  return length >= width ? s : s + std::string(width - length, ' ');
}

}  // namespace

std::string_view AveragingName(Averaging averaging) {
  switch (averaging) {
    case Averaging::kMacro:
      return "macro";
    case Averaging::kWeighted:
      return "weighted";
    case Averaging::kMicro:
      return "micro";
  }
  return "unknown";
}

Averaging ParseAveraging(std::string_view name) {
  if (name == "macro") return Averaging::kMacro;
  if (name == "weighted") return Averaging::kWeighted;
  if (name == "micro") return Averaging::kMicro;
  throw Error(ErrorCode::kConfig, "unknown F1 averaging '" + std::string(name) + "'");
}

double F1Score(std::span<const Label> preds, std::span<const Label> golds,
               Averaging averaging) {
  if (preds.size() != golds.size()) {
    ThrowInvalidArgument("F1 needs equal lengths, got " +
                         std::to_string(preds.size()) + " predictions and " +
                         std::to_string(golds.size()) + " labels");
  }
  if (golds.empty()) ThrowInvalidArgument("F1 needs at least one item");

  std::map<Label, ClassCounts> counts;
  for (size_t i = 0; i < golds.size(); ++i) {
    ++counts[golds[i]].support;
    if (preds[i] == golds[i]) {
      ++counts[golds[i]].tp;
    } else {
      ++counts[preds[i]].fp;
      ++counts[golds[i]].fn;
    }
  }

  switch (averaging) {
    case Averaging::kMacro: {
      double total = 0.0;
      for (const auto& [label, c] : counts) total += F1FromCounts(c.tp, c.fp, c.fn);
      return total / static_cast<double>(counts.size());
    }
    case Averaging::kWeighted: {
      double total = 0.0;
      for (const auto& [label, c] : counts) {
        total += static_cast<double>(c.support) * F1FromCounts(c.tp, c.fp, c.fn);
      }
      return total / static_cast<double>(golds.size());
    }
    case Averaging::kMicro: {
      int64_t tp = 0, fp = 0, fn = 0;
      for (const auto& [label, c] : counts) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
      }
      return F1FromCounts(tp, fp, fn);
    }
  }
  ThrowInvalidArgument("unknown averaging");
}

Label MajorityLabel(std::span<const Label> golds) {
  if (golds.empty()) ThrowInvalidArgument("majority of an empty label set");
  std::map<Label, size_t> frequency;
  for (const auto& g : golds) ++frequency[g];
  const Label* best = nullptr;
  size_t best_count = 0;
  for (const auto& [label, count] : frequency) {
    if (count > best_count) {  // map order keeps the smallest label on ties
      best = &label;
      best_count = count;
    }
  }
  return *best;
}

double MajorityBaseline(std::span<const Label> golds, Averaging averaging) {
  const std::vector<Label> preds(golds.size(), MajorityLabel(golds));
  return F1Score(preds, golds, averaging);
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    ThrowInvalidArgument("cosine needs equal dimensions");
  }
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    ThrowInvalidArgument("cosine of a zero vector is undefined");
  }
  return std::clamp(dot / (std::sqrt(norm_a) * std::sqrt(norm_b)), -1.0, 1.0);
}

ToyEncoder::ToyEncoder(size_t dims, uint64_t salt) : dims_(dims), salt_(salt) {
  if (dims_ < 2) ThrowInvalidArgument("toy encoder needs at least 2 dimensions");
}

std::string ToyEncoder::name() const {
  return std::string(kToyEncoderPrefix) + ":" + std::to_string(salt_) +
         "/dims=" + std::to_string(dims_);
}

std::vector<std::vector<double>> ToyEncoder::Embed(
    std::span<const std::string> texts) const {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> v(dims_, 0.0);
    v[0] = 1.0;
    for (const auto& word : SplitWords(text)) {
      const uint64_t h = SplitMix64(Fnv1a64(word) ^ SplitMix64(salt_));
      const size_t slot = 1 + static_cast<size_t>(h % (dims_ - 1));
      v[slot] += (h >> 63) ? 1.0 : -1.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::unique_ptr<EncoderBackend> LoadEncoder(std::string_view spec,
                                            const nlohmann::json& options) {
  const nlohmann::json opts = options.is_object() ? options : nlohmann::json::object();
  if (spec == kToyEncoderPrefix || spec.starts_with(std::string(kToyEncoderPrefix) + ":")) {
    uint64_t salt = opts.value("salt", uint64_t{0});
    if (spec.size() > kToyEncoderPrefix.size()) {
      try {
        salt = std::stoull(std::string(spec.substr(kToyEncoderPrefix.size() + 1)));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kConfig, "bad toy encoder salt in '" + std::string(spec) + "'");
      }
    }
    return std::make_unique<ToyEncoder>(opts.value("dims", size_t{256}), salt);
  }
  if (spec.starts_with(kSentenceEncoderPrefix)) {
    return std::make_unique<ExternalEncoder>(
        std::string(spec.substr(kSentenceEncoderPrefix.size())), opts);
  }
  throw Error(ErrorCode::kConfig, "unknown encoder spec '" + std::string(spec) + "'");
}

double CsScore(std::span<const std::string> originals,
               std::span<const std::string> candidates,
               const EncoderBackend& first, const EncoderBackend& second) {
  if (originals.size() != candidates.size()) {
    ThrowInvalidArgument("CS needs equal numbers of originals and candidates");
  }
  if (originals.empty()) ThrowInvalidArgument("CS needs at least one pair");
  auto mean_cosine = [&](const EncoderBackend& encoder) {
    const auto a = encoder.Embed(originals);
    const auto b = encoder.Embed(candidates);
    if (a.size() != originals.size() || b.size() != candidates.size()) {
      throw Error(ErrorCode::kBackend, "encoder returned the wrong number of vectors");
    }
    double total = 0.0;
    for (size_t i = 0; i < a.size(); ++i) total += Cosine(a[i], b[i]);
    return total / static_cast<double>(a.size());
  };
  return (mean_cosine(first) + mean_cosine(second)) / 2.0;
}

void ClassifierConfig::Validate() const {
  if (num_classes < 2) ThrowInvalidArgument("classifier needs at least 2 classes");
  if (epochs < 1) ThrowInvalidArgument("classifier epochs must be at least 1");
  if (!(learning_rate > 0.0)) ThrowInvalidArgument("learning rate must be positive");
  if (feature_dims == 0) ThrowInvalidArgument("feature_dims must be positive");
}

nlohmann::ordered_json ClassifierConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["backend_spec"] = backend_spec;
  j["num_classes"] = num_classes;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  j["feature_dims"] = feature_dims;
  return j;
}

ClassifierConfig ClassifierConfig::FromJson(const nlohmann::json& j) {
  ClassifierConfig cfg;
  cfg.backend_spec = j.value("backend_spec", cfg.backend_spec);
  cfg.num_classes = j.value("num_classes", cfg.num_classes);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.feature_dims = j.value("feature_dims", cfg.feature_dims);
  cfg.Validate();
  return cfg;
}

std::vector<Label> TextClassifier::PredictAll(std::span<const std::string> texts) const {
  std::vector<Label> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(Predict(t));
  return out;
}

BagOfTokensClassifier::BagOfTokensClassifier(ClassifierConfig cfg,
                                             std::vector<Label> labels)
    : cfg_(std::move(cfg)),
      labels_(std::move(labels)),
      weights_(labels_.size() * cfg_.feature_dims, 0.0),
      bias_(labels_.size(), 0.0) {}

std::vector<std::pair<size_t, double>> BagOfTokensClassifier::Features(
    std::string_view text) const {
  std::set<size_t> slots;
  for (const auto& word : SplitWords(text)) {
    slots.insert(static_cast<size_t>(Fnv1a64(word) % cfg_.feature_dims));
  }
  std::vector<std::pair<size_t, double>> features;
  if (slots.empty()) return features;
  const double value = 1.0 / std::sqrt(static_cast<double>(slots.size()));
  for (size_t s : slots) features.emplace_back(s, value);
  return features;
}

std::vector<double> BagOfTokensClassifier::Scores(
    const std::vector<std::pair<size_t, double>>& features) const {
  std::vector<double> scores = bias_;
  for (size_t c = 0; c < labels_.size(); ++c) {
    const double* row = weights_.data() + c * cfg_.feature_dims;
    for (const auto& [slot, value] : features) scores[c] += row[slot] * value;
  }
  return scores;
}

std::unique_ptr<BagOfTokensClassifier> BagOfTokensClassifier::Train(
    std::span<const std::string> texts, std::span<const Label> labels,
    const ClassifierConfig& cfg, uint64_t shuffle_seed) {
  cfg.Validate();
  if (texts.size() != labels.size()) {
    ThrowInvalidArgument("classifier needs one label per text");
  }
  if (texts.empty()) ThrowInvalidArgument("classifier needs training data");
  std::set<Label> distinct(labels.begin(), labels.end());
  if (distinct.size() > static_cast<size_t>(cfg.num_classes)) {
    ThrowValidation("training data has " + std::to_string(distinct.size()) +
                    " classes but the head has " + std::to_string(cfg.num_classes));
  }
  std::unique_ptr<BagOfTokensClassifier> clf(new BagOfTokensClassifier(
      cfg, std::vector<Label>(distinct.begin(), distinct.end())));
  std::map<Label, size_t> class_index;
  for (size_t c = 0; c < clf->labels_.size(); ++c) class_index[clf->labels_[c]] = c;

  std::vector<std::vector<std::pair<size_t, double>>> features;
  features.reserve(texts.size());
  for (const auto& t : texts) features.push_back(clf->Features(t));

  std::vector<size_t> order(texts.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t k = clf->labels_.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RandomSource rng(shuffle_seed, static_cast<uint64_t>(epoch));
    Shuffle(order, rng);
    for (size_t i : order) {
      const std::vector<double> probs = TemperatureSoftmax(clf->Scores(features[i]), 1.0);
      const size_t gold = class_index.at(labels[i]);
      for (size_t c = 0; c < k; ++c) {
        const double gradient = probs[c] - (c == gold ? 1.0 : 0.0);
        double* row = clf->weights_.data() + c * cfg.feature_dims;
        for (const auto& [slot, value] : features[i]) {
          row[slot] -= cfg.learning_rate * gradient * value;
        }
        clf->bias_[c] -= cfg.learning_rate * gradient;
      }
    }
  }
  clf->training_examples_ = texts.size();
  return clf;
}

Label BagOfTokensClassifier::Predict(std::string_view text) const {
  const std::vector<double> scores = Scores(Features(text));
  return labels_[std::max_element(scores.begin(), scores.end()) - scores.begin()];
}

std::string BagOfTokensClassifier::Serialize() const {
  nlohmann::ordered_json j;
  j["kind"] = "bag-of-tokens";
  j["config"] = cfg_.ToJson();
  j["labels"] = labels_;
  j["bias"] = bias_;
  j["weights"] = weights_;
  j["training_examples"] = training_examples_;
  return j.dump();
}

std::unique_ptr<TextClassifier> TrainClassifier(std::span<const std::string> texts,
                                                std::span<const Label> labels,
                                                const ClassifierConfig& cfg,
                                                uint64_t shuffle_seed) {
  if (cfg.backend_spec == "toy") {
    return BagOfTokensClassifier::Train(texts, labels, cfg, shuffle_seed);
  }
  if (cfg.backend_spec.starts_with(kSequenceClassifierPrefix)) {
    cfg.Validate();
    return std::make_unique<ExternalClassifier>(
        cfg.backend_spec.substr(kSequenceClassifierPrefix.size()), texts, labels,
        cfg, shuffle_seed);
  }
  throw Error(ErrorCode::kConfig,
              "unknown classifier spec '" + cfg.backend_spec + "'");
}

namespace {

std::vector<Label> LabelsOf(std::span<const TextRecord> records,
                            const std::string& attribute) {
  std::vector<Label> labels;
  labels.reserve(records.size());
  for (const auto& r : records) {
    auto it = r.attributes.find(attribute);
    if (it == r.attributes.end()) {
      ThrowValidation("record '" + r.id + "' has no attribute '" + attribute + "'");
    }
    labels.push_back(it->second);
  }
  return labels;
}

std::vector<std::string> TextsOf(std::span<const TextRecord> records) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(r.text);
  return texts;
}

struct ShadowSet {
  std::vector<std::string> texts;
  std::vector<Label> labels;
};

ShadowSet MakeShadowSet(const DatasetSplit& split, const std::string& attribute,
                        const Mechanism& mechanism, uint64_t shadow_seed) {
  const std::vector<Label> labels = LabelsOf(split.train, attribute);
  std::map<std::string, const Label*> label_of;
  for (size_t i = 0; i < split.train.size(); ++i) {
    label_of[split.train[i].id] = &labels[i];
  }
  const CorpusRewrite rewritten = RewriteCorpus(split.train, mechanism, shadow_seed);
  ShadowSet shadow;
  for (const auto& pair : rewritten.pairs) {
    if (pair.error) continue;
    shadow.texts.push_back(pair.rewritten);
    shadow.labels.push_back(*label_of.at(pair.id));
  }
  if (shadow.texts.empty()) {
    throw Error(ErrorCode::kStageFailure, "every shadow rewrite failed");
  }
  return shadow;
}

}  // namespace

std::unique_ptr<TextClassifier> TrainAttacker(const DatasetSplit& split,
                                              AttackerKind kind,
                                              const std::string& attribute,
                                              const Mechanism* mechanism,
                                              const ClassifierConfig& cfg,
                                              uint64_t shuffle_seed,
                                              uint64_t shadow_seed) {
  if (split.train.empty()) ThrowInvalidArgument("attacker needs a train split");
  if (kind == AttackerKind::kStatic) {
    return TrainClassifier(TextsOf(split.train), LabelsOf(split.train, attribute),
                           cfg, shuffle_seed);
  }
  if (mechanism == nullptr) {
    ThrowInvalidArgument("an adaptive attacker needs the mechanism");
  }
  const ShadowSet shadow = MakeShadowSet(split, attribute, *mechanism, shadow_seed);
  return TrainClassifier(shadow.texts, shadow.labels, cfg, shuffle_seed);
}

double EvaluateAttack(const TextClassifier& classifier,
                      std::span<const TextRecord> privatized_validation,
                      const std::string& attribute, Averaging averaging) {
  if (privatized_validation.empty()) {
    ThrowInvalidArgument("cannot evaluate on an empty validation set");
  }
  const std::vector<Label> golds = LabelsOf(privatized_validation, attribute);
  const std::vector<Label> preds =
      classifier.PredictAll(TextsOf(privatized_validation));
  return F1Score(preds, golds, averaging);
}

uint64_t EvaluationConfig::RunSeed(int run) const {
  return force_equal_run_seeds ? seed : seed + static_cast<uint64_t>(run);
}

void EvaluationConfig::Validate() const {
  if (attribute.empty()) ThrowInvalidArgument("evaluation needs an attribute");
  if (n_runs < 1) ThrowInvalidArgument("n_runs must be at least 1");
  classifier.Validate();
}

nlohmann::ordered_json EvaluationConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["attribute"] = attribute;
  j["classifier"] = classifier.ToJson();
  j["n_runs"] = n_runs;
  j["averaging"] = AveragingName(averaging);
  j["seed"] = seed;
  j["shadow_seed"] = shadow_seed;
  j["force_equal_run_seeds"] = force_equal_run_seeds;
  return j;
}

EvaluationConfig EvaluationConfig::FromJson(const nlohmann::json& j) {
  EvaluationConfig cfg;
  cfg.attribute = j.value("attribute", cfg.attribute);
  if (j.contains("classifier")) cfg.classifier = ClassifierConfig::FromJson(j.at("classifier"));
  cfg.n_runs = j.value("n_runs", cfg.n_runs);
  cfg.averaging = ParseAveraging(j.value("averaging", std::string("weighted")));
  cfg.seed = j.value("seed", cfg.seed);
  cfg.shadow_seed = j.value("shadow_seed", cfg.shadow_seed);
  cfg.force_equal_run_seeds = j.value("force_equal_run_seeds", cfg.force_equal_run_seeds);
  return cfg;
}

double PopulationStd(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double squares = 0.0;
  for (double v : values) squares += (v - mean) * (v - mean);
  return std::sqrt(squares / static_cast<double>(values.size()));
}

namespace {

double Mean(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

void CheckStageIds(const DatasetSplit& split, const StageInput& stage) {
  const std::set<std::string> expected = split.ValidationIds();
  std::set<std::string> present;
  for (const auto& r : stage.privatized_validation) present.insert(r.id);
  std::vector<std::string> missing;
  std::set_difference(expected.begin(), expected.end(), present.begin(),
                      present.end(), std::back_inserter(missing));
  std::vector<std::string> extra;
  std::set_difference(present.begin(), present.end(), expected.begin(),
                      expected.end(), std::back_inserter(extra));
  if (missing.empty() && extra.empty() &&
      present.size() == stage.privatized_validation.size()) {
    return;
  }
  std::string message = "stage '" + stage.stage + "' does not match the validation ids";
  auto list = [&message](const char* what, const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    message += std::string("; ") + what + ":";
    for (size_t i = 0; i < ids.size() && i < 20; ++i) message += " " + ids[i];
    if (ids.size() > 20) message += " ...";
  };
  list("missing", missing);
  list("unexpected", extra);
  ThrowValidation(message);
}

// Validation records reordered to the split's order, so golds line up.
std::vector<TextRecord> AlignToSplit(const DatasetSplit& split,
                                     const StageInput& stage) {
  std::map<std::string, const TextRecord*> by_id;
  for (const auto& r : stage.privatized_validation) by_id[r.id] = &r;
  std::vector<TextRecord> out;
  out.reserve(split.validation.size());
  for (const auto& clean : split.validation) {
    TextRecord r = clean;
    r.text = by_id.at(clean.id)->text;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<StageAttackScores> RunAttacks(const DatasetSplit& split,
                                          std::span<const StageInput> stages,
                                          const EvaluationConfig& cfg) {
  cfg.Validate();
  if (split.validation.empty()) ThrowInvalidArgument("empty validation split");
  for (const auto& stage : stages) CheckStageIds(split, stage);

  const std::vector<Label> golds = LabelsOf(split.validation, cfg.attribute);
  const double majority = MajorityBaseline(golds, cfg.averaging);

  std::vector<std::unique_ptr<TextClassifier>> static_models;
  std::vector<double> baseline_runs;
  for (int run = 0; run < cfg.n_runs; ++run) {
    static_models.push_back(TrainAttacker(split, AttackerKind::kStatic,
                                          cfg.attribute, nullptr, cfg.classifier,
                                          cfg.RunSeed(run), cfg.shadow_seed));
    baseline_runs.push_back(EvaluateAttack(*static_models.back(), split.validation,
                                           cfg.attribute, cfg.averaging));
  }
  const double baseline = Mean(baseline_runs);

  std::vector<StageAttackScores> out;
  for (const auto& stage : stages) {
    const std::vector<TextRecord> privatized = AlignToSplit(split, stage);
    StageAttackScores scores;
    scores.stage = stage.stage;
    scores.baseline_f1 = baseline;
    scores.majority_floor_f1 = majority;
    std::vector<double> static_runs;
    for (const auto& model : static_models) {
      static_runs.push_back(
          EvaluateAttack(*model, privatized, cfg.attribute, cfg.averaging));
    }
    scores.static_f1 = Mean(static_runs);

    if (!stage.adaptive_mechanism) {
      ThrowInvalidArgument("stage '" + stage.stage + "' has no adaptive mechanism");
    }
    const ShadowSet shadow = MakeShadowSet(split, cfg.attribute,
                                           *stage.adaptive_mechanism, cfg.shadow_seed);
    for (int run = 0; run < cfg.n_runs; ++run) {
      const auto model =
          TrainClassifier(shadow.texts, shadow.labels, cfg.classifier, cfg.RunSeed(run));
      scores.adaptive_f1_runs.push_back(
          EvaluateAttack(*model, privatized, cfg.attribute, cfg.averaging));
    }
    out.push_back(std::move(scores));
  }
  return out;
}

std::vector<double> RunSimilarity(const DatasetSplit& split,
                                  std::span<const StageInput> stages,
                                  const EncoderBackend& first,
                                  const EncoderBackend& second) {
  const std::vector<std::string> originals = TextsOf(split.validation);
  std::vector<double> out;
  for (const auto& stage : stages) {
    CheckStageIds(split, stage);
    out.push_back(CsScore(originals, TextsOf(AlignToSplit(split, stage)), first, second));
  }
  return out;
}

PrivacyReport AssembleReport(const ReportContext& context,
                             const EvaluationConfig& cfg,
                             const StageAttackScores& scores, double cs) {
  PrivacyReport r;
  r.dataset = context.dataset;
  r.attribute = cfg.attribute;
  r.stage = scores.stage;
  r.mechanism = context.mechanism;
  r.epsilon = context.budget.epsilon();
  r.granularity = std::string(GranularityName(context.budget.granularity()));
  r.averaging = std::string(AveragingName(cfg.averaging));
  r.runs = cfg.n_runs;
  r.baseline_f1 = scores.baseline_f1;
  r.static_f1 = scores.static_f1;
  r.adaptive_f1_runs = scores.adaptive_f1_runs;
  r.adaptive_f1_mean = Mean(scores.adaptive_f1_runs);
  r.adaptive_f1_std = PopulationStd(scores.adaptive_f1_runs);
  r.cs = cs;
  r.majority_floor_f1 = scores.majority_floor_f1;
  r.Validate();
  return r;
}

std::vector<PrivacyReport> RunEmpiricalPrivacy(const DatasetSplit& split,
                                               std::span<const StageInput> stages,
                                               const EvaluationConfig& cfg,
                                               const EncoderBackend& first,
                                               const EncoderBackend& second,
                                               const ReportContext& context) {
  const auto attacks = RunAttacks(split, stages, cfg);
  const auto similarity = RunSimilarity(split, stages, first, second);
  std::vector<PrivacyReport> reports;
  for (size_t i = 0; i < attacks.size(); ++i) {
    reports.push_back(AssembleReport(context, cfg, attacks[i], similarity[i]));
  }
  return reports;
}

void PrivacyReport::Validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(baseline_f1) || !in_unit(static_f1) || !in_unit(adaptive_f1_mean) ||
      !in_unit(majority_floor_f1)) {
    ThrowValidation("report for stage '" + stage + "' has an F1 outside [0, 1]");
  }
  for (double v : adaptive_f1_runs) {
    if (!in_unit(v)) ThrowValidation("adaptive run F1 outside [0, 1]");
  }
  if (!(adaptive_f1_std >= 0.0)) ThrowValidation("negative adaptive std");
  if (!(cs >= -1.0 && cs <= 1.0)) ThrowValidation("CS outside [-1, 1]");
  if (runs < 1 || static_cast<size_t>(runs) != adaptive_f1_runs.size()) {
    ThrowValidation("run count does not match adaptive scores");
  }
  if (stage.empty() || mechanism.empty() || dataset.empty()) {
    ThrowValidation("report is missing identifying fields");
  }
  if (!(epsilon > 0.0)) ThrowValidation("report epsilon must be positive");
}

nlohmann::ordered_json PrivacyReportToJson(const PrivacyReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["attribute"] = r.attribute;
  j["stage"] = r.stage;
  j["mechanism"] = r.mechanism;
  j["epsilon"] = r.epsilon;
  j["granularity"] = r.granularity;
  j["averaging"] = r.averaging;
  j["runs"] = r.runs;
  j["baseline_f1"] = r.baseline_f1;
  j["static_f1"] = r.static_f1;
  j["adaptive_f1_mean"] = r.adaptive_f1_mean;
  j["adaptive_f1_std"] = r.adaptive_f1_std;
  j["adaptive_f1_runs"] = r.adaptive_f1_runs;
  j["cs"] = r.cs;
  j["majority_floor_f1"] = r.majority_floor_f1;
  return j;
}

PrivacyReport PrivacyReportFromJson(const nlohmann::json& j) {
  PrivacyReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.attribute = j.at("attribute").get<std::string>();
    r.stage = j.at("stage").get<std::string>();
    r.mechanism = j.at("mechanism").get<std::string>();
    r.epsilon = j.at("epsilon").get<double>();
    r.granularity = j.at("granularity").get<std::string>();
    r.averaging = j.at("averaging").get<std::string>();
    r.runs = j.at("runs").get<int>();
    r.baseline_f1 = j.at("baseline_f1").get<double>();
    r.static_f1 = j.at("static_f1").get<double>();
    r.adaptive_f1_mean = j.at("adaptive_f1_mean").get<double>();
    r.adaptive_f1_std = j.at("adaptive_f1_std").get<double>();
    r.adaptive_f1_runs = j.at("adaptive_f1_runs").get<std::vector<double>>();
    r.cs = j.at("cs").get<double>();
    r.majority_floor_f1 = j.at("majority_floor_f1").get<double>();
  } catch (const nlohmann::json::exception& e) {
    ThrowValidation(std::string("malformed privacy report: ") + e.what());
  }
  r.Validate();
  return r;
}

std::string StageDisplayName(std::string_view stage) {
  if (stage == "rewritten") return "Rewritten";
  if (stage == "basic2x") return "Basic 2x";
  if (stage == "advanced2x") return "Advanced 2x";
  return std::string(stage);
}

std::string RenderTable(std::span<const PrivacyReport> reports, TableFormat format) {
  static const std::vector<std::string> kStageOrder = {"rewritten", "basic2x",
                                                       "advanced2x"};
  auto stage_rank = [](const std::string& stage) {
    auto it = std::find(kStageOrder.begin(), kStageOrder.end(), stage);
    return static_cast<size_t>(it - kStageOrder.begin());
  };
  auto pct = [](double v) { return FormatFixed(100.0 * v, 2); };

  std::ostringstream out;
  if (format == TableFormat::kCsv) {
    out << "dataset,attribute,stage,mechanism,epsilon,granularity,averaging,runs,"
           "baseline_f1,f1_static,f1_adaptive_mean,f1_adaptive_std,cs,"
           "majority_floor_f1\n";
  }

  std::vector<std::string> datasets;
  for (const auto& r : reports) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
      datasets.push_back(r.dataset);
    }
  }
  for (const auto& dataset : datasets) {
    std::vector<const PrivacyReport*> rows;
    for (const auto& r : reports) {
      if (r.dataset == dataset) rows.push_back(&r);
    }
    std::vector<std::pair<std::string, double>> groups;
    for (const auto* r : rows) {
      std::pair<std::string, double> key{r->mechanism, r->epsilon};
      if (std::find(groups.begin(), groups.end(), key) == groups.end()) {
        groups.push_back(key);
      }
    }
    std::vector<std::string> stages;
    for (const auto* r : rows) {
      if (std::find(stages.begin(), stages.end(), r->stage) == stages.end()) {
        stages.push_back(r->stage);
      }
    }
    std::stable_sort(stages.begin(), stages.end(), [&](const auto& a, const auto& b) {
      return stage_rank(a) < stage_rank(b);
    });
    auto find = [&](const std::string& stage, const std::pair<std::string, double>& g)
        -> const PrivacyReport* {
      for (const auto* r : rows) {
        if (r->stage == stage && r->mechanism == g.first && r->epsilon == g.second) {
          return r;
        }
      }
      return nullptr;
    };

    if (format == TableFormat::kCsv) {
      for (const auto& stage : stages) {
        for (const auto& g : groups) {
          const PrivacyReport* r = find(stage, g);
          if (r == nullptr) continue;
          out << r->dataset << ',' << r->attribute << ',' << r->stage << ','
              << r->mechanism << ',' << FormatFixed(r->epsilon, 6) << ','
              << r->granularity << ',' << r->averaging << ',' << r->runs << ','
              << FormatFixed(r->baseline_f1, 6) << ',' << FormatFixed(r->static_f1, 6)
              << ',' << FormatFixed(r->adaptive_f1_mean, 6) << ','
              << FormatFixed(r->adaptive_f1_std, 6) << ',' << FormatFixed(r->cs, 6)
              << ',' << FormatFixed(r->majority_floor_f1, 6) << '\n';
        }
      }
      continue;
    }

    const PrivacyReport* first = rows.front();
    out << dataset << " (" << first->attribute << ", " << first->averaging
        << " F1, " << first->runs << " runs)\n";
    out << "Baseline F1: " << pct(first->baseline_f1)
        << "    Majority-class F1: " << pct(first->majority_floor_f1) << "\n";
    constexpr size_t kRowLabel = 13;
    constexpr size_t kCell = 12;
    std::string header1 = Pad("", kRowLabel);
    std::string header2 = Pad("", kRowLabel);
    for (const auto& g : groups) {
      header1 += "| " + Pad(g.first + " (eps=" + FormatFixed(std::round(g.second), 0) + ")",
                            3 * kCell);
      header2 += "| " + Pad("F1 (stat.)", kCell) + Pad("F1 (adapt.)", kCell) +
                 Pad("CS", kCell);
    }
    for (std::string* header : {&header1, &header2}) {
      while (!header->empty() && header->back() == ' ') header->pop_back();
      out << *header << "\n";
    }
    for (const auto& stage : stages) {
      std::string line = Pad(StageDisplayName(stage), kRowLabel);
      for (const auto& g : groups) {
        const PrivacyReport* r = find(stage, g);
        if (r == nullptr) {
          line += "| " + Pad("-", kCell) + Pad("-", kCell) + Pad("-", kCell);
          continue;
        }
        line += "| " + Pad(pct(r->static_f1), kCell) +
                Pad(pct(r->adaptive_f1_mean) + "±" +
                        FormatFixed(100.0 * r->adaptive_f1_std, 1),
                    kCell) +
                Pad(FormatFixed(r->cs, 2), kCell);
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << "\n";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace rewrite_again
