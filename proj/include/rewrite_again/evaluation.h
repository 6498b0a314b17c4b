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

#ifndef REWRITE_AGAIN_EVALUATION_H_
#define REWRITE_AGAIN_EVALUATION_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rewrite_again/corpus.h"
#include "rewrite_again/mechanisms.h"
#include "rewrite_again/types.h"

namespace rewrite_again {

using Label = std::string;

enum class Averaging { kMacro, kWeighted, kMicro };

std::string_view AveragingName(Averaging averaging);
Averaging ParseAveraging(std::string_view name);

// Single-label multi-class F1. Per class c, F1 = 2tp / (2tp + fp + fn) with
// 0/0 taken as 0, over the union of labels seen in golds and preds (sorted).
// macro: unweighted mean; weighted: mean weighted by gold support; micro:
// 2TP / (2TP + FP + FN) over all classes.
double F1Score(std::span<const Label> preds, std::span<const Label> golds,
               Averaging averaging);

// Most frequent gold label, lexicographically smallest among ties.
Label MajorityLabel(std::span<const Label> golds);

// F1 of predicting MajorityLabel(golds) for every item.
double MajorityBaseline(std::span<const Label> golds, Averaging averaging);

// a.b / (|a||b|), clamped to [-1, 1]. Rejects zero vectors and dimension
// mismatches.
double Cosine(std::span<const double> a, std::span<const double> b);

// Sentence encoder used for the similarity metric.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::vector<double>> Embed(
      std::span<const std::string> texts) const = 0;
};

// Signed feature hashing of whitespace tokens plus one constant feature, so
// every text (including the empty one) embeds to a non-zero vector.
class ToyEncoder final : public EncoderBackend {
 public:
  ToyEncoder(size_t dims, uint64_t salt);

  std::string name() const override;
  std::vector<std::vector<double>> Embed(
      std::span<const std::string> texts) const override;

 private:
  size_t dims_;
  uint64_t salt_;
};

// "toy-bow" / "toy-bow:<salt>" (options: dims, salt) or
// "sentence-encoder:<checkpoint>" served by a worker process.
std::unique_ptr<EncoderBackend> LoadEncoder(std::string_view spec,
                                            const nlohmann::json& options = {});

// Mean over pairs of cosine(embed(original), embed(candidate)) per encoder,
// then the mean of the two encoder scores.
double CsScore(std::span<const std::string> originals,
               std::span<const std::string> candidates,
               const EncoderBackend& first, const EncoderBackend& second);

struct ClassifierConfig {
  std::string backend_spec = "toy";
  int num_classes = 2;
  int epochs = 1;
  double learning_rate = 5e-5;
  uint64_t seed = 42;
  // Hashed feature width of the toy classifier.
  size_t feature_dims = 4096;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static ClassifierConfig FromJson(const nlohmann::json& j);
};

class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual Label Predict(std::string_view text) const = 0;
  // Deterministic serialization of the trained state.
  virtual std::string Serialize() const = 0;
  virtual size_t training_examples() const = 0;

  std::vector<Label> PredictAll(std::span<const std::string> texts) const;
};

// Multinomial logistic regression over hashed bag-of-token features trained
// by plain SGD. Example order per epoch comes from
// Shuffle(RandomSource(shuffle_seed, epoch)).
class BagOfTokensClassifier final : public TextClassifier {
 public:
  static std::unique_ptr<BagOfTokensClassifier> Train(
      std::span<const std::string> texts, std::span<const Label> labels,
      const ClassifierConfig& cfg, uint64_t shuffle_seed);

  Label Predict(std::string_view text) const override;
  std::string Serialize() const override;
  size_t training_examples() const override { return training_examples_; }

 private:
  BagOfTokensClassifier(ClassifierConfig cfg, std::vector<Label> labels);

  std::vector<std::pair<size_t, double>> Features(std::string_view text) const;
  std::vector<double> Scores(
      const std::vector<std::pair<size_t, double>>& features) const;

  ClassifierConfig cfg_;
  std::vector<Label> labels_;
  std::vector<double> weights_;  // labels x feature_dims, row-major
  std::vector<double> bias_;
  size_t training_examples_ = 0;
};

// "toy" trains a BagOfTokensClassifier; "sequence-classifier:<checkpoint>"
// fine-tunes in a worker process.
std::unique_ptr<TextClassifier> TrainClassifier(std::span<const std::string> texts,
                                                std::span<const Label> labels,
                                                const ClassifierConfig& cfg,
                                                uint64_t shuffle_seed);

enum class AttackerKind { kStatic, kAdaptive };

// Static attackers fit the clean train texts and never touch the mechanism.
// Adaptive attackers rewrite the train split with `mechanism` under
// RewriteCorpus(..., shadow_seed) and fit the shadow texts.
std::unique_ptr<TextClassifier> TrainAttacker(const DatasetSplit& split,
                                              AttackerKind kind,
                                              const std::string& attribute,
                                              const Mechanism* mechanism,
                                              const ClassifierConfig& cfg,
                                              uint64_t shuffle_seed,
                                              uint64_t shadow_seed);

// F1 of `classifier` on privatized validation records (text already
// privatized) against their `attribute` labels.
double EvaluateAttack(const TextClassifier& classifier,
                      std::span<const TextRecord> privatized_validation,
                      const std::string& attribute, Averaging averaging);

struct EvaluationConfig {
  std::string attribute;
  ClassifierConfig classifier;
  int n_runs = 3;
  Averaging averaging = Averaging::kWeighted;
  // Run k trains with shuffle seed `seed + k` (or `seed` when forced equal).
  uint64_t seed = 42;
  uint64_t shadow_seed = 99;
  bool force_equal_run_seeds = false;

  uint64_t RunSeed(int run) const;
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static EvaluationConfig FromJson(const nlohmann::json& j);
};

struct StageInput {
  std::string stage;
  // Validation records with privatized text, same ids as the split.
  std::vector<TextRecord> privatized_validation;
  // What the adaptive attacker runs to produce shadow texts for this stage.
  std::shared_ptr<const Mechanism> adaptive_mechanism;
};

struct PrivacyReport {
  std::string dataset;
  std::string attribute;
  std::string stage;
  std::string mechanism;
  double epsilon = 0.0;
  std::string granularity;
  std::string averaging;
  int runs = 0;
  double baseline_f1 = 0.0;
  double static_f1 = 0.0;
  double adaptive_f1_mean = 0.0;
  double adaptive_f1_std = 0.0;
  std::vector<double> adaptive_f1_runs;
  double cs = 0.0;
  double majority_floor_f1 = 0.0;

  // Raises a validation error if any bound is violated.
  void Validate() const;
};

nlohmann::ordered_json PrivacyReportToJson(const PrivacyReport& report);
PrivacyReport PrivacyReportFromJson(const nlohmann::json& j);

struct StageAttackScores {
  std::string stage;
  double baseline_f1 = 0.0;
  double static_f1 = 0.0;
  std::vector<double> adaptive_f1_runs;
  double majority_floor_f1 = 0.0;
};

// Baseline, static and adaptive F1 for every stage. The static classifiers
// (one per run) are trained once and shared by all stages.
std::vector<StageAttackScores> RunAttacks(const DatasetSplit& split,
                                          std::span<const StageInput> stages,
                                          const EvaluationConfig& cfg);

// CS per stage between clean and privatized validation texts.
std::vector<double> RunSimilarity(const DatasetSplit& split,
                                  std::span<const StageInput> stages,
                                  const EncoderBackend& first,
                                  const EncoderBackend& second);

struct ReportContext {
  std::string dataset;
  std::string mechanism;
  PrivacyBudget budget{1.0, Granularity::kDocumentLevel};
};

PrivacyReport AssembleReport(const ReportContext& context,
                             const EvaluationConfig& cfg,
                             const StageAttackScores& scores, double cs);

// Attacks and similarity for every stage, one report per stage.
std::vector<PrivacyReport> RunEmpiricalPrivacy(const DatasetSplit& split,
                                               std::span<const StageInput> stages,
                                               const EvaluationConfig& cfg,
                                               const EncoderBackend& first,
                                               const EncoderBackend& second,
                                               const ReportContext& context);

// Population standard deviation.
double PopulationStd(std::span<const double> values);

enum class TableFormat { kText, kCsv };

// Table-shaped rendering: per dataset a "Baseline F1" header, one row per
// stage (Rewritten, Basic 2x, Advanced 2x) and per (mechanism, epsilon)
// column group F1 (stat.), F1 (adapt.) mean±std and CS. F1 values are
// shown as percentages; epsilon is rounded for display only.
std::string RenderTable(std::span<const PrivacyReport> reports, TableFormat format);

std::string StageDisplayName(std::string_view stage);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_EVALUATION_H_
