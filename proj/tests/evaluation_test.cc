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

#include <cmath>

#include <gtest/gtest.h>

#include "rewrite_again/corpus.h"
#include "rewrite_again/errors.h"
#include "rewrite_again/mechanisms.h"
#include "test_util.h"

namespace rewrite_again {
namespace {

using testing::MakeRecords;
using testing::MakeToy;
using testing::OracleF1;

std::vector<Label> L(std::initializer_list<const char*> labels) {
  return std::vector<Label>(labels.begin(), labels.end());
}

TEST(F1ScoreTest, PerfectPredictions) {
  const auto golds = L({"a", "b", "c", "a"});
  for (auto avg : {Averaging::kMacro, Averaging::kWeighted, Averaging::kMicro}) {
    EXPECT_EQ(F1Score(golds, golds, avg), 1.0);
  }
}

TEST(F1ScoreTest, HandComputedMacro) {
  EXPECT_NEAR(F1Score(L({"A", "B", "B", "B"}), L({"A", "A", "B", "B"}), Averaging::kMacro),
              (2.0 / 3.0 + 0.8) / 2, 1e-15);
  EXPECT_NEAR(F1Score(L({"A", "A", "A", "A"}), L({"A", "A", "A", "B"}), Averaging::kMacro),
              3.0 / 7.0, 1e-15);
}

TEST(F1ScoreTest, LengthMismatch) {
  try {
    F1Score(L({"a"}), L({"a", "b"}), Averaging::kMacro);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(F1ScoreTest, MatchesConfusionMatrixOracle) {
  RandomSource rng(2024, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t k = 2 + rng.UniformIndex(9);
    const size_t n = 1 + rng.UniformIndex(200);
    std::vector<Label> golds, preds;
    for (size_t i = 0; i < n; ++i) {
      golds.push_back("c" + std::to_string(rng.UniformIndex(k)));
      preds.push_back("c" + std::to_string(rng.UniformIndex(k)));
    }
    EXPECT_EQ(F1Score(preds, golds, Averaging::kMacro), OracleF1(preds, golds, "macro"));
    EXPECT_EQ(F1Score(preds, golds, Averaging::kWeighted), OracleF1(preds, golds, "weighted"));
    EXPECT_EQ(F1Score(preds, golds, Averaging::kMicro), OracleF1(preds, golds, "micro"));
  }
}

TEST(F1ScoreTest, BoundedProperty) {
  RandomSource rng(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Label> golds, preds;
    const size_t n = 1 + rng.UniformIndex(50);
    for (size_t i = 0; i < n; ++i) {
      golds.push_back(std::to_string(rng.UniformIndex(4)));
      preds.push_back(std::to_string(rng.UniformIndex(4)));
    }
    const double f = F1Score(preds, golds, Averaging::kWeighted);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(MajorityBaselineTest, SingleClassIsPerfect) {
  EXPECT_EQ(MajorityBaseline(L({"x", "x", "x"}), Averaging::kMacro), 1.0);
}

TEST(MajorityBaselineTest, UniformTwoClassMacro) {
  EXPECT_NEAR(MajorityBaseline(L({"a", "b", "a", "b"}), Averaging::kMacro), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(MajorityLabel(L({"b", "a", "a", "b"})), "a");
}

TEST(MajorityBaselineTest, PaperGenderProportions) {
  std::vector<Label> golds(579, "F");
  golds.insert(golds.end(), 421, "M");
  const std::vector<Label> all_majority(golds.size(), "F");
  for (auto avg : {Averaging::kMacro, Averaging::kWeighted, Averaging::kMicro}) {
    EXPECT_EQ(MajorityBaseline(golds, avg), OracleF1(all_majority, golds, std::string(AveragingName(avg))));
  }
}

TEST(CosineTest, KnownValues) {
  EXPECT_EQ(Cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0}), 1.0);
  EXPECT_EQ(Cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_EQ(Cosine(std::vector<double>{1, 0}, std::vector<double>{-1, 0}), -1.0);
  EXPECT_THROW(Cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
  EXPECT_THROW(Cosine(std::vector<double>{1}, std::vector<double>{1, 0}), Error);
}

TEST(CosineTest, SymmetricScaleInvariantBounded) {
  RandomSource rng(6, 0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a, b, scaled;
    const double lambda = 0.01 + 100 * rng.Uniform01();
    for (int i = 0; i < 8; ++i) {
      a.push_back(rng.Uniform01() - 0.5);
      b.push_back(rng.Uniform01() - 0.5);
      scaled.push_back(lambda * a.back());
    }
    const double c = Cosine(a, b);
    EXPECT_EQ(c, Cosine(b, a));
    EXPECT_NEAR(c, Cosine(scaled, b), 1e-12);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

class FixedEncoder final : public EncoderBackend {
 public:
  explicit FixedEncoder(double cosine) : cosine_(cosine) {}
  std::string name() const override { return "fixed"; }
  std::vector<std::vector<double>> Embed(std::span<const std::string> texts) const override {
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      if (t.starts_with("orig")) {
        out.push_back({1.0, 0.0});
      } else {
        out.push_back({cosine_, std::sqrt(1 - cosine_ * cosine_)});
      }
    }
    return out;
  }

 private:
  double cosine_;
};

TEST(CsScoreTest, AveragesEncoders) {
  const std::vector<std::string> originals = {"orig1", "orig2"};
  const std::vector<std::string> candidates = {"cand1", "cand2"};
  EXPECT_NEAR(CsScore(originals, candidates, FixedEncoder(0.2), FixedEncoder(0.4)), 0.3, 1e-12);
  EXPECT_NEAR(CsScore(originals, candidates, FixedEncoder(0.0), FixedEncoder(0.0)), 0.0, 1e-12);
  EXPECT_THROW(CsScore(originals, std::vector<std::string>{"x"}, FixedEncoder(0), FixedEncoder(0)),
               Error);
}

TEST(CsScoreTest, IdenticalTextsScoreOne) {
  const std::vector<std::string> texts = {"good food", "slow staff"};
  ToyEncoder a(64, 1), b(64, 2);
  EXPECT_NEAR(CsScore(texts, texts, a, b), 1.0, 1e-12);
  EXPECT_EQ(a.Embed(texts), a.Embed(texts));
}

TEST(LoadEncoderTest, Specs) {
  EXPECT_NE(LoadEncoder("toy-bow"), nullptr);
  EXPECT_NE(LoadEncoder("toy-bow:3", {{"dims", 32}}), nullptr);
  EXPECT_THROW(LoadEncoder("bogus"), Error);
}

TEST(ClassifierTest, LearnsSeparableData) {
  std::vector<std::string> texts;
  std::vector<Label> labels;
  for (int i = 0; i < 40; ++i) {
    texts.push_back(i % 2 ? "wine cozy dessert" : "beer steak grill");
    labels.push_back(i % 2 ? "F" : "M");
  }
  ClassifierConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.5;
  auto clf = TrainClassifier(texts, labels, cfg, 1);
  EXPECT_EQ(clf->Predict("wine dessert"), "F");
  EXPECT_EQ(clf->Predict("beer grill"), "M");
  EXPECT_EQ(clf->training_examples(), 40u);
  auto again = TrainClassifier(texts, labels, cfg, 1);
  EXPECT_EQ(clf->Serialize(), again->Serialize());
}

TEST(ClassifierTest, NeedsTwoClasses) {
  ClassifierConfig cfg;
  cfg.num_classes = 1;
  EXPECT_THROW(cfg.Validate(), Error);
}

class EchoClassifier final : public TextClassifier {
 public:
  explicit EchoClassifier(std::map<std::string, Label> answers) : answers_(std::move(answers)) {}
  Label Predict(std::string_view text) const override { return answers_.at(std::string(text)); }
  std::string Serialize() const override { return ""; }
  size_t training_examples() const override { return 0; }

 private:
  std::map<std::string, Label> answers_;
};

TEST(EvaluateAttackTest, GoldEchoAndMajority) {
  auto records = MakeRecords(30);
  std::map<std::string, Label> gold, majority;
  std::vector<Label> golds;
  for (const auto& r : records) {
    gold[r.text] = r.attributes.at("label");
    golds.push_back(r.attributes.at("label"));
  }
  const Label top = MajorityLabel(golds);
  for (const auto& r : records) majority[r.text] = top;
  // Texts may repeat with different labels; keep only consistent ones.
  std::vector<TextRecord> clean;
  for (const auto& r : records) {
    if (gold[r.text] == r.attributes.at("label")) clean.push_back(r);
  }
  EXPECT_EQ(EvaluateAttack(EchoClassifier(gold), clean, "label", Averaging::kWeighted), 1.0);
  std::vector<Label> clean_golds;
  for (const auto& r : clean) clean_golds.push_back(r.attributes.at("label"));
  const std::vector<Label> maj(clean.size(), MajorityLabel(clean_golds));
  std::map<std::string, Label> clean_majority;
  for (const auto& r : clean) clean_majority[r.text] = maj[0];
  EXPECT_EQ(EvaluateAttack(EchoClassifier(clean_majority), clean, "label", Averaging::kMacro),
            MajorityBaseline(clean_golds, Averaging::kMacro));
  EXPECT_THROW(EvaluateAttack(EchoClassifier(gold), {}, "label", Averaging::kMacro), Error);
}

class AttackFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    records_ = MakeRecords(60);
    split_ = SplitDataset(records_, 0.8, 42);
    toy_ = MakeToy({"good", "bad", "food", "slow", "fast", "staff", "cozy", "beer", "wine",
                    "price"});
    DpPromptConfig pc;
    pc.clip = ClipRange(-1, 1);
    pc.prompt_template = "{text}";
    pc.max_new_tokens = 10;
    mechanism_ = std::make_shared<DpPromptMechanism>(pc, toy_);
    cfg_.attribute = "label";
    cfg_.classifier.epochs = 3;
    cfg_.classifier.learning_rate = 0.5;
  }

  StageInput Rewritten() const {
    StageInput s;
    s.stage = "rewritten";
    const auto rewritten = RewriteCorpus(split_.validation, *mechanism_, 3);
    for (const auto& pair : rewritten.pairs) {
      for (const auto& r : split_.validation) {
        if (r.id != pair.id) continue;
        TextRecord copy = r;
        copy.text = pair.rewritten;
        s.privatized_validation.push_back(copy);
      }
    }
    s.adaptive_mechanism = mechanism_;
    return s;
  }

  std::vector<TextRecord> records_;
  DatasetSplit split_;
  std::shared_ptr<ToyBackend> toy_;
  std::shared_ptr<const Mechanism> mechanism_;
  EvaluationConfig cfg_;
};

TEST_F(AttackFixture, ForcedEqualSeedsGiveZeroStd) {
  cfg_.force_equal_run_seeds = true;
  const std::vector<StageInput> stages = {Rewritten()};
  const auto scores = RunAttacks(split_, stages, cfg_);
  ASSERT_EQ(scores.size(), 1u);
  ASSERT_EQ(scores[0].adaptive_f1_runs.size(), 3u);
  EXPECT_EQ(PopulationStd(scores[0].adaptive_f1_runs), 0.0);
}

TEST_F(AttackFixture, RunSeedsFollowIndex) {
  EXPECT_EQ(cfg_.RunSeed(0), 42u);
  EXPECT_EQ(cfg_.RunSeed(2), 44u);
  cfg_.force_equal_run_seeds = true;
  EXPECT_EQ(cfg_.RunSeed(2), 42u);
}

TEST_F(AttackFixture, MissingIdsListed) {
  auto stage = Rewritten();
  const std::string dropped = stage.privatized_validation.back().id;
  stage.privatized_validation.pop_back();
  try {
    RunAttacks(split_, std::vector<StageInput>{stage}, cfg_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_NE(std::string(e.what()).find(dropped), std::string::npos);
  }
}

TEST_F(AttackFixture, AdaptiveNeedsMechanism) {
  EXPECT_THROW(TrainAttacker(split_, AttackerKind::kAdaptive, "label", nullptr,
                             cfg_.classifier, 1, 2),
               Error);
  EXPECT_THROW(TrainAttacker(split_, AttackerKind::kStatic, "missing", nullptr,
                             cfg_.classifier, 1, 2),
               Error);
}

TEST_F(AttackFixture, ReportsAreBounded) {
  const std::vector<StageInput> stages = {Rewritten()};
  ToyEncoder a(64, 1), b(64, 2);
  ReportContext context{"toy", "dp-prompt", mechanism_->budget()};
  const auto reports = RunEmpiricalPrivacy(split_, stages, cfg_, a, b, context);
  ASSERT_EQ(reports.size(), 1u);
  const auto& r = reports[0];
  EXPECT_NO_THROW(r.Validate());
  for (double f : {r.baseline_f1, r.static_f1, r.adaptive_f1_mean, r.majority_floor_f1}) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  EXPECT_GE(r.adaptive_f1_std, 0.0);
  EXPECT_GE(r.cs, -1.0);
  EXPECT_LE(r.cs, 1.0);
  EXPECT_EQ(PrivacyReportToJson(PrivacyReportFromJson(PrivacyReportToJson(r))),
            PrivacyReportToJson(r));
  const std::string table = RenderTable(reports, TableFormat::kText);
  EXPECT_NE(table.find("Rewritten"), std::string::npos);
  EXPECT_NE(table.find("eps=4)"), std::string::npos);
}

}  // namespace
}  // namespace rewrite_again
