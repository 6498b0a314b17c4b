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

#include "rewrite_again/external_process.h"

#include <gtest/gtest.h>

#include "rewrite_again/errors.h"
#include "rewrite_again/evaluation.h"
#include "rewrite_again/mechanisms.h"
#include "rewrite_again/realign.h"
#include "test_util.h"

namespace rewrite_again {
namespace {

using nlohmann::json;
using testing::TempDir;

json WorkerOptions() {
  return {{"command", {"python3", std::string(REWRITE_AGAIN_SOURCE_DIR) + "/tests/fake_worker.py"}}};
}

TEST(ExternalBackendTest, ProtocolRoundTrip) {
  auto backend = LoadTrainableBackend("seq2seq-checkpoint:fake", WorkerOptions());
  EXPECT_EQ(backend->kind(), "seq2seq-checkpoint");
  EXPECT_EQ(backend->vocab_size(), 4u);
  EXPECT_EQ(backend->Tokenize("a c zz"), (TokenSequence{0, 2}));
  RandomSource rng(0, 0);
  EXPECT_EQ(DecodeText(*backend, "c a", DecodeOptions{}, rng).text, "c a");
  backend->Fit(std::vector<ReversePair>{{"1", "c a", "b"}}, FineTuneConfig{});
  EXPECT_EQ(DecodeText(*backend, "c a", DecodeOptions{}, rng).text, "b");
}

TEST(ExternalBackendTest, TrainedStateReloads) {
  TempDir dir("ext");
  auto backend = LoadTrainableBackend("seq2seq-checkpoint:fake", WorkerOptions());
  const auto handle = TrainT(std::vector<ReversePair>{{"1", "a", "c b"}}, FineTuneConfig{},
                             *backend, dir.path(), "T", "fp");
  auto model = LoadTrainedModel(handle);
  RandomSource rng(0, 0);
  EXPECT_EQ(DecodeText(*model, "a", DecodeOptions{}, rng).text, "c b");
  EXPECT_EQ(ReadModelManifest(handle).at("trainer_settings").at("optimizer"), "none");
}

TEST(ExternalBackendTest, DrivesBothMechanisms) {
  std::shared_ptr<const InferenceBackend> backend =
      LoadBackend("seq2seq-checkpoint:fake", WorkerOptions());
  RandomSource rng(1, 0);
  auto prompt = MakeMechanism({{"name", "dp-prompt"}, {"prompt_template", "{text}"},
                               {"clip", {-1, 6}}, {"temperature", 1.0}},
                              backend);
  EXPECT_EQ(prompt->Rewrite("a b", rng).granularity, Granularity::kWordLevel);
  auto bart = MakeMechanism({{"name", "dp-bart-clv"}}, backend);
  EXPECT_EQ(bart->Rewrite("a b", rng).text, "a b");
}

TEST(ExternalBackendTest, LoadFailureIsLoadError) {
  try {
    LoadBackend("seq2seq-checkpoint:broken", WorkerOptions());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLoad);
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(ExternalBackendTest, MissingExecutableIsLoadError) {
  try {
    LoadBackend("seq2seq-checkpoint:fake", {{"command", {"/nonexistent/worker"}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLoad);
  }
}

TEST(ExternalProcessTest, CrashedWorkerReported) {
  ExternalProcess process(
      {"python3", std::string(REWRITE_AGAIN_SOURCE_DIR) + "/tests/fake_worker.py"});
  EXPECT_THROW(process.Call({{"op", "crash"}}), Error);
}

TEST(ExternalEncoderTest, Embeds) {
  auto encoder = LoadEncoder("sentence-encoder:fake", WorkerOptions());
  const std::vector<std::string> texts = {"ab", "abc"};
  EXPECT_EQ(encoder->Embed(texts)[1], (std::vector<double>{1.0, 3.0}));
}

}  // namespace
}  // namespace rewrite_again
