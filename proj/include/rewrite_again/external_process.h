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

#ifndef REWRITE_AGAIN_EXTERNAL_PROCESS_H_
#define REWRITE_AGAIN_EXTERNAL_PROCESS_H_

#include <sys/types.h>

#include <cstdio>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewrite_again/backends.h"

namespace rewrite_again {

// Default worker command for checkpoint-backed models.
std::vector<std::string> DefaultWorkerCommand();

// Child process speaking newline-delimited JSON over stdin/stdout. Every
// request is one object; every reply is one object with "ok": true|false and
// an "error" string on failure. stderr is inherited.
class ExternalProcess {
 public:
  // Throws a load error when the process cannot be started.
  explicit ExternalProcess(const std::vector<std::string>& command);
  ~ExternalProcess();

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  // Sends `request` and returns the reply. A reply with "ok": false raises
  // `failure_code` carrying the worker's message.
  nlohmann::json Call(const nlohmann::json& request,
                      ErrorCode failure_code = ErrorCode::kBackend);

 private:
  pid_t pid_ = -1;
  FILE* to_child_ = nullptr;
  FILE* from_child_ = nullptr;
  std::mutex mu_;
};

// Seq2seq model hosted by a worker process. The options object is forwarded
// verbatim in the "load" request; the "command" key, when present, replaces
// DefaultWorkerCommand().
class ExternalSeq2SeqBackend final : public TrainableBackend {
 public:
  static std::unique_ptr<ExternalSeq2SeqBackend> Start(
      const std::string& checkpoint, const nlohmann::json& options);
  static std::unique_ptr<ExternalSeq2SeqBackend> LoadState(
      const std::filesystem::path& dir);

  std::string kind() const override { return "seq2seq-checkpoint"; }
  size_t vocab_size() const override { return vocab_size_; }
  size_t max_length() const override { return max_length_; }
  TokenId eos_token() const override { return eos_; }

  TokenSequence Tokenize(std::string_view text) const override;
  std::string Detokenize(std::span<const TokenId> tokens) const override;
  LogitVector NextTokenLogits(std::span<const TokenId> prompt,
                              std::span<const TokenId> generated) const override;

  bool SupportsLatent() const override { return supports_latent_; }
  LatentVector Encode(std::string_view text) const override;
  std::string DecodeFromLatent(const LatentVector& latent,
                               RandomSource& rng) const override;

  void Fit(std::span<const ReversePair> pairs,
           const FineTuneConfig& cfg) override;
  void SaveState(const std::filesystem::path& dir) const override;
  nlohmann::ordered_json TrainerSettings() const override;

 private:
  ExternalSeq2SeqBackend(std::unique_ptr<ExternalProcess> process,
                         const nlohmann::json& info,
                         std::vector<std::string> command);

  std::unique_ptr<ExternalProcess> process_;
  std::vector<std::string> command_;
  size_t vocab_size_ = 0;
  size_t max_length_ = 0;
  TokenId eos_ = 0;
  bool supports_latent_ = false;
};

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_EXTERNAL_PROCESS_H_
