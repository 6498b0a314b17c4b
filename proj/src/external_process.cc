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

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cerrno>
#include <cstring>

#include "rewrite_again/errors.h"
#include "rewrite_again/io.h"

extern char** environ;

namespace rewrite_again {
namespace {

constexpr char kWorkerStateFile[] = "worker_state.json";

std::vector<std::string> CommandFromOptions(const nlohmann::json& options) {
  if (options.contains("command")) {
    auto command = options.at("command").get<std::vector<std::string>>();
    if (command.empty()) throw Error(ErrorCode::kConfig, "empty worker command");
    return command;
  }
  return DefaultWorkerCommand();
}

}  // namespace

std::vector<std::string> DefaultWorkerCommand() {
  return {"python3", "-m", "rewrite_again.checkpoint_worker"};
}

ExternalProcess::ExternalProcess(const std::vector<std::string>& command) {
  if (command.empty()) throw Error(ErrorCode::kLoad, "empty worker command");
  // A worker that dies mid-request must surface as an error, not SIGPIPE.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kLoad, std::string("pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);
  const int rc =
      posix_spawnp(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw Error(ErrorCode::kLoad, "cannot start worker '" + command[0] +
                                      "': " + std::strerror(rc));
  }
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
}

ExternalProcess::~ExternalProcess() {
  if (to_child_ != nullptr) fclose(to_child_);
  if (from_child_ != nullptr) fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

nlohmann::json ExternalProcess::Call(const nlohmann::json& request,
                                     ErrorCode failure_code) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string line = request.dump() + "\n";
  if (fwrite(line.data(), 1, line.size(), to_child_) != line.size() ||
      fflush(to_child_) != 0) {
    throw Error(failure_code, "worker closed its input");
  }
  std::string reply;
  char buffer[65536];
  while (fgets(buffer, sizeof(buffer), from_child_) != nullptr) {
    reply += buffer;
    if (!reply.empty() && reply.back() == '\n') break;
  }
  if (reply.empty()) throw Error(failure_code, "worker exited without replying");
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(failure_code, "worker sent malformed reply: " + reply);
  }
  if (!parsed.value("ok", false)) {
    throw Error(failure_code,
                "worker: " + parsed.value("error", std::string("unknown failure")));
  }
  return parsed;
}

ExternalSeq2SeqBackend::ExternalSeq2SeqBackend(
    std::unique_ptr<ExternalProcess> process, const nlohmann::json& info,
    std::vector<std::string> command)
    : process_(std::move(process)), command_(std::move(command)) {
  vocab_size_ = info.at("vocab_size").get<size_t>();
  max_length_ = info.at("max_length").get<size_t>();
  eos_ = info.at("eos_token").get<TokenId>();
  supports_latent_ = info.value("supports_latent", false);
  if (vocab_size_ == 0 || max_length_ == 0) {
    throw Error(ErrorCode::kLoad, "worker reported an empty vocabulary");
  }
}

std::unique_ptr<ExternalSeq2SeqBackend> ExternalSeq2SeqBackend::Start(
    const std::string& checkpoint, const nlohmann::json& options) {
  auto command = CommandFromOptions(options);
  auto process = std::make_unique<ExternalProcess>(command);
  nlohmann::json worker_options = options;
  worker_options.erase("command");
  const nlohmann::json reply = process->Call(
      {{"op", "load"}, {"checkpoint", checkpoint}, {"options", worker_options}},
      ErrorCode::kLoad);
  return std::unique_ptr<ExternalSeq2SeqBackend>(new ExternalSeq2SeqBackend(
      std::move(process), reply.at("info"), std::move(command)));
}

std::unique_ptr<ExternalSeq2SeqBackend> ExternalSeq2SeqBackend::LoadState(
    const std::filesystem::path& dir) {
  nlohmann::json state;
  try {
    state = nlohmann::json::parse(ReadFile(dir / kWorkerStateFile));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kLoad, "cannot read worker state in " +
                                      dir.string() + ": " + e.what());
  }
  auto command = state.at("command").get<std::vector<std::string>>();
  auto process = std::make_unique<ExternalProcess>(command);
  const nlohmann::json reply = process->Call(
      {{"op", "load_state"}, {"dir", dir.string()}}, ErrorCode::kLoad);
  return std::unique_ptr<ExternalSeq2SeqBackend>(new ExternalSeq2SeqBackend(
      std::move(process), reply.at("info"), std::move(command)));
}

TokenSequence ExternalSeq2SeqBackend::Tokenize(std::string_view text) const {
  return process_->Call({{"op", "tokenize"}, {"text", text}})
      .at("tokens")
      .get<TokenSequence>();
}

std::string ExternalSeq2SeqBackend::Detokenize(
    std::span<const TokenId> tokens) const {
  return process_
      ->Call({{"op", "detokenize"},
              {"tokens", TokenSequence(tokens.begin(), tokens.end())}})
      .at("text")
      .get<std::string>();
}

LogitVector ExternalSeq2SeqBackend::NextTokenLogits(
    std::span<const TokenId> prompt, std::span<const TokenId> generated) const {
  auto logits =
      process_
          ->Call({{"op", "next_token_logits"},
                  {"prompt", TokenSequence(prompt.begin(), prompt.end())},
                  {"generated", TokenSequence(generated.begin(), generated.end())}})
          .at("logits")
          .get<std::vector<double>>();
  if (logits.size() != vocab_size_) {
    throw Error(ErrorCode::kBackend, "worker returned " +
                                         std::to_string(logits.size()) +
                                         " logits, expected " +
                                         std::to_string(vocab_size_));
  }
  return LogitVector(std::move(logits));
}

LatentVector ExternalSeq2SeqBackend::Encode(std::string_view text) const {
  if (!supports_latent_) return InferenceBackend::Encode(text);
  return LatentVector(process_->Call({{"op", "encode"}, {"text", text}})
                          .at("latent")
                          .get<std::vector<double>>());
}

std::string ExternalSeq2SeqBackend::DecodeFromLatent(const LatentVector& latent,
                                                     RandomSource& rng) const {
  if (!supports_latent_) return InferenceBackend::DecodeFromLatent(latent, rng);
  const auto values = latent.values();
  return process_
      ->Call({{"op", "decode_from_latent"},
              {"latent", std::vector<double>(values.begin(), values.end())},
              {"seed", rng.NextU64()}})
      .at("text")
      .get<std::string>();
}

void ExternalSeq2SeqBackend::Fit(std::span<const ReversePair> pairs,
                                 const FineTuneConfig& cfg) {
  cfg.Validate();
  nlohmann::json data = nlohmann::json::array();
  for (const auto& pair : pairs) {
    data.push_back({{"id", pair.id}, {"source", pair.source}, {"target", pair.target}});
  }
  process_->Call({{"op", "fit"}, {"pairs", data}, {"config", cfg.ToJson()}});
}

void ExternalSeq2SeqBackend::SaveState(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  process_->Call({{"op", "save"}, {"dir", dir.string()}});
  nlohmann::ordered_json state;
  state["command"] = command_;
  WriteFileAtomic(dir / kWorkerStateFile, state.dump() + "\n");
}

nlohmann::ordered_json ExternalSeq2SeqBackend::TrainerSettings() const {
  return process_->Call({{"op", "trainer_settings"}}).at("settings");
}

}  // namespace rewrite_again
