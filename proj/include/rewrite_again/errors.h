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

#ifndef REWRITE_AGAIN_ERRORS_H_
#define REWRITE_AGAIN_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rewrite_again {

enum class ErrorCode {
  kInvalidArgument,
  kConfig,
  kLoad,
  kValidation,
  kValidationLeak,
  kCapability,
  kBackend,
  kMissingArtifact,
  kStageFailure,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported as this exception. The code selects the
// CLI exit status and the Python exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void ThrowInvalidArgument(const std::string& message);
[[noreturn]] void ThrowValidation(const std::string& message);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_ERRORS_H_
