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

#include "rewrite_again/errors.h"

namespace rewrite_again {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid argument";
    case ErrorCode::kConfig:
      return "configuration error";
    case ErrorCode::kLoad:
      return "load error";
    case ErrorCode::kValidation:
      return "validation error";
    case ErrorCode::kValidationLeak:
      return "validation leak";
    case ErrorCode::kCapability:
      return "capability error";
    case ErrorCode::kBackend:
      return "backend error";
    case ErrorCode::kMissingArtifact:
      return "missing artifact";
    case ErrorCode::kStageFailure:
      return "stage failure";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void ThrowInvalidArgument(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, message);
}

void ThrowValidation(const std::string& message) {
  throw Error(ErrorCode::kValidation, message);
}

}  // namespace rewrite_again
