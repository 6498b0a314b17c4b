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

#ifndef REWRITE_AGAIN_TYPES_H_
#define REWRITE_AGAIN_TYPES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rewrite_again/dp_core.h"

namespace rewrite_again {

// One corpus item. Attribute labels are opaque categorical strings.
struct TextRecord {
  std::string id;
  std::string text;
  std::map<std::string, std::string> attributes;

  bool operator==(const TextRecord&) const = default;
};

// Output of one mechanism invocation.
struct RewriteResult {
  std::string text;
  double epsilon_per_unit = 0.0;
  Granularity granularity = Granularity::kDocumentLevel;
  int64_t tokens_generated = 0;
  // Present only for word-level mechanisms.
  std::optional<double> naive_composed_epsilon;

  bool operator==(const RewriteResult&) const = default;
};

// (original, rewritten) pair with mechanism provenance.
struct AlignedPair {
  std::string id;
  std::string original;
  std::string rewritten;
  std::string mechanism;
  double epsilon = 0.0;
  Granularity granularity = Granularity::kDocumentLevel;
  int64_t tokens_generated = 0;
  // Set when the rewrite failed; such pairs never reach fine-tuning.
  std::optional<std::string> error;

  RewriteResult AsRewriteResult() const;

  bool operator==(const AlignedPair&) const = default;
};

// Fine-tuning example in the reverse direction: rewritten -> original.
struct ReversePair {
  std::string id;
  std::string source;
  std::string target;

  bool operator==(const ReversePair&) const = default;
};

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_TYPES_H_
