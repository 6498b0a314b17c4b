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

#ifndef REWRITE_AGAIN_IO_H_
#define REWRITE_AGAIN_IO_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rewrite_again {

// Calls `fn(line_number, object)` for every non-blank line. Parse failures
// raise a validation error naming the file and 1-based line number.
void ReadJsonLines(
    const std::filesystem::path& path,
    const std::function<void(size_t, const nlohmann::json&)>& fn);

// Writes one compact JSON object per line, UTF-8, '\n' terminated. The file
// is written to a sibling temporary and renamed into place.
void WriteJsonLines(const std::filesystem::path& path,
                    const std::vector<nlohmann::ordered_json>& lines);

std::string ReadFile(const std::filesystem::path& path);
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

// Splits on ASCII whitespace.
std::vector<std::string> SplitWords(std::string_view text);

// 64-bit FNV-1a.
uint64_t Fnv1a64(std::string_view data);

}  // namespace rewrite_again

#endif  // REWRITE_AGAIN_IO_H_
