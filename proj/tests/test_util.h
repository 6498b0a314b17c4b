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

// Shared fixtures and independent oracles for the unit tests.

#ifndef REWRITE_AGAIN_TESTS_TEST_UTIL_H_
#define REWRITE_AGAIN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "rewrite_again/random.h"
#include "rewrite_again/toy_backend.h"
#include "rewrite_again/types.h"

namespace rewrite_again::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rewrite_again_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::shared_ptr<ToyBackend> MakeToy(std::vector<std::string> vocab,
                                           std::vector<double> default_row = {}) {
  ToyBackendOptions options;
  options.vocab = std::move(vocab);
  options.default_row = std::move(default_row);
  return std::make_shared<ToyBackend>(options);
}

inline std::vector<TextRecord> MakeRecords(size_t n, const std::string& prefix = "r") {
  static const char* kWords[] = {"good", "bad", "food", "slow", "fast", "staff",
                                 "cozy", "beer", "wine", "price"};
  std::vector<TextRecord> records;
  RandomSource rng(n, 17);
  for (size_t i = 0; i < n; ++i) {
    TextRecord r;
    r.id = prefix + std::to_string(i);
    const size_t len = 3 + rng.UniformIndex(5);
    for (size_t w = 0; w < len; ++w) {
      if (w > 0) r.text += " ";
      r.text += kWords[rng.UniformIndex(10)];
    }
    r.attributes["label"] = (r.text.find("wine") != std::string::npos) ? "x" : "y";
    records.push_back(std::move(r));
  }
  return records;
}

// Brute-force F1 from an explicit K x K confusion matrix.
inline double OracleF1(const std::vector<std::string>& preds,
                       const std::vector<std::string>& golds, const std::string& averaging) {
  std::set<std::string> label_set(golds.begin(), golds.end());
  label_set.insert(preds.begin(), preds.end());
  const std::vector<std::string> labels(label_set.begin(), label_set.end());
  const size_t k = labels.size();
  auto index = [&](const std::string& l) {
    return static_cast<size_t>(std::lower_bound(labels.begin(), labels.end(), l) -
                               labels.begin());
  };
  std::vector<std::vector<int64_t>> matrix(k, std::vector<int64_t>(k, 0));
  for (size_t i = 0; i < golds.size(); ++i) ++matrix[index(golds[i])][index(preds[i])];

  auto f1 = [](int64_t tp, int64_t fp, int64_t fn) {
    const int64_t d = 2 * tp + fp + fn;
    return d == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(d);
  };
  int64_t all_tp = 0, all_fp = 0, all_fn = 0;
  double macro = 0.0, weighted = 0.0;
  for (size_t c = 0; c < k; ++c) {
    int64_t row = 0, col = 0;
    for (size_t j = 0; j < k; ++j) {
      row += matrix[c][j];
      col += matrix[j][c];
    }
    const int64_t tp = matrix[c][c];
    const int64_t fp = col - tp;
    const int64_t fn = row - tp;
    all_tp += tp;
    all_fp += fp;
    all_fn += fn;
    macro += f1(tp, fp, fn);
    weighted += static_cast<double>(row) * f1(tp, fp, fn);
  }
  if (averaging == "macro") return macro / static_cast<double>(k);
  if (averaging == "weighted") return weighted / static_cast<double>(golds.size());
  return f1(all_tp, all_fp, all_fn);
}

// Standalone clipped-softmax sampler: weights exp((clip(x) - max) / T),
// inverse CDF on unnormalized mass.
inline size_t OracleSample(const std::vector<double>& logits, double low, double high,
                           double temperature, double u) {
  std::vector<double> clipped;
  for (double x : logits) clipped.push_back(x < low ? low : (x > high ? high : x));
  const double top = *std::max_element(clipped.begin(), clipped.end());
  std::vector<double> weights;
  double mass = 0.0;
  for (double x : clipped) {
    weights.push_back(std::exp((x - top) / temperature));
    mass += weights.back();
  }
  double running = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    if (u * mass < running) return i;
  }
  return weights.size() - 1;
}

}  // namespace rewrite_again::testing

#endif  // REWRITE_AGAIN_TESTS_TEST_UTIL_H_
