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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "json.hpp"
#include "rewrite_again/backends.h"
#include "rewrite_again/corpus.h"
#include "rewrite_again/dp_core.h"
#include "rewrite_again/errors.h"
#include "rewrite_again/evaluation.h"
#include "rewrite_again/mechanisms.h"
#include "rewrite_again/pipeline.h"
#include "rewrite_again/realign.h"

namespace py = pybind11;
using nlohmann::json;

namespace rewrite_again {
namespace {

std::vector<TextRecord> RecordsFromJson(const std::string& text) {
  std::vector<TextRecord> records;
  for (const auto& j : json::parse(text)) records.push_back(TextRecordFromJson(j));
  ValidateRecords(records);
  return records;
}

std::string RecordsToJson(std::span<const TextRecord> records) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : records) out.push_back(TextRecordToJson(r));
  return out.dump();
}

std::string RewriteResultToJson(const RewriteResult& r) {
  nlohmann::ordered_json j;
  j["text"] = r.text;
  j["epsilon_per_unit"] = r.epsilon_per_unit;
  j["granularity"] = GranularityName(r.granularity);
  j["tokens_generated"] = r.tokens_generated;
  j["naive_composed_epsilon"] =
      r.naive_composed_epsilon ? json(*r.naive_composed_epsilon) : json(nullptr);
  return j.dump();
}

constexpr std::pair<ErrorCode, const char*> kCodeSlugs[] = {
    {ErrorCode::kInvalidArgument, "invalid_argument"},
    {ErrorCode::kConfig, "config"},
    {ErrorCode::kLoad, "load"},
    {ErrorCode::kValidation, "validation"},
    {ErrorCode::kValidationLeak, "validation_leak"},
    {ErrorCode::kCapability, "capability"},
    {ErrorCode::kBackend, "backend"},
    {ErrorCode::kMissingArtifact, "missing_artifact"},
    {ErrorCode::kStageFailure, "stage_failure"},
};

std::string CodeSlug(ErrorCode code) {
  for (const auto& [c, slug] : kCodeSlugs) {
    if (c == code) return slug;
  }
  return "unknown";
}

std::shared_ptr<const InferenceBackend> Backend(const std::string& spec,
                                                const std::string& options) {
  return LoadBackend(spec, json::parse(options));
}

}  // namespace
}  // namespace rewrite_again

PYBIND11_MODULE(_core, m) {
  using namespace rewrite_again;
  m.doc() = "Native core of the rewrite_again package.";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      instance.attr("code") = CodeSlug(e.code());
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("error_exit_code", [](const std::string& code) {
    for (const auto& [c, slug] : kCodeSlugs) {
      if (code == slug) return ExitCodeFor(c);
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown error code " + code);
  });

  m.def("epsilon_from_temperature",
        [](double low, double high, double t) {
          return EpsilonFromTemperature(ClipRange(low, high), t).epsilon();
        },
        py::arg("low"), py::arg("high"), py::arg("temperature"));
  m.def("temperature_from_epsilon",
        [](double low, double high, double eps) {
          return TemperatureFromEpsilon(ClipRange(low, high), eps);
        },
        py::arg("low"), py::arg("high"), py::arg("epsilon"));
  m.def("clip_values",
        [](const std::vector<double>& v, double low, double high) {
          return ClipValues(v, ClipRange(low, high));
        });
  m.def("temperature_softmax", [](const std::vector<double>& logits, double t) {
    return TemperatureSoftmax(logits, t);
  });
  m.def("sample_token",
        [](const std::vector<double>& logits, double low, double high, double t,
           uint64_t seed, uint64_t stream) {
          RandomSource rng(seed, stream);
          return SampleToken(LogitVector(logits), ClipRange(low, high), t, rng);
        },
        py::arg("logits"), py::arg("low"), py::arg("high"), py::arg("temperature"),
        py::arg("seed"), py::arg("stream") = 0);
  m.def("latent_sensitivity", &LatentSensitivity, py::arg("clip_value"), py::arg("dims"));
  m.def("laplace_noise",
        [](double scale, size_t dims, uint64_t seed, uint64_t stream) {
          RandomSource rng(seed, stream);
          return LaplaceNoise(scale, dims, rng);
        },
        py::arg("scale"), py::arg("dims"), py::arg("seed"), py::arg("stream") = 0);

  m.def("f1_score",
        [](const std::vector<std::string>& preds, const std::vector<std::string>& golds,
           const std::string& averaging) {
          return F1Score(preds, golds, ParseAveraging(averaging));
        },
        py::arg("preds"), py::arg("golds"), py::arg("averaging") = "weighted");
  m.def("majority_baseline",
        [](const std::vector<std::string>& golds, const std::string& averaging) {
          return MajorityBaseline(golds, ParseAveraging(averaging));
        },
        py::arg("golds"), py::arg("averaging") = "weighted");
  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) {
    return Cosine(a, b);
  });

  m.def("split_dataset_json",
        [](const std::string& records, double ratio, uint64_t seed) {
          const auto split = SplitDataset(RecordsFromJson(records), ratio, seed);
          return std::make_pair(RecordsToJson(split.train), RecordsToJson(split.validation));
        });
  m.def("sample_public_corpus_json",
        [](const std::string& records, size_t n, uint64_t seed) {
          return RecordsToJson(SamplePublicCorpus(RecordsFromJson(records), n, seed));
        });

  m.def("rewrite_json",
        [](const std::string& text, const std::string& mechanism, const std::string& spec,
           const std::string& options, uint64_t seed, uint64_t stream) {
          auto mech = MakeMechanism(json::parse(mechanism), Backend(spec, options));
          RandomSource rng(seed, stream);
          py::gil_scoped_release release;
          return RewriteResultToJson(mech->Rewrite(text, rng));
        });
  m.def("rewrite_corpus_json",
        [](const std::string& records, const std::string& mechanism, const std::string& spec,
           const std::string& options, uint64_t seed) {
          auto mech = MakeMechanism(json::parse(mechanism), Backend(spec, options));
          const auto parsed = RecordsFromJson(records);
          py::gil_scoped_release release;
          const CorpusRewrite out = RewriteCorpus(parsed, *mech, seed);
          nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
          for (const auto& p : out.pairs) pairs.push_back(AlignedPairToJson(p));
          return pairs.dump();
        });

  m.def("run_stage",
        [](const std::string& subcommand, std::optional<std::string> config_path,
           std::optional<std::string> run_dir, std::optional<std::string> track,
           std::optional<uint64_t> seed, std::optional<std::string> stage, bool force) {
          CliOptions options;
          if (config_path) options.config_path = *config_path;
          if (run_dir) options.run_dir = *run_dir;
          options.track = track;
          options.seed = seed;
          options.stage = stage;
          options.force = force;
          std::ostringstream log;
          py::gil_scoped_release release;
          auto pipeline = Pipeline::Open(options, log);
          pipeline.Run(subcommand);
          return std::make_pair(pipeline.last_report(), log.str());
        },
        py::arg("subcommand"), py::arg("config_path") = py::none(),
        py::arg("run_dir") = py::none(), py::arg("track") = py::none(),
        py::arg("seed") = py::none(), py::arg("stage") = py::none(),
        py::arg("force") = false);
}
