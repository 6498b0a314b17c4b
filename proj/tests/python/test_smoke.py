# Copyright 2026 The Rewrite Again Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the Python bindings."""

import json
import math
import pathlib

import pytest

import rewrite_again as ra

ROOT = pathlib.Path(__file__).resolve().parents[2]


def records(n):
    words = ["good", "bad", "food", "slow", "staff", "wine", "beer"]
    return [{"id": "r%d" % i, "text": " ".join(words[(i + k) % 7] for k in range(4)),
             "attributes": {"label": "x" if i % 3 else "y"}} for i in range(n)]


def test_epsilon_calibration():
    assert ra.epsilon_from_temperature(-95, 8, 1.0) == 206.0
    assert round(ra.epsilon_from_temperature(-95, 8, 1.5)) == 137
    assert ra.temperature_from_epsilon(-95, 8, 206.0) == 1.0


def test_errors_carry_codes():
    with pytest.raises(ra.Error) as info:
        ra.epsilon_from_temperature(0, 1, 0.0)
    assert info.value.code == "invalid_argument"
    assert ra.exit_code(info.value) == 2


def test_sampling_and_noise_are_seeded():
    assert ra.sample_token([0.0, 1.0, 2.0], -1, 1, 1.0, seed=3) == \
        ra.sample_token([0.0, 1.0, 2.0], -1, 1, 1.0, seed=3)
    noise = ra.laplace_noise(1.0, 20000, seed=1)
    assert abs(sum(noise) / len(noise)) < 0.05
    assert ra.latent_sensitivity(0.1, 10) == pytest.approx(2.0)


def test_softmax_closed_form():
    probs = ra.temperature_softmax([0.0, math.log(2.0)], 1.0)
    assert probs == pytest.approx([1 / 3, 2 / 3])


def test_f1_and_majority():
    assert ra.f1_score(["A", "B", "B", "B"], ["A", "A", "B", "B"], "macro") == \
        pytest.approx(0.7333333333333333)
    assert ra.majority_baseline(["a", "b", "a", "b"], "macro") == pytest.approx(1 / 3)
    assert ra.cosine([1.0, 0.0], [-1.0, 0.0]) == -1.0


def test_split_follows_floor_rule():
    train, validation = ra.split_dataset(records(25), 0.9, 42)
    assert len(train) == 22 and len(validation) == 3
    assert {r["id"] for r in train}.isdisjoint(r["id"] for r in validation)
    assert ra.split_dataset(records(25), 0.9, 42)[0] == train


def test_rewrite_both_mechanisms():
    options = {"vocab": ["good", "bad", "food", "slow", "staff", "wine", "beer"]}
    prompt = {"name": "dp-prompt", "clip": [-1, 1], "temperature": 1.0,
              "prompt_template": "{text}", "max_new_tokens": 8}
    result = ra.rewrite("good food", prompt, "toy", options, seed=5)
    assert result["granularity"] == "word_level"
    assert result["naive_composed_epsilon"] == result["epsilon_per_unit"] * result["tokens_generated"]
    assert ra.rewrite("good food", prompt, "toy", options, seed=5) == result

    bart = {"name": "dp-bart-clv", "epsilon": 625}
    pairs = ra.rewrite_corpus(records(10), bart, "toy", options, seed=1)
    assert [p["id"] for p in pairs] == sorted(r["id"] for r in records(10))
    assert all(p["epsilon"] == 625 and p["granularity"] == "document_level" for p in pairs)


def test_pipeline_run(tmp_path):
    config = json.loads((ROOT / "configs" / "toy_basic.json").read_text())
    config.pop("run_dir")
    config["dataset"]["path"] = str(ROOT / "data" / "toy" / "private.jsonl")
    config["public_corpus"]["path"] = str(ROOT / "data" / "toy" / "public.jsonl")
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    table, log = ra.run("pipeline", config=path, run_dir=tmp_path / "run")
    assert "Basic 2x" in table
    assert "[report] completed" in log
    with pytest.raises(ra.Error) as info:
        ra.run("rewrite", config=path, run_dir=tmp_path / "run", seed=77)
    assert info.value.code == "config"
