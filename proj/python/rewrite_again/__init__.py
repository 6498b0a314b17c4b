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

"""Python interface to the rewrite_again core.

Thin wrappers over the native extension: records, mechanism configs and
results travel as plain dicts.
"""

import json as _json

from . import _core
from ._core import (
    Error,
    clip_values,
    cosine,
    epsilon_from_temperature,
    f1_score,
    laplace_noise,
    latent_sensitivity,
    majority_baseline,
    sample_token,
    temperature_from_epsilon,
    temperature_softmax,
)

__all__ = [
    "Error",
    "clip_values",
    "cosine",
    "epsilon_from_temperature",
    "exit_code",
    "f1_score",
    "laplace_noise",
    "latent_sensitivity",
    "majority_baseline",
    "rewrite",
    "rewrite_corpus",
    "run",
    "sample_public_corpus",
    "sample_token",
    "split_dataset",
    "temperature_from_epsilon",
    "temperature_softmax",
]

__version__ = "0.1.0"


def exit_code(error):
    """CLI exit status for an Error raised by this package."""
    return _core.error_exit_code(error.code)


def split_dataset(records, ratio=0.9, seed=42):
    """Shuffles records with `seed` and returns (train, validation)."""
    train, validation = _core.split_dataset_json(_json.dumps(list(records)), ratio, seed)
    return _json.loads(train), _json.loads(validation)


def sample_public_corpus(records, n, seed):
    return _json.loads(_core.sample_public_corpus_json(_json.dumps(list(records)), n, seed))


def rewrite(text, mechanism, backend="toy", backend_options=None, seed=0, stream=0):
    """Privatizes one text. `mechanism` is a mechanism config dict."""
    result = _core.rewrite_json(text, _json.dumps(mechanism), backend,
                                _json.dumps(backend_options or {}), seed, stream)
    return _json.loads(result)


def rewrite_corpus(records, mechanism, backend="toy", backend_options=None, seed=0):
    """Privatizes a corpus; returns aligned pairs in canonical id order."""
    pairs = _core.rewrite_corpus_json(_json.dumps(list(records)), _json.dumps(mechanism),
                                      backend, _json.dumps(backend_options or {}), seed)
    return _json.loads(pairs)


def run(subcommand, config=None, run_dir=None, track=None, seed=None, stage=None,
        force=False):
    """Runs a pipeline subcommand. Returns (report_table, log_text)."""
    return _core.run_stage(subcommand, None if config is None else str(config),
                           None if run_dir is None else str(run_dir), track, seed, stage,
                           force)
