# Copyright 2026 The slcgan Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Conditional GAN training on pseudo-labels from a jointly trained clustering network.

Thin Python layer over the C++ core. Configs are passed as text in the
``section.key = value`` format used by the command-line tool.
"""

from pathlib import Path as _Path

from ._slcgan import (
    CheckpointError,
    ConfigError,
    IngestionError,
    MetricError,
    NumericError,
    cluster_probabilities,
    clustering_accuracy,
    evaluate,
    frechet_distance,
    generate,
    inception_style_score,
    kmeans,
    mode_coverage,
    purity,
    resample,
    resolve_config,
    ring_config,
    sample,
)
from ._slcgan import train as _train

__all__ = [
    "CheckpointError",
    "ConfigError",
    "IngestionError",
    "MetricError",
    "NumericError",
    "cluster_probabilities",
    "clustering_accuracy",
    "evaluate",
    "frechet_distance",
    "generate",
    "inception_style_score",
    "kmeans",
    "load_config",
    "mode_coverage",
    "purity",
    "resample",
    "resolve_config",
    "ring_config",
    "sample",
    "train",
    "with_overrides",
]


def load_config(path):
    """Reads a config file and returns its resolved text."""
    return resolve_config(_Path(path).read_text())


def with_overrides(config, **overrides):
    """Returns config text with the given keys set.

    Keyword names use a double underscore for the dot, e.g.
    ``train__iterations=50``. Existing lines for a key are replaced.
    """
    wanted = {}
    for key, value in overrides.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        wanted[key.replace("__", ".")] = str(value)
    lines = []
    for line in config.splitlines():
        key = line.split("=", 1)[0].strip()
        if "=" in line and not line.lstrip().startswith("#") and key in wanted:
            lines.append(f"{key} = {wanted.pop(key)}")
        else:
            lines.append(line)
    lines.extend(f"{key} = {value}" for key, value in wanted.items())
    return "\n".join(lines) + "\n"


def train(config, resume=None):
    """Trains from config text and returns the run directory as a Path."""
    return _Path(_train(config, None if resume is None else str(resume)))
