# Copyright 2026 The ransomtrace Authors
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
#
"""Run configuration: a flat dotenv-style key/value file plus flag overrides.

Keys are the lower-case field names of `RunConfig`. List values are comma
separated; ``inputs`` entries are ``path:source`` pairs, and an entry without
``:source`` is tagged with the file stem.
"""

import logging
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, model_validator

from .data_model import ModelConfig, TrainConfig
from .errors import ConfigError
from .ingest import LABEL_CANDIDATES

_logger = logging.getLogger(__name__)

_LIST_KEYS = ("inputs", "split_fractions", "label_candidates")


class InputSpec(BaseModel):
    path: Path
    source: Optional[str] = None

    @classmethod
    def parse(cls, entry: str) -> "InputSpec":
        path, sep, source = entry.strip().rpartition(":")
        if not sep:
            return cls(path=Path(source))
        return cls(path=Path(path), source=source or None)


class RunConfig(BaseModel):
    """Every setting of a pipeline run; a single ``seed`` drives all randomness."""

    inputs: list[InputSpec] = Field(default_factory=list)
    sample_n: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    label_candidates: list[str] = Field(default_factory=lambda: list(LABEL_CANDIDATES))

    n_bins: int = Field(default=5, ge=1)
    include_categoricals: bool = False
    pre_binning_transforms: bool = False

    d_model: int = 32
    n_heads: int = 4
    n_layers: int = 2
    d_ffn: int = 64
    max_len: int = 128
    attention_mode: Literal["absolute", "disentangled"] = "absolute"
    relative_window: int = 8
    dropout_rate: float = 0.0

    learning_rate: float = 3e-4
    batch_size: int = 8
    epochs: int = 1

    explain_method: Literal["lime", "occlusion", "both"] = "both"
    explain_n_samples: int = Field(default=1000, ge=2)
    kernel_width: float = Field(default=25.0, gt=0.0)
    explain_size: int = Field(default=10, ge=0)
    attention_samples: int = Field(default=2, ge=0)
    workers: int = Field(default=1, ge=1)

    out: Path = Path("runs/desk")

    @model_validator(mode="after")
    def check_fractions(self):
        if any(f < 0 for f in self.split_fractions):
            raise ValueError("split fractions must be non-negative")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(self.split_fractions)}")
        return self

    def to_model_config(self) -> ModelConfig:
        return ModelConfig(
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers=self.n_layers,
            d_ffn=self.d_ffn,
            max_len=self.max_len,
            attention_mode=self.attention_mode,
            relative_window=self.relative_window,
            dropout_rate=self.dropout_rate,
            seed=self.seed,
        )

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
        )

    def explain_methods(self) -> list[str]:
        return ["lime", "occlusion"] if self.explain_method == "both" else [self.explain_method]

    def check_inputs(self) -> None:
        """Raises ConfigError unless at least one input exists and all of them do."""
        if not self.inputs:
            raise ConfigError("no inputs configured")
        missing = [str(i.path) for i in self.inputs if not i.path.is_file()]
        if missing:
            raise ConfigError(f"input files not found: {', '.join(missing)}")


def _split_list(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def parse_values(values: Mapping[str, Optional[str]]) -> dict[str, Any]:
    """Turns raw key/value strings into `RunConfig` field values."""
    parsed: dict[str, Any] = {}
    for key, value in values.items():
        key = key.strip().lower()
        if value is None or value.strip() == "":
            continue
        if key not in RunConfig.model_fields:
            raise ConfigError(f"unknown config key '{key}'")
        if key == "inputs":
            parsed[key] = [InputSpec.parse(e) for e in _split_list(value)]
        elif key in _LIST_KEYS:
            parsed[key] = _split_list(value)
        else:
            parsed[key] = value.strip()
    return parsed


def load_config(
    path: Optional[Path | str] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """Reads the key/value file, applies non-None overrides and validates.

    Raises:
        ConfigError: Missing file, unknown key or invalid value.
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values = parse_values(dotenv_values(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        config = RunConfig.model_validate(values)
        config.to_model_config()
        config.to_train_config()
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    _logger.debug("run config: %s", config.model_dump_json())
    return config
