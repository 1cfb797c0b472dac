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
"""Pydantic records exchanged between the pipeline stages and written to disk."""

import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

CLASS_NAMES = ("Benign", "Ransomware")
FINE_TUNING_LEARNING_RATE = 3e-5
SIGN_CONVENTION = (
    "positive weight pushes the prediction toward Ransomware (class 1); "
    "negative weight pushes it toward Benign (class 0)"
)


# --- ingest ---


class ColumnSpec(BaseModel):
    """Name, kind and pipeline role of one CSV column."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    kind: Literal["numeric", "categorical"]
    role: Literal["feature", "label", "source", "ignore"] = "feature"


class ImputationModel(BaseModel):
    """Per-column fill values: medians for numerics, modes for categoricals."""

    numeric_fill: dict[str, float] = Field(default_factory=dict)
    categorical_fill: dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_finite(self):
        for column, value in self.numeric_fill.items():
            if not math.isfinite(value):
                raise ValueError(f"numeric fill for column '{column}' is not finite")
        return self


class SplitIndices(BaseModel):
    """Row indices of the train, validation and test partitions."""

    train: list[int]
    validation: list[int]
    test: list[int]
    seed: int

    @model_validator(mode="after")
    def check_disjoint(self):
        seen = set(self.train)
        for part in (self.validation, self.test):
            if seen.intersection(part):
                raise ValueError("split index sets must be disjoint")
            seen.update(part)
        return self


# --- transforms ---


class PowerTransform(BaseModel):
    """A fitted Box-Cox or Yeo-Johnson transform for one column."""

    model_config = ConfigDict(populate_by_name=True, serialize_by_alias=True)

    column: str
    method: Literal["box_cox", "yeo_johnson"]
    lmbda: float = Field(alias="lambda", ge=-5.0, le=5.0)


class MinMaxScaler(BaseModel):
    """Affine map of a column onto [0, 1] fitted on training values."""

    column: str
    min: float
    max: float

    @model_validator(mode="after")
    def check_range(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError(f"scaler bounds for '{self.column}' must be finite")
        if self.min > self.max:
            raise ValueError(f"scaler min exceeds max for '{self.column}'")
        return self


class TransformRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True, serialize_by_alias=True)

    column: str
    skew_before: float
    method: Literal["box_cox", "yeo_johnson"]
    lmbda: float = Field(alias="lambda")
    skew_after: float
    # Set when the transform did not reduce |skew|.
    flagged: bool = False


class TransformReport(BaseModel):
    records: list[TransformRecord] = Field(default_factory=list)


# --- nttp ---


class ColumnBins(BaseModel):
    edges: list[float]
    n_bins_effective: int = Field(ge=1)

    @model_validator(mode="after")
    def check_edges(self):
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if self.n_bins_effective != len(self.edges) + 1:
            raise ValueError("n_bins_effective must equal len(edges) + 1")
        return self


class BinningModel(BaseModel):
    """Deduplicated quantile edges per numeric column, in sentence order."""

    n_bins_requested: int = Field(default=5, ge=1)
    column_order: list[str]
    columns: dict[str, ColumnBins]
    categorical_columns: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_columns(self):
        if set(self.column_order) != set(self.columns):
            raise ValueError("column_order must list exactly the fitted columns")
        for name, bins in self.columns.items():
            if bins.n_bins_effective > self.n_bins_requested:
                raise ValueError(f"column '{name}' has more bins than requested")
        return self


# --- model ---


class ModelConfig(BaseModel):
    """Shape and attention mode of the encoder classifier."""

    d_model: int = Field(default=32, ge=1)
    n_heads: int = Field(default=4, ge=1)
    n_layers: int = Field(default=2, ge=1)
    d_ffn: int = Field(default=64, ge=1)
    max_len: int = Field(default=128, ge=1)
    attention_mode: Literal["absolute", "disentangled"] = "absolute"
    relative_window: int = Field(default=8, ge=1)
    dropout_rate: float = Field(default=0.0, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def check_heads(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        return self


class TrainConfig(BaseModel):
    """Optimizer, schedule and loop settings.

    The default learning rate suits a randomly initialised desk-scale model;
    ``FINE_TUNING_LEARNING_RATE`` is the fine-tuning rate used for pretrained
    checkpoints and stays selectable.
    """

    learning_rate: float = Field(default=3e-4, ge=0.0)
    batch_size: int = Field(default=8, ge=1)
    epochs: int = Field(default=1, ge=1)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)
    seed: int = 0


class TrainStepRecord(BaseModel):
    """One optimizer step, as exported to record sinks."""

    kind: Literal["train_step"] = "train_step"
    epoch: int
    step: int
    loss: float
    learning_rate: float


class EpochRecord(BaseModel):
    kind: Literal["epoch"] = "epoch"
    epoch: int
    mean_loss: float
    val_accuracy: float
    val_f1: float


class TrainHistory(BaseModel):
    step_losses: list[float] = Field(default_factory=list)
    val_accuracy: list[float] = Field(default_factory=list)
    val_f1: list[float] = Field(default_factory=list)
    steps_per_epoch: int = 0
    epochs: int = 0

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.step_losses) != self.steps_per_epoch * self.epochs:
            raise ValueError("step_losses length must equal steps_per_epoch * epochs")
        if not (len(self.val_accuracy) == len(self.val_f1) == self.epochs):
            raise ValueError("validation metrics must have one entry per epoch")
        return self


class EmbeddingStats(BaseModel):
    """Anisotropy summary of the token embedding matrix."""

    n_tokens: int
    mean_pairwise_cosine: float = Field(ge=-1.0, le=1.0)
    per_dimension_variance: list[float]
    top_singular_share: float = Field(gt=0.0, le=1.0)


# --- explain ---


class TokenWeight(BaseModel):
    token: str
    weight: float


class Explanation(BaseModel):
    """Signed per-position token weights for one prediction."""

    method: Literal["lime", "occlusion"]
    text: str
    tokens: list[TokenWeight]
    predicted_class: Literal[0, 1]
    class_probs: tuple[float, float]
    local_fidelity_r2: Optional[float] = None
    n_samples: Optional[int] = None
    seed: Optional[int] = None
    sign_convention: str = SIGN_CONVENTION
    flags: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.tokens) != len(self.text.split()):
            raise ValueError("an explanation needs one weight per token position")
        if abs(sum(self.class_probs) - 1.0) > 1e-9:
            raise ValueError("class_probs must sum to 1")
        return self


class ClassImportance(BaseModel):
    label: Literal[0, 1]
    class_name: str
    n_explanations: int
    avg_abs_importance: float
    top_features: list[TokenWeight]

    @model_validator(mode="after")
    def check_ranking(self):
        magnitudes = [abs(t.weight) for t in self.top_features]
        if any(b > a for a, b in zip(magnitudes, magnitudes[1:])):
            raise ValueError("top_features must be sorted by |weight| descending")
        return self


class ImportanceSummary(BaseModel):
    method: Literal["lime", "occlusion"]
    sign_convention: str = SIGN_CONVENTION
    classes: list[ClassImportance]


# --- eval ---


class ConfusionMatrix(BaseModel):
    """Binary confusion counts with Ransomware (1) as the positive class."""

    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    tn: int = Field(ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class Metrics(BaseModel):
    accuracy: float = Field(ge=0.0, le=1.0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    flags: list[str] = Field(default_factory=list)


class RocCurve(BaseModel):
    points: list[tuple[float, float]]
    auc: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_curve(self):
        if not self.points or self.points[0] != (0.0, 0.0):
            raise ValueError("ROC curve must start at (0, 0)")
        if self.points[-1] != (1.0, 1.0):
            raise ValueError("ROC curve must end at (1, 1)")
        for (f0, t0), (f1, t1) in zip(self.points, self.points[1:]):
            if f1 < f0 or t1 < t0:
                raise ValueError("ROC curve must be non-decreasing")
        return self


class EvalReport(BaseModel):
    confusion: ConfusionMatrix
    metrics: Metrics
    roc: Optional[list[tuple[float, float]]] = None
    auc: Optional[float] = None
    flags: list[str] = Field(default_factory=list)


# --- cli ---


# Dotted paths of manifest fields that differ between otherwise identical runs.
VOLATILE_MANIFEST_FIELDS = ("config.out", "timing_seconds")


class ArtifactEntry(BaseModel):
    path: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    """Snapshot of what produced a run directory and what it contains.

    Two runs with the same config and seed give equal manifests except for
    the fields named in ``volatile_fields``.
    """

    tool_version: str
    command: str
    config: dict
    seeds: dict[str, int]
    artifacts: list[ArtifactEntry]
    timing_seconds: dict[str, float] = Field(default_factory=dict)
    volatile_fields: list[str] = Field(default_factory=lambda: list(VOLATILE_MANIFEST_FIELDS))
