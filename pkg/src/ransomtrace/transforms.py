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
"""Skewness measurement, power transforms and Min-Max scaling.

Power transforms pick Box-Cox for strictly positive columns and Yeo-Johnson
otherwise; lambda maximises the profile log-likelihood of the chosen family
on [-5, 5]. Everything here is a pure function of its inputs.
"""

import logging
from collections.abc import Mapping

import numpy as np
import pandas as pd
from scipy import optimize, special, stats

from .data_model import MinMaxScaler, PowerTransform, TransformRecord, TransformReport
from .errors import DomainError, FitError, UndefinedSkewError
from .ingest import Dataset

_logger = logging.getLogger(__name__)

LAMBDA_BOUNDS = (-5.0, 5.0)
LAMBDA_TOL = 1e-6
DISTRIBUTION_QUANTILES = (0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0)


def _as_finite(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if not np.isfinite(arr).all():
        raise FitError(f"{what}: input contains non-finite values")
    return arr


def skewness(values) -> float:
    """Fisher-Pearson moment coefficient g1 = m3 / m2**1.5 (moments over n).

    Raises:
        UndefinedSkewError: Fewer than three values or zero variance.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size < 3:
        raise UndefinedSkewError(f"skewness needs at least 3 values, got {arr.size}")
    if not np.isfinite(arr).all():
        raise UndefinedSkewError("skewness input contains non-finite values")
    if np.var(arr) == 0.0:
        raise UndefinedSkewError("skewness is undefined for zero-variance data")
    g1 = float(stats.skew(arr, bias=True))
    if not np.isfinite(g1):
        raise UndefinedSkewError("skewness is undefined for (numerically) constant data")
    return g1


def log_likelihood(method: str, lmbda: float, values: np.ndarray) -> float:
    """Profile log-likelihood of the Box-Cox or Yeo-Johnson family."""
    if method == "box_cox":
        return float(stats.boxcox_llf(lmbda, values))
    return float(stats.yeojohnson_llf(lmbda, values))


def fit_power_transform(values, column: str = "") -> PowerTransform:
    """Fits the power transform that makes ``values`` most nearly normal.

    Args:
        values: At least three finite values with non-zero variance.
        column: Column name recorded on the result.

    Returns:
        A `PowerTransform`; Box-Cox when every value is positive.

    Raises:
        FitError: Non-finite input, fewer than 3 values or zero variance.
    """
    arr = _as_finite(values, f"column '{column}'")
    if arr.size < 3 or np.var(arr) == 0.0:
        raise FitError(f"column '{column}' needs >= 3 values with non-zero variance")
    method = "box_cox" if arr.min() > 0 else "yeo_johnson"

    def neg_llf(lmbda: float) -> float:
        llf = log_likelihood(method, lmbda, arr)
        return -llf if np.isfinite(llf) else np.inf

    # Bounded Brent: golden-section steps with parabolic interpolation.
    result = optimize.minimize_scalar(
        neg_llf,
        bounds=LAMBDA_BOUNDS,
        method="bounded",
        options={"xatol": LAMBDA_TOL},
    )
    lmbda = float(np.clip(result.x, *LAMBDA_BOUNDS))
    return PowerTransform(column=column, method=method, lmbda=lmbda)


def apply_power_transform(t: PowerTransform, values) -> np.ndarray:
    """Applies a fitted power transform; monotonically increasing in x.

    Raises:
        DomainError: Box-Cox applied to a non-positive value.
    """
    arr = np.asarray(values, dtype=np.float64)
    if t.method == "box_cox":
        if (arr <= 0).any():
            raise DomainError(f"Box-Cox for column '{t.column}' needs positive values")
        return special.boxcox(arr, t.lmbda)
    return np.asarray(stats.yeojohnson(arr, lmbda=t.lmbda), dtype=np.float64)


def fit_minmax(values, column: str = "") -> MinMaxScaler:
    arr = _as_finite(values, f"column '{column}'")
    if arr.size == 0:
        raise FitError(f"column '{column}' has no values to scale")
    return MinMaxScaler(column=column, min=float(arr.min()), max=float(arr.max()))


def apply_minmax(scaler: MinMaxScaler, values) -> np.ndarray:
    """Maps onto [0, 1] with the fitted bounds; out-of-range values are not clipped.

    A constant training column maps every value to 0.0.
    """
    arr = np.asarray(values, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise DomainError(f"column '{scaler.column}': cannot scale non-finite values")
    span = scaler.max - scaler.min
    if span == 0.0:
        return np.zeros_like(arr)
    return (arr - scaler.min) / span


def fit_transforms(dataset: Dataset) -> dict[str, PowerTransform]:
    """Fits a power transform for every transformable numeric feature column."""
    fitted = {}
    for name in dataset.numeric_features():
        values = dataset.frame[name].to_numpy(dtype=np.float64)
        if values.size < 3 or np.var(values) == 0.0:
            _logger.info("column '%s' is constant; no power transform fitted", name)
            continue
        fitted[name] = fit_power_transform(values, column=name)
    return fitted


def transform_report(
    dataset: Dataset, transforms: Mapping[str, PowerTransform] | None = None
) -> TransformReport:
    """Skewness before and after the fitted transform, per numeric column.

    Columns whose |skew| does not decrease are flagged.
    """
    if transforms is None:
        transforms = fit_transforms(dataset)
    records = []
    for name, t in transforms.items():
        values = dataset.frame[name].to_numpy(dtype=np.float64)
        before = skewness(values)
        after_values = apply_power_transform(t, values)
        try:
            after = skewness(after_values)
        except UndefinedSkewError:
            after = before
        record = TransformRecord(
            column=name,
            skew_before=before,
            method=t.method,
            lmbda=t.lmbda,
            skew_after=after,
            flagged=abs(after) > abs(before),
        )
        _logger.info(record.model_dump_json())
        records.append(record)
    return TransformReport(records=records)


def fit_scalers(
    dataset: Dataset, transforms: Mapping[str, PowerTransform]
) -> dict[str, MinMaxScaler]:
    scalers = {}
    for name in dataset.numeric_features():
        values = dataset.frame[name].to_numpy(dtype=np.float64)
        if name in transforms:
            values = apply_power_transform(transforms[name], values)
        scalers[name] = fit_minmax(values, column=name)
    return scalers


def apply_transforms(
    dataset: Dataset,
    transforms: Mapping[str, PowerTransform],
    scalers: Mapping[str, MinMaxScaler],
) -> Dataset:
    """Power-transforms then Min-Max scales the numeric feature columns."""
    frame = dataset.frame.copy()
    for name in dataset.numeric_features():
        values = frame[name].to_numpy(dtype=np.float64)
        if name in transforms:
            values = apply_power_transform(transforms[name], values)
        if name in scalers:
            values = apply_minmax(scalers[name], values)
        frame[name] = values
    return dataset.replace(frame=frame)


# --- plot data ---


def transform_histograms(
    dataset: Dataset, transforms: Mapping[str, PowerTransform], bins: int = 20
) -> pd.DataFrame:
    """Equal-width histogram counts before and after each transform."""
    rows = []
    for name, t in transforms.items():
        raw = dataset.frame[name].to_numpy(dtype=np.float64)
        for stage, values in (("before", raw), ("after", apply_power_transform(t, raw))):
            counts, edges = np.histogram(values, bins=bins)
            for k, count in enumerate(counts):
                rows.append(
                    {
                        "column": name,
                        "stage": stage,
                        "bin_left": float(edges[k]),
                        "bin_right": float(edges[k + 1]),
                        "count": int(count),
                    }
                )
    return pd.DataFrame(rows, columns=["column", "stage", "bin_left", "bin_right", "count"])


def correlation_matrix(dataset: Dataset) -> pd.DataFrame:
    """Pearson correlation of the numeric features (constant columns give NaN)."""
    names = dataset.numeric_features()
    corr = dataset.frame[names].corr(method="pearson")
    corr.index.name = "column"
    return corr


def distribution_quantiles(dataset: Dataset) -> pd.DataFrame:
    rows = []
    for name in dataset.numeric_features():
        q = np.quantile(dataset.frame[name].to_numpy(dtype=np.float64), DISTRIBUTION_QUANTILES)
        rows.append({"column": name, **{f"q{p:g}": float(v) for p, v in zip(DISTRIBUTION_QUANTILES, q)}})
    return pd.DataFrame(rows)
