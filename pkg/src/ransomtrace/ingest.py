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
"""Loading, label unification, imputation and splitting of telemetry CSVs.

A :class:`Dataset` holds feature columns in a ``pandas.DataFrame`` (numeric
columns as ``float64`` with ``NaN`` as the missing marker, categorical
columns as ``object`` with ``None``), the canonical 0/1 label array and a
per-row source tag. Every operation returns a new dataset.
"""

import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from .data_model import CLASS_NAMES, ColumnSpec, ImputationModel, SplitIndices
from .errors import FitError, SchemaError, SplitError

_logger = logging.getLogger(__name__)

MISSING_MARKERS = frozenset({"", "nan", "null"})
LABEL_CANDIDATES = ("label", "prediction")
SOURCE_COLUMN = "source"
_LABEL_MAP = {"benign": 0, "ransomware": 1}


class Dataset(BaseModel):
    """Named feature columns with missingness, canonical labels and source tags.

    ``labels`` is ``None`` only for a raw dataset that has not been through
    :func:`unify_labels`; such a dataset carries no ``label`` column spec.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    columns: list[ColumnSpec]
    frame: pd.DataFrame
    labels: Optional[np.ndarray] = None
    source: np.ndarray

    @model_validator(mode="after")
    def check_consistency(self):
        names = [c.name for c in self.columns]
        if len(names) != len(set(names)):
            raise ValueError("column names must be unique")
        n_label = sum(c.role == "label" for c in self.columns)
        if self.labels is None:
            if n_label:
                raise ValueError("a label column spec requires a label array")
        else:
            if n_label != 1:
                raise ValueError("exactly one column must have role=label")
            if len(self.labels) != len(self.frame):
                raise ValueError("labels must have one entry per row")
            if not np.isin(self.labels, (0, 1)).all():
                raise ValueError("labels must be 0 (Benign) or 1 (Ransomware)")
        if len(self.source) != len(self.frame):
            raise ValueError("source must have one entry per row")
        missing = [
            c.name
            for c in self.columns
            if c.role in ("feature", "ignore") and c.name not in self.frame.columns
        ]
        if missing:
            raise ValueError(f"columns without data: {missing}")
        return self

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def label_column(self) -> Optional[ColumnSpec]:
        return next((c for c in self.columns if c.role == "label"), None)

    def feature_columns(self, kind: Optional[str] = None) -> list[ColumnSpec]:
        return [
            c
            for c in self.columns
            if c.role == "feature" and (kind is None or c.kind == kind)
        ]

    def numeric_features(self) -> list[str]:
        return [c.name for c in self.feature_columns("numeric")]

    def categorical_features(self) -> list[str]:
        return [c.name for c in self.feature_columns("categorical")]

    def replace(self, **changes) -> "Dataset":
        return type(self)(**{**dict(self), **changes})

    def take(self, indices: Sequence[int]) -> "Dataset":
        """Returns the rows at ``indices``, renumbered from zero."""
        idx = np.asarray(indices, dtype=np.int64)
        return self.replace(
            frame=self.frame.iloc[idx].reset_index(drop=True),
            labels=None if self.labels is None else self.labels[idx],
            source=self.source[idx],
        )


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in MISSING_MARKERS


def _parses_as_real(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _infer_kind(cells: pd.Series) -> str:
    present = [c for c in cells if not _is_missing(c)]
    return "numeric" if all(_parses_as_real(c) for c in present) else "categorical"


def _convert(cells: pd.Series, kind: str) -> pd.Series:
    if kind == "numeric":
        values = [math.nan if _is_missing(c) else float(c) for c in cells]
        return pd.Series(values, dtype=np.float64, name=cells.name)
    values = [None if _is_missing(c) else c.strip() for c in cells]
    return pd.Series(values, dtype=object, name=cells.name)


def _read_raw(path: Path) -> pd.DataFrame:
    try:
        raw = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            skip_blank_lines=True,
        )
    except FileNotFoundError as exc:
        raise SchemaError(f"cannot read '{path}': file not found") from exc
    except (pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as exc:
        raise SchemaError(f"cannot read '{path}': {exc}") from exc
    # Short rows surface as NaN because empty cells stay "" with keep_default_na off.
    if raw.isna().to_numpy().any():
        bad = int(np.flatnonzero(raw.isna().any(axis=1).to_numpy())[0])
        raise SchemaError(f"ragged row {bad + 2} in '{path}'")
    if len(set(raw.columns)) != len(raw.columns):
        raise SchemaError(f"duplicate column names in '{path}'")
    return raw


def load_csv(
    path: Path | str,
    specs: Optional[Sequence[ColumnSpec]] = None,
    *,
    source: Optional[str] = None,
    candidates: Sequence[str] = LABEL_CANDIDATES,
) -> Dataset:
    """Loads a telemetry CSV and unifies its label column.

    Args:
        path: CSV file with a header row.
        specs: Optional explicit column specs; kinds are inferred when omitted
            (a column is numeric if every non-missing cell parses as a real).
        source: Source tag for every row when the file has no ``source``
            column; defaults to the file stem.
        candidates: Label column names in order of precedence.

    Returns:
        A labelled `Dataset` with row order preserved.

    Raises:
        SchemaError: Unreadable file, ragged rows or no usable label column.
    """
    path = Path(path)
    raw = _read_raw(path)
    given = {s.name: s for s in specs or ()}
    unknown = set(given) - set(raw.columns)
    if unknown:
        raise SchemaError(f"column specs name absent columns: {sorted(unknown)}")
    declared = [s.name for s in given.values() if s.role == "label"]
    candidates = [*declared, *candidates]

    columns: list[ColumnSpec] = []
    data: dict[str, pd.Series] = {}
    tags = np.full(len(raw), source or path.stem, dtype=object)
    for name in raw.columns:
        spec = given.get(name)
        if spec is None:
            role = "source" if name == SOURCE_COLUMN else "feature"
            spec = ColumnSpec(name=name, kind=_infer_kind(raw[name]), role=role)
        if spec.role == "source":
            tags = np.asarray([c.strip() for c in raw[name]], dtype=object)
            columns.append(spec)
            continue
        columns.append(spec.model_copy(update={"role": "feature"}) if spec.role == "label" else spec)
        data[name] = _convert(raw[name], spec.kind)

    dataset = Dataset(
        columns=columns,
        frame=pd.DataFrame(data, index=pd.RangeIndex(len(raw))),
        source=tags,
    )
    dataset = unify_labels(dataset, candidates)
    _logger.info(
        "loaded %s: %d rows, %d numeric and %d categorical features",
        path.name,
        len(dataset),
        len(dataset.numeric_features()),
        len(dataset.categorical_features()),
    )
    return dataset


def _label_key(value) -> str | float:
    return value.strip().lower() if isinstance(value, str) else float(value)


def _map_label(value) -> int:
    if isinstance(value, str):
        key = value.strip().lower()
        if key in _LABEL_MAP:
            return _LABEL_MAP[key]
        raise SchemaError(f"unmapped label value '{value}'")
    if float(value) in (0.0, 1.0):
        return int(value)
    raise SchemaError(f"unmapped label value '{value}'")


def unify_labels(
    dataset: Dataset, candidates: Sequence[str] = LABEL_CANDIDATES
) -> Dataset:
    """Promotes the first matching candidate column to the canonical label.

    Names are matched case-insensitively in candidate order. Label strings
    map case-insensitively to Benign=0 and Ransomware=1; the remaining
    candidate columns are set to ``ignore`` so they never reach the features.

    Raises:
        SchemaError: No candidate column, more than two classes, missing
            labels or an unmapped label string.
    """
    if dataset.labels is not None:
        return dataset
    by_lower = {c.name.lower(): c for c in dataset.columns if c.role != "source"}
    chosen = next((by_lower[c.lower()] for c in candidates if c.lower() in by_lower), None)
    if chosen is None:
        raise SchemaError(f"no label column among candidates {list(candidates)}")

    column = dataset.frame[chosen.name]
    if column.isna().any():
        raise SchemaError(
            f"label column '{chosen.name}' has {int(column.isna().sum())} missing values"
        )
    distinct = {_label_key(v) for v in column}
    if len(distinct) > 2:
        raise SchemaError(
            f"label column '{chosen.name}' has {len(distinct)} classes, expected 2"
        )
    if len(distinct) < 2:
        raise SchemaError(f"label column '{chosen.name}' holds a single class")
    labels = np.asarray([_map_label(v) for v in column], dtype=np.int64)
    if len(np.unique(labels)) != 2:
        raise SchemaError(f"label column '{chosen.name}' does not map onto both classes")

    candidate_names = {c.lower() for c in candidates}
    columns = []
    for spec in dataset.columns:
        if spec.name == chosen.name:
            spec = spec.model_copy(update={"role": "label"})
        elif spec.name.lower() in candidate_names and spec.role == "feature":
            spec = spec.model_copy(update={"role": "ignore"})
        columns.append(spec)
    return dataset.replace(
        columns=columns, frame=dataset.frame.drop(columns=[chosen.name]), labels=labels
    )


def write_csv(dataset: Dataset, path: Path | str) -> None:
    """Writes a dataset back to CSV; finite numerics round-trip exactly."""
    out = {}
    for spec in dataset.columns:
        if spec.role == "label":
            out[spec.name] = [CLASS_NAMES[v] for v in dataset.labels]
        elif spec.role == "source":
            out[spec.name] = dataset.source
        else:
            series = dataset.frame[spec.name]
            if spec.kind == "numeric":
                out[spec.name] = ["" if math.isnan(v) else repr(float(v)) for v in series]
            else:
                out[spec.name] = ["" if v is None else v for v in series]
    pd.DataFrame(out).to_csv(path, index=False, lineterminator="\n")


def concat_datasets(datasets: Sequence[Dataset]) -> Dataset:
    """Stacks labelled datasets; a column absent from one source is missing there."""
    if not datasets:
        raise SchemaError("nothing to concatenate")
    columns: dict[str, ColumnSpec] = {}
    for ds in datasets:
        for spec in ds.columns:
            if spec.role in ("label", "source"):
                continue
            known = columns.get(spec.name)
            if known is not None and known.kind != spec.kind:
                raise SchemaError(
                    f"column '{spec.name}' is {known.kind} in one source and {spec.kind} in another"
                )
            if known is None or known.role == "ignore":
                columns[spec.name] = spec
    frames = []
    for ds in datasets:
        frame = ds.frame.copy()
        for name, spec in columns.items():
            if name not in frame.columns:
                frame[name] = np.nan if spec.kind == "numeric" else None
        frames.append(frame[list(columns)])
    frame = pd.concat(frames, ignore_index=True)
    for name, spec in columns.items():
        frame[name] = frame[name].astype(np.float64 if spec.kind == "numeric" else object)
        if spec.kind == "categorical":
            frame[name] = frame[name].where(frame[name].notna(), None)
    specs = list(columns.values()) + [
        ColumnSpec(name="label", kind="categorical", role="label"),
        ColumnSpec(name=SOURCE_COLUMN, kind="categorical", role="source"),
    ]
    return Dataset(
        columns=specs,
        frame=frame,
        labels=np.concatenate([ds.labels for ds in datasets]),
        source=np.concatenate([ds.source for ds in datasets]),
    )


def sample_rows(dataset: Dataset, n: int, seed: int) -> Dataset:
    """Draws ``n`` rows uniformly without replacement, keeping file order."""
    if n >= len(dataset):
        return dataset
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(dataset), size=n, replace=False))
    return dataset.take(picked)


# --- imputation ---


def fit_imputer(dataset: Dataset) -> ImputationModel:
    """Fits medians for numeric and modes for categorical feature columns.

    Ties between modes resolve to the lexicographically smallest value.

    Raises:
        FitError: A feature column has no non-missing value.
    """
    numeric_fill: dict[str, float] = {}
    categorical_fill: dict[str, str] = {}
    for spec in dataset.feature_columns():
        series = dataset.frame[spec.name]
        if series.notna().sum() == 0:
            raise FitError(f"column '{spec.name}' has no non-missing values")
        if spec.kind == "numeric":
            numeric_fill[spec.name] = float(series.median(skipna=True))
        else:
            # Series.mode returns the tied values sorted.
            categorical_fill[spec.name] = str(series.mode(dropna=True).iloc[0])
    return ImputationModel(numeric_fill=numeric_fill, categorical_fill=categorical_fill)


def apply_imputer(model: ImputationModel, dataset: Dataset) -> Dataset:
    """Fills every missing feature value from the fitted model.

    Raises:
        SchemaError: A feature column is not covered by the model.
    """
    frame = dataset.frame.copy()
    for spec in dataset.feature_columns():
        fills = model.numeric_fill if spec.kind == "numeric" else model.categorical_fill
        if spec.name not in fills:
            raise SchemaError(f"imputation model has no fill for column '{spec.name}'")
        column = frame[spec.name]
        frame[spec.name] = column.where(column.notna(), fills[spec.name])
        if spec.kind == "numeric":
            frame[spec.name] = frame[spec.name].astype(np.float64)
    return dataset.replace(frame=frame)


def missing_report(dataset: Dataset) -> pd.DataFrame:
    """Missing count and fraction per feature column."""
    names = [c.name for c in dataset.feature_columns()]
    counts = dataset.frame[names].isna().sum()
    total = max(len(dataset), 1)
    return pd.DataFrame(
        {
            "column": names,
            "missing": [int(counts[n]) for n in names],
            "fraction": [float(counts[n]) / total for n in names],
        }
    )


def column_stats(dataset: Dataset) -> pd.DataFrame:
    """Per numeric column count, mean, std, min, quantiles, max and mode."""
    rows = []
    for name in dataset.numeric_features():
        series = dataset.frame[name].dropna()
        if series.empty:
            continue
        q = series.quantile([0.01, 0.25, 0.5, 0.75])
        rows.append(
            {
                "column": name,
                "count": float(series.count()),
                "mean": float(series.mean()),
                "std": float(series.std(ddof=1)) if len(series) > 1 else math.nan,
                "min": float(series.min()),
                "1%": float(q.loc[0.01]),
                "25%": float(q.loc[0.25]),
                "50%": float(q.loc[0.5]),
                "75%": float(q.loc[0.75]),
                "max": float(series.max()),
                "mode": float(series.mode().iloc[0]),
            }
        )
    return pd.DataFrame(rows)


def column_stats_by_source(dataset: Dataset) -> pd.DataFrame:
    parts = []
    for tag in sorted(set(dataset.source)):
        stats = column_stats(dataset.take(np.flatnonzero(dataset.source == tag)))
        stats.insert(0, "source", tag)
        parts.append(stats)
    return pd.concat(parts, ignore_index=True) if parts else pd.DataFrame()


# --- splitting ---


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    dataset: Dataset,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    *,
    min_class_rows: int = 5,
) -> SplitIndices:
    """Splits rows into train/validation/test preserving class proportions.

    Validation and test sizes are ``round(N * f)``; the remainder goes to
    train. Within each split the class-1 count is the rounded share of the
    split size, so every split is within one row of the global proportion.

    Raises:
        SplitError: Fractions do not sum to 1 or a class is too small.
    """
    if dataset.labels is None:
        raise SplitError("cannot stratify an unlabelled dataset")
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise SplitError(f"fractions must be three non-negative numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise SplitError(f"fractions must sum to 1, got {sum(fractions)}")
    labels = dataset.labels
    n = len(labels)
    by_class = {c: np.flatnonzero(labels == c) for c in (0, 1)}
    for c, rows in by_class.items():
        if len(rows) < min_class_rows:
            raise SplitError(
                f"class {CLASS_NAMES[c]} has {len(rows)} rows, need at least {min_class_rows}"
            )

    n_val = _round_half_up(n * fractions[1])
    n_test = _round_half_up(n * fractions[2])
    share = len(by_class[1]) / n
    val_pos = _round_half_up(n_val * share)
    test_pos = _round_half_up(n_test * share)
    take = {1: (val_pos, test_pos), 0: (n_val - val_pos, n_test - test_pos)}

    rng = np.random.default_rng(seed)
    train, val, test = [], [], []
    for c in (0, 1):
        rows = rng.permutation(by_class[c])
        k_val, k_test = take[c]
        if k_val + k_test > len(rows):
            raise SplitError(f"class {CLASS_NAMES[c]} is too small for the requested split")
        val.extend(rows[:k_val].tolist())
        test.extend(rows[k_val : k_val + k_test].tolist())
        train.extend(rows[k_val + k_test :].tolist())
    return SplitIndices(
        train=sorted(train), validation=sorted(val), test=sorted(test), seed=seed
    )
