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
"""Numerical-to-text tokenization: quantile bins, bin tokens and sentences.

Each numeric value becomes the token ``{column}_bin_{k}`` where ``k`` counts
the interior quantile edges strictly below the value, so bins are
left-open/right-closed and values outside the fitted range clamp to the
first or last bin. A row's tokens, in fitted column order and joined by
single spaces, form its ``text``.
"""

import hashlib
import logging
from collections.abc import Iterable, Mapping, Sequence
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, PrivateAttr, model_validator

from .data_model import CLASS_NAMES, BinningModel, ColumnBins
from .errors import FitError, SchemaError
from .ingest import Dataset

_logger = logging.getLogger(__name__)

PAD, UNK, CLS = 0, 1, 2
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]")
DEFAULT_MAX_LEN = 128


# --- binning ---


def fit_binner(
    dataset: Dataset, n_bins: int = 5, *, include_categoricals: bool = False
) -> BinningModel:
    """Fits deduplicated quantile edges for every numeric feature column.

    Interior edges are the linear-interpolation quantiles at k / n_bins for
    k = 1 .. n_bins - 1. Repeated edges collapse, and an edge equal to the
    column maximum is dropped because no value could fall above it, so a
    constant column has a single bin.

    Raises:
        FitError: A column is empty or still has missing values.
    """
    if n_bins < 1:
        raise FitError(f"n_bins must be >= 1, got {n_bins}")
    probs = np.arange(1, n_bins) / n_bins
    columns: dict[str, ColumnBins] = {}
    order = dataset.numeric_features()
    for name in order:
        values = dataset.frame[name].to_numpy(dtype=np.float64)
        if values.size == 0:
            raise FitError(f"column '{name}' is empty")
        if np.isnan(values).any():
            raise FitError(f"column '{name}' has missing values; impute before binning")
        edges = np.unique(np.quantile(values, probs, method="linear"))
        edges = edges[edges < values.max()]
        columns[name] = ColumnBins(edges=edges.tolist(), n_bins_effective=len(edges) + 1)
        _logger.debug("column %s: %d effective bins", name, len(edges) + 1)
    categorical = dataset.categorical_features() if include_categoricals else []
    return BinningModel(
        n_bins_requested=n_bins,
        column_order=order,
        columns=columns,
        categorical_columns=categorical,
    )


def _edges(model: BinningModel, column: str) -> np.ndarray:
    try:
        return np.asarray(model.columns[column].edges, dtype=np.float64)
    except KeyError:
        raise SchemaError(f"column '{column}' is not fitted") from None


def bin_value(model: BinningModel, column: str, x: float) -> int:
    """Index of the bin holding ``x``: the number of edges strictly below it."""
    return int(np.searchsorted(_edges(model, column), x, side="left"))


def bin_column(model: BinningModel, column: str, values) -> np.ndarray:
    return np.searchsorted(_edges(model, column), np.asarray(values, dtype=np.float64), side="left")


def bin_token(column: str, k: int) -> str:
    return f"{column}_bin_{k}"


def category_token(column: str, value: str) -> str:
    return f"{column}_{'_'.join(str(value).split())}"


def encode_row(
    model: BinningModel,
    row: Mapping[str, object],
    column_order: Optional[Sequence[str]] = None,
) -> str:
    """Turns one row into its space-separated bin-token sentence.

    Raises:
        SchemaError: The row lacks a fitted column.
    """
    order = list(column_order) if column_order is not None else model.column_order
    tokens = []
    for name in order:
        if name not in row:
            raise SchemaError(f"row has no value for column '{name}'")
        tokens.append(bin_token(name, bin_value(model, name, float(row[name]))))
    for name in model.categorical_columns:
        if name not in row:
            raise SchemaError(f"row has no value for column '{name}'")
        tokens.append(category_token(name, row[name]))
    return " ".join(tokens)


def encode_dataset(model: BinningModel, dataset: Dataset) -> list[str]:
    """Vectorised :func:`encode_row` over every row of an imputed dataset."""
    missing = [
        n
        for n in [*model.column_order, *model.categorical_columns]
        if n not in dataset.frame.columns
    ]
    if missing:
        raise SchemaError(f"dataset lacks fitted columns: {missing}")
    parts = []
    for name in model.column_order:
        bins = bin_column(model, name, dataset.frame[name].to_numpy(dtype=np.float64))
        parts.append(np.char.add(f"{name}_bin_", bins.astype(str)))
    for name in model.categorical_columns:
        parts.append(np.asarray([category_token(name, v) for v in dataset.frame[name]]))
    if not parts:
        return [""] * len(dataset)
    return [" ".join(tokens) for tokens in zip(*(p.tolist() for p in parts))]


def prepared_frame(model: BinningModel, dataset: Dataset) -> pd.DataFrame:
    """The ``text,label,source`` table written as the prepared dataset."""
    return pd.DataFrame(
        {
            "text": encode_dataset(model, dataset),
            "label": [CLASS_NAMES[int(v)] for v in dataset.labels],
            "source": list(dataset.source),
        }
    )


# --- vocabulary and fixed-length encoding ---


class TokenVocab(BaseModel):
    """Closed vocabulary over bin tokens with PAD=0, UNK=1, CLS=2."""

    tokens: list[str]
    _index: dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_tokens(self):
        if tuple(self.tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        if any(len(t.split()) != 1 for t in self.tokens):
            raise ValueError("vocabulary tokens cannot contain whitespace")
        return self

    def model_post_init(self, __context) -> None:
        self._index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK)

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()


class EncodedExample(BaseModel):
    """Fixed-length id sequence starting with CLS, with its attention mask."""

    token_ids: list[int]
    attention_mask: list[int]
    label: Optional[int] = None

    @model_validator(mode="after")
    def check_encoding(self):
        if len(self.token_ids) != len(self.attention_mask):
            raise ValueError("token_ids and attention_mask lengths differ")
        if not self.token_ids or self.token_ids[0] != CLS:
            raise ValueError("position 0 must hold CLS")
        if any((i != PAD) != bool(m) for i, m in zip(self.token_ids, self.attention_mask)):
            raise ValueError("attention_mask must be 1 exactly on non-PAD positions")
        if self.label not in (None, 0, 1):
            raise ValueError("label must be 0 or 1")
        return self


def build_vocab(texts: Iterable[str]) -> TokenVocab:
    """Assigns ids in first-seen order after the special tokens."""
    tokens = list(SPECIAL_TOKENS)
    seen = set(tokens)
    for text in texts:
        for token in text.split():
            if token not in seen:
                seen.add(token)
                tokens.append(token)
    return TokenVocab(tokens=tokens)


def encode_texts(
    vocab: TokenVocab, texts: Sequence[str], max_len: int = DEFAULT_MAX_LEN
) -> tuple[np.ndarray, np.ndarray]:
    """CLS + token ids, truncated to ``max_len`` and right-padded with PAD.

    Returns:
        ``(token_ids, attention_mask)`` as int64 arrays of shape (n, max_len).
    """
    ids = np.full((len(texts), max_len), PAD, dtype=np.int64)
    ids[:, 0] = CLS
    for row, text in enumerate(texts):
        seq = [vocab.id_of(t) for t in text.split()[: max_len - 1]]
        ids[row, 1 : 1 + len(seq)] = seq
    return ids, (ids != PAD).astype(np.int64)


def tokenize(
    vocab: TokenVocab,
    text: str,
    max_len: int = DEFAULT_MAX_LEN,
    label: Optional[int] = None,
) -> EncodedExample:
    ids, mask = encode_texts(vocab, [text], max_len)
    return EncodedExample(
        token_ids=ids[0].tolist(), attention_mask=mask[0].tolist(), label=label
    )


def decode(vocab: TokenVocab, token_ids: Sequence[int]) -> str:
    """Inverse of :func:`tokenize` for in-vocabulary tokens (drops CLS and PAD)."""
    return " ".join(vocab.tokens[i] for i in token_ids if i not in (PAD, CLS))
