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
"""Token-level explanations of a black-box ``texts -> (n, 2)`` predictor.

Both explainers perturb a sentence by removing tokens and watch
P(Ransomware). A positive weight means the token pushes the prediction toward
Ransomware (class 1), a negative weight toward Benign.

Predictors must be pure: perturbed texts are scored in fixed-size chunks, and
with ``workers > 1`` the chunks run on a thread pool without changing any
result.
"""

import logging
from collections import defaultdict
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd
from sklearn.linear_model import Ridge

from .data_model import (
    CLASS_NAMES,
    ClassImportance,
    Explanation,
    ImportanceSummary,
    TokenWeight,
)
from .errors import ExplainError, NumericError

_logger = logging.getLogger(__name__)

PredictFn = Callable[[Sequence[str]], np.ndarray]

DEFAULT_N_SAMPLES = 1000
DEFAULT_KERNEL_WIDTH = 25.0
RIDGE_ALPHA = 1.0
CHUNK_SIZE = 64


def pointwise(fn: Callable[[str], Sequence[float]]) -> PredictFn:
    """Adapts a single-text ``text -> (p0, p1)`` function to a batched predictor."""

    def predict(texts: Sequence[str]) -> np.ndarray:
        return np.asarray([fn(t) for t in texts], dtype=np.float64).reshape(len(texts), 2)

    return predict


def _score(predict: PredictFn, texts: list[str], workers: int = 1) -> np.ndarray:
    """P(Ransomware) for every text, chunked identically whatever ``workers`` is."""
    chunks = [texts[i : i + CHUNK_SIZE] for i in range(0, len(texts), CHUNK_SIZE)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(predict, chunks))
    else:
        parts = [predict(chunk) for chunk in chunks]
    probs = np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])
    if probs.shape != (len(texts), 2):
        raise ExplainError(f"predictor returned shape {probs.shape}, expected ({len(texts)}, 2)")
    if not np.isfinite(probs).all():
        raise NumericError("predictor returned non-finite probabilities")
    return probs


def _tokens(text: str) -> list[str]:
    tokens = text.split()
    if not tokens:
        raise ExplainError("cannot explain a text with no tokens")
    return tokens


def _class_probs(row: np.ndarray) -> tuple[float, float]:
    # Renormalise so the pair sums to 1 within float tolerance.
    total = float(row[0] + row[1])
    return float(row[0] / total), float(row[1] / total)


def lime_masks(d: int, n_samples: int, seed: int) -> np.ndarray:
    """Binary keep-masks; row 0 keeps everything.

    Every other row removes ``k ~ U{1..d}`` distinct positions, drawn from a
    generator seeded by ``(seed, row)``.
    """
    masks = np.ones((n_samples, d), dtype=np.int8)
    for row in range(1, n_samples):
        rng = np.random.default_rng([seed, row])
        k = int(rng.integers(1, d + 1))
        masks[row, rng.choice(d, size=k, replace=False)] = 0
    return masks


def lime_explain(
    predict: PredictFn,
    text: str,
    n_samples: int = DEFAULT_N_SAMPLES,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
    seed: int = 0,
    *,
    workers: int = 1,
) -> Explanation:
    """Local weighted ridge surrogate over token-removal perturbations.

    Samples are weighted by ``exp(-D**2 / kernel_width**2)`` with
    ``D = 100 * (1 - kept / d)``. The surrogate regresses P(Ransomware) on the
    keep-mask; its coefficients are the token weights and its weighted R**2
    is reported as local fidelity (0, flagged, when the predictions do not
    vary).

    Raises:
        ExplainError: The text has no tokens or ``n_samples`` < 2.
        NumericError: The predictor returned non-finite values.
    """
    tokens = _tokens(text)
    if n_samples < 2:
        raise ExplainError("lime needs at least 2 samples")
    d = len(tokens)
    masks = lime_masks(d, n_samples, seed)
    texts = [" ".join(t for t, keep in zip(tokens, mask) if keep) for mask in masks]
    probs = _score(predict, texts, workers)
    y = probs[:, 1]

    distance = 100.0 * (1.0 - masks.sum(axis=1) / d)
    sample_weight = np.exp(-(distance**2) / kernel_width**2)
    surrogate = Ridge(alpha=RIDGE_ALPHA, fit_intercept=True)
    surrogate.fit(masks.astype(np.float64), y, sample_weight=sample_weight)

    flags = []
    if np.ptp(y) == 0.0:
        r2 = 0.0
        flags.append("fidelity_undefined")
    else:
        r2 = float(surrogate.score(masks.astype(np.float64), y, sample_weight=sample_weight))
    p0, p1 = _class_probs(probs[0])
    return Explanation(
        method="lime",
        text=text,
        tokens=[TokenWeight(token=t, weight=float(w)) for t, w in zip(tokens, surrogate.coef_)],
        predicted_class=int(p1 > p0),
        class_probs=(p0, p1),
        local_fidelity_r2=r2,
        n_samples=n_samples,
        seed=seed,
        flags=flags,
    )


def occlusion_explain(predict: PredictFn, text: str, *, workers: int = 1) -> Explanation:
    """Weight of token i = p1(text) - p1(text without token i).

    Scores exactly ``len(tokens) + 1`` texts.
    """
    tokens = _tokens(text)
    texts = [text] + [" ".join(tokens[:i] + tokens[i + 1 :]) for i in range(len(tokens))]
    probs = _score(predict, texts, workers)
    p1 = probs[:, 1]
    p0_full, p1_full = _class_probs(probs[0])
    return Explanation(
        method="occlusion",
        text=text,
        tokens=[TokenWeight(token=t, weight=float(p1[0] - p1[i + 1])) for i, t in enumerate(tokens)],
        predicted_class=int(p1_full > p0_full),
        class_probs=(p0_full, p1_full),
    )


def summarize_importance(
    explanations: Sequence[Explanation],
    labels: Sequence[int],
    top_k: int | None = None,
) -> ImportanceSummary:
    """Per-class mean |weight| and per-token mean signed weight.

    A token's mean only counts explanations in which it occurs; repeated
    tokens within one explanation each contribute a sample.

    Raises:
        ExplainError: Misaligned inputs, mixed methods or an empty class.
    """
    if len(explanations) != len(labels):
        raise ExplainError("explanations and labels must be aligned")
    methods = {e.method for e in explanations}
    if len(methods) != 1:
        raise ExplainError(f"expected explanations of one method, got {sorted(methods)}")
    classes = []
    for label, class_name in enumerate(CLASS_NAMES):
        members = [e for e, y in zip(explanations, labels) if int(y) == label]
        if not members:
            raise ExplainError(f"no explanations for class {class_name}")
        per_token: dict[str, list[float]] = defaultdict(list)
        for e in members:
            for tw in e.tokens:
                per_token[tw.token].append(tw.weight)
        means = [TokenWeight(token=t, weight=float(np.mean(w))) for t, w in per_token.items()]
        means.sort(key=lambda tw: (-abs(tw.weight), tw.token))
        classes.append(
            ClassImportance(
                label=label,
                class_name=class_name,
                n_explanations=len(members),
                avg_abs_importance=float(
                    np.mean([np.mean([abs(tw.weight) for tw in e.tokens]) for e in members])
                ),
                top_features=means[:top_k] if top_k is not None else means,
            )
        )
    return ImportanceSummary(method=methods.pop(), classes=classes)


def format_weight(tw: TokenWeight) -> str:
    return f"{tw.token}= {tw.weight:+.4f}"


def class_profiles(summary: ImportanceSummary, k: int = 3) -> dict[str, dict[str, list[str]]]:
    """Top-k positive and negative tokens per class, formatted as signed scores."""
    profiles = {}
    for entry in summary.classes:
        positive = sorted((t for t in entry.top_features if t.weight > 0), key=lambda t: -t.weight)
        negative = sorted((t for t in entry.top_features if t.weight < 0), key=lambda t: t.weight)
        profiles[entry.class_name] = {
            "positive": [format_weight(t) for t in positive[:k]],
            "negative": [format_weight(t) for t in negative[:k]],
        }
    return profiles


def bars_frame(explanation: Explanation) -> pd.DataFrame:
    """Signed bar data ordered by |weight| descending, ties by position."""
    frame = pd.DataFrame(
        {
            "position": range(len(explanation.tokens)),
            "token": [tw.token for tw in explanation.tokens],
            "weight": [tw.weight for tw in explanation.tokens],
        }
    )
    frame["magnitude"] = frame["weight"].abs()
    frame = frame.sort_values(["magnitude", "position"], ascending=[False, True], kind="stable")
    return frame.drop(columns="magnitude").reset_index(drop=True)


def top_token(explanation: Explanation) -> TokenWeight:
    """The token with the largest |weight| (first position on ties)."""
    return max(explanation.tokens, key=lambda tw: abs(tw.weight))
