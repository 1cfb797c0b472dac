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
"""Confusion counts, scalar metrics and ROC/AUC with Ransomware as positive."""

import logging
from collections.abc import Sequence

import numpy as np
from sklearn import metrics as skmetrics

from .data_model import ConfusionMatrix, EvalReport, Metrics, RocCurve
from .errors import EvaluationError

_logger = logging.getLogger(__name__)


def confusion(predicted: Sequence[int], actual: Sequence[int]) -> ConfusionMatrix:
    """Counts each quadrant with class 1 as the positive class.

    Raises:
        EvaluationError: Empty input or unequal lengths.
    """
    pred = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(actual, dtype=np.int64)
    if pred.shape != true.shape:
        raise EvaluationError(f"length mismatch: {pred.size} predictions, {true.size} labels")
    if pred.size == 0:
        raise EvaluationError("confusion needs at least one sample")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
        tn=int(np.sum((pred == 0) & (true == 0))),
    )


def _ratio(num: int, den: int, flag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, precision, recall and F1.

    A ratio with a zero denominator is reported as 0 and named in ``flags``.

    Raises:
        EvaluationError: The matrix is empty.
    """
    if cm.total == 0:
        raise EvaluationError("metrics need a non-empty confusion matrix")
    flags: list[str] = []
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision_undefined", flags)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall_undefined", flags)
    f1 = _ratio(2 * precision * recall, precision + recall, "f1_undefined", flags)
    return Metrics(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=precision,
        recall=recall,
        f1=f1,
        flags=flags,
    )


def roc_auc(scores: Sequence[float], actual: Sequence[int]) -> RocCurve:
    """ROC over every distinct score, descending, with trapezoidal AUC.

    Equal scores enter the sweep together, so the area equals the probability
    that a random positive outscores a random negative (ties count half).

    Raises:
        EvaluationError: Unequal lengths, non-finite scores or a single class.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(actual, dtype=np.int64)
    if s.shape != y.shape:
        raise EvaluationError(f"length mismatch: {s.size} scores, {y.size} labels")
    if not np.isfinite(s).all():
        raise EvaluationError("ROC scores must be finite")
    if np.unique(y).size < 2:
        raise EvaluationError("ROC needs both classes present")
    fpr, tpr, _ = skmetrics.roc_curve(y, s, pos_label=1, drop_intermediate=False)
    points = [(float(f), float(t)) for f, t in zip(fpr, tpr)]
    return RocCurve(points=points, auc=float(skmetrics.auc(fpr, tpr)))


def concordance(scores: Sequence[float], actual: Sequence[int]) -> float:
    """Brute-force P(score_pos > score_neg) + 0.5 * P(tie) over all pairs."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(actual)
    pos, neg = s[y == 1], s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise EvaluationError("concordance needs both classes present")
    diff = pos[:, None] - neg[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size)


def evaluate_scores(scores: Sequence[float], actual: Sequence[int], threshold: float = 0.5) -> EvalReport:
    """Builds the full report from P(Ransomware) scores.

    A single-class label set still gets a confusion matrix and metrics; the ROC
    is omitted and ``single_class`` is flagged.
    """
    s = np.asarray(scores, dtype=np.float64)
    predicted = (s > threshold).astype(np.int64)
    cm = confusion(predicted, actual)
    result = metrics(cm)
    flags = list(result.flags)
    roc = None
    if np.unique(np.asarray(actual)).size < 2:
        flags.append("single_class")
        _logger.warning("evaluation set has a single class; ROC omitted")
    else:
        roc = roc_auc(s, actual)
    report = EvalReport(
        confusion=cm,
        metrics=result,
        roc=roc.points if roc is not None else None,
        auc=roc.auc if roc is not None else None,
        flags=flags,
    )
    _logger.info(report.metrics.model_dump_json())
    return report
