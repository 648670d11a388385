"""Binary classification metrics for the evaluation protocol.

Five metrics are reported per execution: accuracy, balanced accuracy,
macro-F1, AUC and minimum sensitivity.  AUC defaults to "hard" mode, i.e.
computed from predicted labels, in which case it coincides exactly with
balanced accuracy; "score" mode uses the Mann-Whitney rank statistic over
decision scores with half credit for ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata


@dataclass
class MetricsRecord:
    accuracy: float
    balanced_accuracy: float
    f1_macro: float
    auc: float
    min_sensitivity: float
    fit_time_seconds: Optional[float] = None
    method: Optional[str] = None
    seed: Optional[int] = None
    fold: Optional[int] = None

    METRIC_NAMES = (
        "accuracy",
        "balanced_accuracy",
        "f1_macro",
        "auc",
        "min_sensitivity",
    )

    def metric_values(self):
        return {name: getattr(self, name) for name in self.METRIC_NAMES}


def confusion(y_true, y_pred) -> np.ndarray:
    """2x2 confusion matrix; rows are true classes, columns predicted."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if y_true.size == 0:
        raise ValueError("empty inputs")
    for arr in (y_true, y_pred):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("labels must be binary")
    matrix = np.zeros((2, 2), dtype=np.int64)
    for j in (0, 1):
        for m in (0, 1):
            matrix[j, m] = np.sum((y_true == j) & (y_pred == m))
    return matrix


def _recalls(matrix):
    row_sums = matrix.sum(axis=1)
    if (row_sums == 0).any():
        raise ValueError("both classes must be present in y_true")
    return np.diag(matrix) / row_sums


def score_auc(y_true, scores) -> float:
    """Rank-based AUC with 0.5 credit for tied scores."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y_true == 1))
    n_neg = int(np.sum(y_true == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present for AUC")
    ranks = rankdata(scores)
    u = ranks[y_true == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def compute_metrics(
    y_true,
    y_pred,
    scores=None,
    auc_mode: str = "hard",
    **meta,
) -> MetricsRecord:
    """Evaluate one execution's predictions.

    ``auc_mode="hard"`` (default) computes AUC from the predicted labels,
    which for binary labels equals balanced accuracy; ``"score"`` requires
    ``scores`` and uses the rank statistic.
    """
    matrix = confusion(y_true, y_pred)
    n = matrix.sum()
    accuracy = float(np.trace(matrix) / n)
    recalls = _recalls(matrix)
    balanced = float(recalls.mean())
    min_sens = float(recalls.min())

    f1 = []
    col_sums = matrix.sum(axis=0)
    for j in (0, 1):
        denom = col_sums[j] + matrix.sum(axis=1)[j]
        f1.append(2 * matrix[j, j] / denom if denom else 0.0)
    f1_macro = float(np.mean(f1))

    if auc_mode == "hard":
        auc = balanced
    elif auc_mode == "score":
        if scores is None:
            raise ValueError("scores required for auc_mode='score'")
        auc = score_auc(y_true, scores)
    else:
        raise ValueError(f"bad auc_mode {auc_mode!r}")

    return MetricsRecord(
        accuracy=accuracy,
        balanced_accuracy=balanced,
        f1_macro=f1_macro,
        auc=auc,
        min_sensitivity=min_sens,
        **meta,
    )
