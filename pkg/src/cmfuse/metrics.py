"""Confusion matrix and per-class / support-weighted evaluation metrics.

All ratios are formed over integer counts with exact rational arithmetic
and converted to float once at the end, so the algebraic identity
"support-weighted recall == accuracy" holds to the last bit, not just to
rounding. Cells with a 0/0 ratio are defined as 0 (logged, never NaN).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import UsageError

log = logging.getLogger(__name__)


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Count grid: entry (i, j) = true class i predicted as class j."""
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise UsageError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if not (0 <= t < n_classes and 0 <= p < n_classes):
            raise UsageError(f"label pair ({t}, {p}) out of range for {n_classes} classes")
        cm[t, p] += 1
    return cm


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    """Per-class and support-weighted precision/recall/F1 plus accuracy."""

    per_class: list
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    accuracy: float
    total: int


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den > 0 else Fraction(0)


def evaluate(cm: np.ndarray) -> EvalReport:
    """Metrics from a confusion matrix.

    Per class c: TP = cm[c,c], FP = column sum - TP, FN = row sum - TP.
    Weighted averages use the true-class counts (row sums) as weights, so
    weighted recall reduces to trace/total, i.e. accuracy.
    """
    cm = np.asarray(cm)
    n = cm.shape[0]
    total = int(cm.sum())
    if total == 0:
        raise UsageError("cannot evaluate an empty confusion matrix")

    per_class = []
    zero_cells = []
    w_precision = Fraction(0)
    w_recall = Fraction(0)
    w_f1 = Fraction(0)
    for c in range(n):
        tp = int(cm[c, c])
        support = int(cm[c].sum())
        predicted = int(cm[:, c].sum())
        precision = _ratio(tp, predicted)
        recall = _ratio(tp, support)
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else Fraction(0))
        if predicted == 0 or support == 0 or precision + recall == 0:
            zero_cells.append(c)
        per_class.append(ClassMetrics(precision=float(precision),
                                      recall=float(recall),
                                      f1=float(f1), support=support))
        w_precision += support * precision
        w_recall += support * recall
        w_f1 += support * f1
    if zero_cells:
        log.warning("0/0 metric cells reported as 0 for classes %s", zero_cells)

    return EvalReport(
        per_class=per_class,
        weighted_precision=float(w_precision / total),
        weighted_recall=float(w_recall / total),
        weighted_f1=float(w_f1 / total),
        accuracy=float(Fraction(int(np.trace(cm)), total)),
        total=total,
    )
