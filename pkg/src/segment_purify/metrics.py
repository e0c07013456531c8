"""Average Precision and precision-recall curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PRCurve:
    """Precision/recall at every rank of the score-sorted items."""

    recall: np.ndarray
    precision: np.ndarray
    ap: float


def average_precision(scores, labels) -> PRCurve:
    """AP of a ranking: mean of the precisions at each positive item.

    Items are sorted by descending score; equal scores keep their input
    order (stable sort), which pins down AP for quantized scores.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be matching 1-D arrays")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, len(scores) + 1)
    recall = tp / n_pos
    # sum sequentially in rank order, exactly as the definition reads
    ap = sum(precision[hits].tolist()) / n_pos
    return PRCurve(recall=recall, precision=precision, ap=ap)


def mean_average_precision(aps) -> float:
    """Unweighted mean of per-class AP values."""
    aps = list(aps)
    if not aps:
        raise ValueError("no AP values to average")
    return float(np.mean(aps))
