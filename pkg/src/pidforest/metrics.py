"""Ranking metrics for anomaly scores (higher score = more anomalous)."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
from scipy.stats import rankdata


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).astype(bool).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    return s, y


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied pairs count one half."""
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined for single-class labels")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def top_fraction_accuracy(scores, labels, fraction: float) -> float:
    """Share of anomalies caught among the ``ceil(fraction * n)`` top scores.

    The hit count is divided by ``min(top, positives)`` so that a perfect
    ranking scores 1 whether anomalies are rarer or more common than the
    inspected fraction. Ties in score keep index order.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("no labeled anomalies")
    top = math.ceil(fraction * len(s))
    order = np.argsort(-s, kind="stable")[:top]
    return float(y[order].sum() / min(top, n_pos))


def top_k_hits(scores, labels, k: int) -> int:
    """Number of labeled anomalies among the ``k`` highest scores."""
    s, y = _check(scores, labels)
    return int(y[np.argsort(-s, kind="stable")[:k]].sum())


def roc_points(scores, labels) -> list[tuple[float, float, float]]:
    """ROC vertices ``(threshold, fpr, tpr)``, one per distinct score.

    Starts at ``(inf, 0, 0)``; a point is predicted anomalous when its score
    is at least the threshold.
    """
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC undefined for single-class labels")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    tp = np.cumsum(y[order])
    fp = np.cumsum(~y[order])
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), len(s) - 1]
    out = [(math.inf, 0.0, 0.0)]
    out += [
        (float(s_sorted[i]), float(fp[i] / n_neg), float(tp[i] / n_pos)) for i in last
    ]
    return out


def roc_auc_trapezoid(points) -> float:
    fpr = np.array([p[1] for p in points])
    tpr = np.array([p[2] for p in points])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def write_roc_csv(points, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for thr, fpr, tpr in points:
            writer.writerow([repr(thr), repr(fpr), repr(tpr)])
