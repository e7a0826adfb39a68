"""Detection-quality metrics over score and label vectors."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class UndefinedMetricError(ValueError):
    pass


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores and labels must be 1-d and equally long, got {scores.shape} and {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if labels.size and not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    return scores, labels.astype(np.int8)


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], xs.size]
    run_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(x.size, dtype=np.float64)
    ranks[order] = np.repeat(run_rank, ends - starts)
    return ranks


def auroc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank sum."""
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs at least one positive and one negative label")
    ranks = average_ranks(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores, labels) -> np.ndarray:
    """ROC curve as rows of (threshold, fpr, tpr), thresholds descending."""
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC needs at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    last = np.r_[s[1:] != s[:-1], True]
    pts = np.column_stack([s[last], fp[last] / n_neg, tp[last] / n_pos])
    return np.vstack([[np.inf, 0.0, 0.0], pts])


class PatternContribution(NamedTuple):
    tp_rate_up: float
    fp_rate_up: float
    tn_rate_down: float
    fn_rate_down: float
    n_up: int
    n_down: int


def pattern_contribution(final, burst_only, labels) -> PatternContribution:
    """Split records by whether the full score raised or lowered the burst score.

    Records with a zero burst score have no ratio and are left out. Rates
    over an empty population are NaN.
    """
    final = np.asarray(final, dtype=np.float64)
    burst_only = np.asarray(burst_only, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int8)
    if not final.shape == burst_only.shape == labels.shape:
        raise ValueError("final, burst_only and labels must align")
    ok = burst_only > 0
    ratio = np.full(final.shape, 1.0)
    ratio[ok] = final[ok] / burst_only[ok]
    up = ok & (ratio > 1.0)
    down = ok & (ratio < 1.0)
    n_up = int(up.sum())
    n_down = int(down.sum())
    pos_up = int(labels[up].sum())
    pos_down = int(labels[down].sum())
    nan = float("nan")
    return PatternContribution(
        pos_up / n_up if n_up else nan,
        (n_up - pos_up) / n_up if n_up else nan,
        (n_down - pos_down) / n_down if n_down else nan,
        pos_down / n_down if n_down else nan,
        n_up,
        n_down,
    )
