from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


def _scores_labels(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise MetricError("scores and labels differ in length")
    if not np.all(np.isin(y, (0, 1))):
        raise MetricError("labels must be 0/1")
    return s, y.astype(bool)


def auroc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative, ties
    counting one half (the Mann-Whitney statistic)."""
    s, y = _scores_labels(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUROC needs both classes")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Mean precision at the rank of each positive, ranking by descending
    score. Tied scores keep their input order. The precisions are summed
    with ``math.fsum`` so the result does not depend on summation order."""
    s, y = _scores_labels(scores, labels)
    if not y.any():
        raise MetricError("average precision needs at least one positive")
    order = np.argsort(-s, kind="stable")
    hits = y[order]
    ranks = np.flatnonzero(hits) + 1
    precisions = np.arange(1, ranks.size + 1) / ranks
    return math.fsum(precisions.tolist()) / ranks.size
