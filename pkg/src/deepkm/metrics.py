"""Clustering quality scores: accuracy under optimal label matching, NMI.

Cluster ids carry no meaning, so accuracy maximizes agreement over
one-to-one mappings between predicted clusters and true labels, solved
as a min-cost assignment on the negated contingency table. NMI is
2*I(C;Y) / (H(C)+H(Y)) with natural-log entropies; 0/0 is defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class MetricsReport:
    acc: float
    nmi: float
    mapping: dict[int, int]  # predicted cluster id -> matched true label


def _check_labels(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.ndim != 1 or truth.ndim != 1:
        raise ValueError("label arrays must be 1-d")
    if pred.shape[0] != truth.shape[0]:
        raise ValueError(
            f"length mismatch: {pred.shape[0]} predictions vs {truth.shape[0]} labels"
        )
    if pred.shape[0] == 0:
        raise ValueError("need at least one point")
    if pred.min() < 0 or truth.min() < 0:
        raise ValueError("labels must be non-negative integers")
    return pred.astype(np.int64), truth.astype(np.int64)


def contingency_table(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """counts[i, j] = number of points with predicted cluster i, true label j."""
    pred, truth = _check_labels(pred, truth)
    kp = int(pred.max()) + 1
    kt = int(truth.max()) + 1
    counts = np.zeros((kp, kt), dtype=np.int64)
    np.add.at(counts, (pred, truth), 1)
    return counts


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Permutation p minimizing sum_i cost[i, p[i]] over a square matrix."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost must be square, got shape {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def accuracy(pred, truth) -> tuple[float, dict[int, int]]:
    """Best-mapping agreement fraction, plus the mapping that achieves it.

    The contingency table is padded to square so the matching stays
    one-to-one when cluster and label counts differ; padded rows or
    columns contribute nothing.
    """
    pred, truth = _check_labels(pred, truth)
    counts = contingency_table(pred, truth)
    side = max(counts.shape)
    padded = np.zeros((side, side), dtype=np.int64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    perm = hungarian(-padded.astype(np.float64))
    matched = int(padded[np.arange(side), perm].sum())
    mapping = {i: int(perm[i]) for i in range(counts.shape[0])}
    return matched / pred.shape[0], mapping


def _entropy(counts: np.ndarray, n: int) -> float:
    """H = ln n - (1/n) sum c ln c over non-zero counts; exact at c = n."""
    c = counts[counts > 0].astype(np.float64)
    return float(np.log(n) - (c * np.log(c)).sum() / n)


def nmi(pred, truth) -> float:
    """2*I(C;Y) / (H(C)+H(Y)), clipped to [0,1]; 0 when both are constant."""
    pred, truth = _check_labels(pred, truth)
    n = pred.shape[0]
    counts = contingency_table(pred, truth)
    h_pred = _entropy(counts.sum(axis=1), n)
    h_truth = _entropy(counts.sum(axis=0), n)
    denom = h_pred + h_truth
    if denom <= 0.0:
        return 0.0
    h_joint = _entropy(counts.ravel(), n)
    mutual = h_pred + h_truth - h_joint
    return float(min(max(2.0 * mutual / denom, 0.0), 1.0))


def evaluate(pred, truth) -> MetricsReport:
    acc, mapping = accuracy(pred, truth)
    return MetricsReport(acc=acc, nmi=nmi(pred, truth), mapping=mapping)
