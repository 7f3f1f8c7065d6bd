"""Clustering evaluation metrics.

All three metrics are invariant to relabeling of either partition. ACC and
F1 use the optimal one-to-one cluster-to-class mapping obtained with the
Hungarian algorithm on the contingency matrix (zero-padded to square when
the partitions have different sizes).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ShapeError


def _dense(labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    _, dense = np.unique(labels, return_inverse=True)
    return dense


def _contingency(predicted, truth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    predicted = _dense(predicted)
    truth = _dense(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ShapeError("predicted and truth labels must be equal-length vectors")
    kp = int(predicted.max()) + 1
    kt = int(truth.max()) + 1
    table = np.zeros((kp, kt), dtype=np.int64)
    np.add.at(table, (predicted, truth), 1)
    return table, predicted, truth


def _hungarian_mapping(table: np.ndarray) -> dict[int, int]:
    """Cluster -> class mapping maximizing matched counts.

    Rectangular tables are padded with zeros to square; padded rows or
    columns correspond to unmatched clusters/classes.
    """
    k = max(table.shape)
    padded = np.zeros((k, k), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(-padded)
    return {int(r): int(c) for r, c in zip(rows, cols)}


def acc(predicted, truth) -> float:
    """Clustering accuracy under the optimal one-to-one mapping."""
    table, pred, _ = _contingency(predicted, truth)
    mapping = _hungarian_mapping(table)
    matched = sum(
        int(table[r, c]) for r, c in mapping.items() if r < table.shape[0] and c < table.shape[1]
    )
    return matched / pred.size


def nmi(predicted, truth) -> float:
    """Normalized mutual information, I(U;V) / sqrt(H(U) H(V)), natural logs.

    If either partition has zero entropy: 1.0 when both are single-cluster
    (identical trivial structure), else 0.0.
    """
    table, pred, tr = _contingency(predicted, truth)
    n = pred.size
    # Work from integer counts: a single-cluster partition then has
    # exactly zero entropy instead of a rounding-order residue.
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    if a.size == 1 or b.size == 1:
        return 1.0 if (a.size == 1 and b.size == 1) else 0.0

    hu = float(np.log(n) - np.sum(a * np.log(a)) / n)
    hv = float(np.log(n) - np.sum(b * np.log(b)) / n)
    rows, cols = np.nonzero(table)
    c = table[rows, cols].astype(np.float64)
    mi = float(np.sum(c * np.log(n * c / (a[rows] * b[cols]))) / n)
    return float(min(max(mi / np.sqrt(hu * hv), 0.0), 1.0))


def f1(predicted, truth) -> float:
    """Macro-averaged F1 after the optimal cluster-to-class mapping.

    The mapping maximizes matched counts (the same objective as ``acc``);
    ties between count-optimal mappings are resolved toward the one with
    the larger macro-F1, which makes the value invariant to relabeling.
    Both objectives are linear in the assignment (the F1 contribution of
    mapping cluster r to class c is ``2 C[r,c] / (|r| + |c|)``), so one
    Hungarian solve on the lexicographically combined cost suffices. A
    truth class that receives no predictions contributes 0.
    """
    table, pred, tr = _contingency(predicted, truth)
    kp, kt = table.shape
    cluster_sizes = table.sum(axis=1)
    class_sizes = table.sum(axis=0)
    denom = cluster_sizes[:, None] + class_sizes[None, :]
    f1_pair = np.where(table > 0, 2.0 * table / np.maximum(denom, 1), 0.0)

    k = max(kp, kt)
    counts = np.zeros((k, k))
    counts[:kp, :kt] = table
    pair_scores = np.zeros((k, k))
    pair_scores[:kp, :kt] = f1_pair
    tiebreak = 0.5 / (k + 1)  # too small to trade a matched count away
    rows, cols = linear_sum_assignment(-(counts + tiebreak * pair_scores))
    return float(pair_scores[rows, cols].sum() / kt)


def evaluate(predicted, truth) -> dict[str, float]:
    """The (ACC, NMI, F1) triple as a dict keyed for reports."""
    return {"acc": acc(predicted, truth), "nmi": nmi(predicted, truth), "f1": f1(predicted, truth)}
