"""Partition-quality metrics: NMI, overlapping NMI, AvgF1, accuracy, modularity.

All partition metrics are invariant under group relabeling of either
argument and bounded in [0, 1]; modularity lies in [-1/2, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import AttributedGraph, Partition


@dataclass(frozen=True)
class ConfusionMatrix:
    """Overlap table n_pq = |truth_p ∩ detected_q| with marginals."""

    table: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    normalizer: float | None = None

    @property
    def normalized(self) -> np.ndarray:
        if self.normalizer is None:
            return self.table
        return self.table / self.normalizer


def confusion(detected: Partition, truth: Partition, normalizer: float | None = None) -> ConfusionMatrix:
    """Counts with truth on rows, detected on columns."""
    if detected.n != truth.n:
        raise ValueError("partitions cover different node sets")
    table = np.zeros((truth.q, detected.q), dtype=np.float64)
    np.add.at(table, (truth.labels, detected.labels), 1.0)
    return ConfusionMatrix(table=table, row_marginals=table.sum(axis=1),
                           col_marginals=table.sum(axis=0), normalizer=normalizer)


def match_columns(detected: Partition, truth: Partition):
    """Permutation of detected labels maximizing total overlap with truth.

    Returns (relabeled detected Partition, permutation array perm where
    detected label j is renamed perm[j]).
    """
    k = max(detected.q, truth.q)
    table = np.zeros((k, k))
    np.add.at(table, (truth.labels, detected.labels), 1.0)
    rows, cols = linear_sum_assignment(-table)
    perm = np.empty(k, dtype=np.int64)
    perm[cols] = rows
    return Partition(labels=perm[detected.labels], q=k), perm[:detected.q]


def nmi(a: Partition, b: Partition) -> float:
    """Normalized mutual information of two total partitions.

    0*log 0 terms vanish; the 0/0 case of two single-group partitions is
    defined as 1 (perfect agreement convention).
    """
    if a.n != b.n:
        raise ValueError("partitions cover different node sets")
    n = a.n
    npq = confusion(a, b).table  # orientation is irrelevant: the formula is symmetric
    rows = npq.sum(axis=1)
    cols = npq.sum(axis=0)
    nz = npq > 0
    num = -2.0 * (npq[nz] * np.log(npq[nz] * n / np.outer(rows, cols)[nz])).sum()
    den = (rows[rows > 0] * np.log(rows[rows > 0] / n)).sum() \
        + (cols[cols > 0] * np.log(cols[cols > 0] / n)).sum()
    if den == 0.0:
        return 1.0
    return float(num / den)


def _f1(set_a: int, set_b: int, inter: int) -> float:
    if set_a + set_b == 0:
        return 0.0
    return 2.0 * inter / (set_a + set_b)


def avg_f1(detected: Partition, truth: Partition) -> float:
    """Symmetric best-match mean of per-community F1 scores."""
    if detected.n != truth.n:
        raise ValueError("partitions cover different node sets")
    table = confusion(detected, truth).table  # truth rows x detected cols
    t_sizes = table.sum(axis=1)
    d_sizes = table.sum(axis=0)
    f1 = 2.0 * table / np.maximum(t_sizes[:, None] + d_sizes[None, :], 1e-300)
    keep_t = t_sizes > 0
    keep_d = d_sizes > 0
    if not keep_t.any() or not keep_d.any():
        raise ValueError("a partition side is empty")
    truth_best = f1[keep_t][:, keep_d].max(axis=1).mean()
    det_best = f1[keep_t][:, keep_d].max(axis=0).mean()
    return float(0.5 * truth_best + 0.5 * det_best)


def accuracy(detected: Partition, truth: Partition) -> float:
    """Best-permutation label agreement via optimal assignment.

    Unequal group counts are handled by zero-padding the overlap table.
    """
    if detected.n != truth.n:
        raise ValueError("partitions cover different node sets")
    k = max(detected.q, truth.q)
    table = np.zeros((k, k))
    np.add.at(table, (truth.labels, detected.labels), 1.0)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum() / detected.n)


def _binary_entropy_terms(p: float) -> float:
    # -p log p with the 0 log 0 = 0 convention
    return 0.0 if p <= 0.0 else -p * np.log(p)


def onmi(cover_a: list, cover_b: list, n: int) -> float:
    """Overlapping NMI over binary membership indicator variables.

    Covers are lists of node-id sets and may omit nodes.  For each
    community X_k of one cover the best (lowest) conditional entropy
    against the other cover's communities is kept, subject to the usual
    sanity constraint h(P11)+h(P00) >= h(P01)+h(P10); communities with no
    qualifying partner keep their full entropy.
    """
    if not cover_a or not cover_b:
        raise ValueError("covers must hold at least one community")

    sets_a = [frozenset(c) for c in cover_a]
    sets_b = [frozenset(c) for c in cover_b]

    def cond_norm(from_sets, to_sets):
        ratios = []
        for X in from_sets:
            px = len(X) / n
            hx = _binary_entropy_terms(px) + _binary_entropy_terms(1.0 - px)
            if hx == 0.0:
                ratios.append(0.0)
                continue
            best = hx
            for Y in to_sets:
                p11 = len(X & Y) / n
                p10 = len(X - Y) / n
                p01 = len(Y - X) / n
                p00 = 1.0 - p11 - p10 - p01
                if _binary_entropy_terms(p11) + _binary_entropy_terms(p00) < \
                   _binary_entropy_terms(p01) + _binary_entropy_terms(p10):
                    continue
                py = len(Y) / n
                hy = _binary_entropy_terms(py) + _binary_entropy_terms(1.0 - py)
                h_joint = sum(_binary_entropy_terms(p) for p in (p11, p10, p01, p00))
                best = min(best, h_joint - hy)
            ratios.append(best / hx)
        return float(np.mean(ratios))

    return 1.0 - 0.5 * (cond_norm(sets_a, sets_b) + cond_norm(sets_b, sets_a))


def partition_to_cover(p: Partition) -> list:
    return [set(np.flatnonzero(p.labels == r).tolist()) for r in range(p.q)
            if (p.labels == r).any()]


def modularity(g: AttributedGraph, p: Partition) -> float:
    """Girvan-Newman modularity vs the configuration null model.

    Q = (2m)^-1 sum_ij (a_ij - k_i k_j / 2m) delta(z_i, z_j) over ordered
    pairs, i = j included in the null-model term.
    """
    if g.m == 0:
        raise ValueError("modularity is undefined for an edgeless graph")
    z = p.labels
    edges = g.edge_array()
    intra = (z[edges[:, 0]] == z[edges[:, 1]]).sum() if edges.size else 0
    deg = g.degrees.astype(np.float64)
    group_deg = np.bincount(z, weights=deg, minlength=p.q)
    two_m = 2.0 * g.m
    return float(2.0 * intra / two_m - (group_deg ** 2).sum() / (two_m * two_m))
