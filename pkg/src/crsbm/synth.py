"""Symmetric-SBM benchmark generator with nested categorical attributes.

Plants q_star equal-size communities grouped into q_tilde categories
(q_b = q_star / q_tilde brother communities per category).  Node
attributes are the one-hot encoding of the category, so the same
real-vector attribute pipeline serves categorical data.  Edges are drawn
independently: intra-community pairs with probability c_in/n, all other
pairs with c_out/n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph, Partition, from_edges


@dataclass(frozen=True)
class SsbmSpec:
    q_star: int
    q_tilde: int
    n_per: int
    c: float
    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if self.q_star < 1 or self.q_tilde < 1 or self.q_star % self.q_tilde:
            raise ValueError("q_tilde must divide q_star")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        if self.c <= 0:
            raise ValueError("mean degree c must be positive")

    @property
    def q_b(self) -> int:
        return self.q_star // self.q_tilde

    @property
    def n(self) -> int:
        return self.q_star * self.n_per

    @property
    def c_in(self) -> float:
        return self.q_star * self.c / (1.0 + (self.q_star - 1) * self.epsilon)

    @property
    def c_out(self) -> float:
        return self.epsilon * self.c_in


def _decode_triangular(idx: np.ndarray, size: int) -> np.ndarray:
    """Map indices of the strict upper triangle of a size x size block to (row, col)."""
    # row r owns (size-1-r) pairs starting at offset r*size - r*(r+1)/2
    r = np.floor((2 * size - 1 - np.sqrt((2 * size - 1) ** 2 - 8 * idx)) / 2).astype(np.int64)
    start = r * size - r * (r + 1) // 2
    c = idx - start + r + 1
    return np.column_stack([r, c])


def _sample_distinct(rng: np.random.Generator, count: int, n_pairs: int) -> np.ndarray:
    """Draw ``count`` distinct integers from [0, n_pairs) by rejection.

    count << n_pairs in the sparse regime, so a couple of top-up rounds
    suffice.
    """
    chosen = np.unique(rng.integers(0, n_pairs, size=count))
    while chosen.size < count:
        extra = rng.integers(0, n_pairs, size=count - chosen.size)
        chosen = np.unique(np.concatenate([chosen, extra]))
    return chosen


def generate_ssbm(spec: SsbmSpec):
    """Sample a planted graph; returns (AttributedGraph, Partition ground truth).

    Per-block edge counts are binomial and pair positions uniform, which
    is equivalent to independent Bernoulli trials over all pairs but runs
    in O(m) instead of O(n^2).  The same seed reproduces the same graph
    byte-for-byte.
    """
    n = spec.n
    p_in = spec.c_in / n
    p_out = spec.c_out / n
    if p_in > 1.0 or p_out > 1.0:
        raise ValueError(f"edge probability exceeds 1 (c_in/n = {p_in:.4g}); c too large for n")

    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(spec.q_star, dtype=np.int64), spec.n_per)
    chunks = []
    for r in range(spec.q_star):
        base_r = r * spec.n_per
        for s in range(r, spec.q_star):
            p = p_in if r == s else p_out
            if p == 0.0:
                continue
            if r == s:
                n_pairs = spec.n_per * (spec.n_per - 1) // 2
            else:
                n_pairs = spec.n_per * spec.n_per
            count = rng.binomial(n_pairs, p)
            if count == 0:
                continue
            idx = _sample_distinct(rng, count, n_pairs)
            if r == s:
                pairs = _decode_triangular(idx, spec.n_per)
                pairs = pairs + base_r
            else:
                u = idx // spec.n_per + base_r
                v = idx % spec.n_per + s * spec.n_per
                pairs = np.column_stack([u, v])
            chunks.append(pairs)

    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    category = labels // spec.q_b
    X = np.zeros((n, spec.q_tilde), dtype=np.float64)
    X[np.arange(n), category] = 1.0
    g = from_edges(edges, X)
    return g, Partition(labels=labels, q=spec.q_star)


def realized_rates(g: AttributedGraph, truth: Partition, spec: SsbmSpec):
    """Empirical c_in and c_out implied by the drawn edge counts."""
    edges = g.edge_array()
    z = truth.labels
    intra = int((z[edges[:, 0]] == z[edges[:, 1]]).sum())
    inter = g.m - intra
    intra_pairs = spec.q_star * spec.n_per * (spec.n_per - 1) / 2.0
    inter_pairs = spec.q_star * (spec.q_star - 1) / 2.0 * spec.n_per ** 2
    c_in = g.n * intra / intra_pairs if intra_pairs else 0.0
    c_out = g.n * inter / inter_pairs if inter_pairs else 0.0
    return c_in, c_out
