"""Attributed-graph data model, file ingestion and degree statistics.

The graph is stored as a compressed adjacency: a flat, per-node-sorted
neighbor array plus an offset table, which gives O(1) neighbor iteration
in the message-passing sweeps.  Node ids are dense 0-based integers.
Graphs are immutable after load and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DataFormatError(ValueError):
    """Raised for malformed input files (message carries the line number)."""


class DegenerateGraphError(ValueError):
    """Raised when a statistic is undefined, e.g. excess degree of an edgeless graph."""


@dataclass(frozen=True)
class AttributedGraph:
    """Undirected simple graph with one real attribute vector per node.

    ``offsets``/``neighbors`` form the compressed adjacency: the neighbors
    of node i are ``neighbors[offsets[i]:offsets[i+1]]``, sorted ascending.
    """

    n: int
    m: int
    offsets: np.ndarray       # int64, shape (n+1,)
    neighbors: np.ndarray     # int64, shape (2m,)
    attributes: np.ndarray    # float64, shape (n, d)
    dropped_self_loops: int = 0
    dropped_duplicates: int = 0

    @property
    def d(self) -> int:
        return self.attributes.shape[1]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors_of(self, i: int) -> np.ndarray:
        return self.neighbors[self.offsets[i]:self.offsets[i + 1]]

    def edge_array(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = src < self.neighbors
        return np.column_stack([src[keep], self.neighbors[keep]])


@dataclass(frozen=True)
class DegreeStats:
    degrees: np.ndarray
    c: float        # mean degree 2m/n
    c_tilde: float  # excess degree <k^2>/<k> - 1


@dataclass(frozen=True)
class Partition:
    """Hard community assignment: labels[i] in [0, q)."""

    labels: np.ndarray  # int64, shape (n,)
    q: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.size and (labels.min() < 0 or labels.max() >= self.q):
            raise ValueError("partition labels out of range [0, q)")

    @property
    def n(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.q)


def build_adjacency(edges: np.ndarray, n: int):
    """Build the compressed adjacency from an (k, 2) edge array.

    Self-loops and duplicate edges are dropped (the model is binary), and
    the drop counts are returned alongside.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        bad = edges[(edges < 0).any(axis=1) | (edges >= n).any(axis=1)][0]
        raise DataFormatError(f"edge ({bad[0]}, {bad[1]}) references a node id outside [0, {n})")
    loops = edges[:, 0] == edges[:, 1]
    n_loops = int(loops.sum())
    edges = edges[~loops]
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    canon = np.unique(np.column_stack([lo, hi]), axis=0) if edges.size else edges
    n_dup = edges.shape[0] - canon.shape[0]
    m = canon.shape[0]
    directed = np.concatenate([canon, canon[:, ::-1]]) if m else np.empty((0, 2), np.int64)
    order = np.lexsort((directed[:, 1], directed[:, 0]))
    directed = directed[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(offsets, directed[:, 0] + 1, 1)
    offsets = np.cumsum(offsets)
    return offsets, directed[:, 1].copy(), m, n_loops, n_dup


def _parse_int_pair(line: str, path: str, lineno: int):
    parts = line.split()
    if len(parts) != 2:
        raise DataFormatError(f"{path}:{lineno}: expected two whitespace-separated integers, got {line!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise DataFormatError(f"{path}:{lineno}: non-integer token in {line!r}") from None


def read_edge_list(path) -> np.ndarray:
    """Read a 'u v' per-line edge file into an (k, 2) int array."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            pairs.append(_parse_int_pair(line, str(path), lineno))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def read_dense_attributes(path) -> np.ndarray:
    """Read a dense attribute CSV, row i = node i.

    An optional first line "n,d" is treated as a header when it holds
    exactly two integers and the remaining line count equals n.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not lines:
        raise DataFormatError(f"{path}: empty attribute file")

    header = None
    first = lines[0][1].split(",")
    if len(first) == 2:
        try:
            h_n, h_d = int(first[0]), int(first[1])
            if h_n == len(lines) - 1:
                header = (h_n, h_d)
        except ValueError:
            header = None
    body = lines[1:] if header else lines

    rows = []
    width = None
    for lineno, ln in body:
        parts = ln.split(",")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-numeric field in {ln!r}") from None
    X = np.asarray(rows, dtype=np.float64)
    if header and X.shape != (header[0], header[1]):
        raise DataFormatError(f"{path}: header declares {header[0]}x{header[1]}, file holds {X.shape[0]}x{X.shape[1]}")
    return X


def read_sparse_attributes(path) -> np.ndarray:
    """Read a sparse triplet attribute file: first line "n d", then "i j value"."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [(i + 1, ln.strip()) for i, ln in enumerate(fh)]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines:
        raise DataFormatError(f"{path}: empty attribute file")
    head = lines[0][1].split()
    if len(head) != 2:
        raise DataFormatError(f"{path}:{lines[0][0]}: expected header 'n d'")
    try:
        n, d = int(head[0]), int(head[1])
    except ValueError:
        raise DataFormatError(f"{path}:{lines[0][0]}: non-integer header") from None
    X = np.zeros((n, d), dtype=np.float64)
    for lineno, ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{lineno}: expected 'i j value'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: bad triplet {ln!r}") from None
        if not (0 <= i < n and 0 <= j < d):
            raise DataFormatError(f"{path}:{lineno}: index ({i}, {j}) outside {n}x{d}")
        X[i, j] = v
    return X


def load_graph(edges_path, attributes_path, fmt: str = "dense-csv") -> AttributedGraph:
    """Load an attributed graph from an edge file plus an attribute file.

    ``fmt`` selects the attribute parser: "dense-csv" or "sparse-triplet".
    The node count is declared by the attribute file; edge endpoints must
    stay below it.  Self-loops and duplicate edges are dropped, with the
    counts recorded on the returned graph.
    """
    if fmt == "dense-csv":
        X = read_dense_attributes(attributes_path)
    elif fmt == "sparse-triplet":
        X = read_sparse_attributes(attributes_path)
    else:
        raise ValueError(f"unknown attribute format {fmt!r}")
    n = X.shape[0]
    edges = read_edge_list(edges_path)
    offsets, neighbors, m, n_loops, n_dup = build_adjacency(edges, n)
    return AttributedGraph(n=n, m=m, offsets=offsets, neighbors=neighbors,
                           attributes=X, dropped_self_loops=n_loops,
                           dropped_duplicates=n_dup)


def from_edges(edges, X) -> AttributedGraph:
    """Build a graph directly from an edge array and attribute matrix."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise ValueError("attributes must be a 2-d matrix")
    offsets, neighbors, m, n_loops, n_dup = build_adjacency(np.asarray(edges), X.shape[0])
    return AttributedGraph(n=X.shape[0], m=m, offsets=offsets, neighbors=neighbors,
                           attributes=X, dropped_self_loops=n_loops,
                           dropped_duplicates=n_dup)


def save_graph(g: AttributedGraph, edges_path, attributes_path, fmt: str = "dense-csv"):
    """Write a graph back to the on-disk formats; round-trips bit-for-bit."""
    with open(edges_path, "w", encoding="utf-8") as fh:
        for u, v in g.edge_array():
            fh.write(f"{u} {v}\n")
    if fmt == "dense-csv":
        with open(attributes_path, "w", encoding="utf-8") as fh:
            fh.write(f"{g.n},{g.d}\n")
            for row in g.attributes:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
    elif fmt == "sparse-triplet":
        with open(attributes_path, "w", encoding="utf-8") as fh:
            fh.write(f"{g.n} {g.d}\n")
            for i, j in zip(*np.nonzero(g.attributes)):
                fh.write(f"{i} {j} {float(g.attributes[i, j])!r}\n")
    else:
        raise ValueError(f"unknown attribute format {fmt!r}")


def read_labels(path, n: int | None = None) -> Partition:
    """Read a ground-truth / labels file of "i label" lines."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            pairs.append(_parse_int_pair(line, str(path), lineno))
    if not pairs:
        raise DataFormatError(f"{path}: empty labels file")
    arr = np.asarray(pairs, dtype=np.int64)
    size = n if n is not None else int(arr[:, 0].max()) + 1
    labels = np.full(size, -1, dtype=np.int64)
    labels[arr[:, 0]] = arr[:, 1]
    if (labels < 0).any():
        missing = int(np.flatnonzero(labels < 0)[0])
        raise DataFormatError(f"{path}: node {missing} has no label")
    uniq = np.unique(labels)
    dense = np.searchsorted(uniq, labels)
    return Partition(labels=dense, q=uniq.size)


def write_labels(path, p: Partition):
    with open(path, "w", encoding="utf-8") as fh:
        for i, z in enumerate(p.labels):
            fh.write(f"{i} {z}\n")


def degree_stats(g: AttributedGraph) -> DegreeStats:
    """Mean degree c = 2m/n and excess degree <k^2>/<k> - 1."""
    if g.n < 1:
        raise DegenerateGraphError("degree stats need at least one node")
    k = g.degrees.astype(np.float64)
    c = 2.0 * g.m / g.n
    if g.m == 0:
        raise DegenerateGraphError("excess degree is undefined for an edgeless graph")
    c_tilde = float((k * k).sum() / k.sum() - 1.0)
    return DegreeStats(degrees=g.degrees, c=c, c_tilde=c_tilde)
