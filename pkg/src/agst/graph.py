"""Sparse undirected graphs and the symmetric normalized propagation operator."""

from __future__ import annotations

import logging

import numpy as np
from scipy import sparse

log = logging.getLogger(__name__)


def canonical_edges(pairs: np.ndarray, n: int) -> tuple[np.ndarray, int, int]:
    """Canonicalize an edge array: undirected, deduplicated, no self-loops.

    ``pairs`` is any (k, 2) integer array.  Returns (edges, n_duplicates,
    n_self_loops) where ``edges`` is (m, 2) with i < j, sorted
    lexicographically.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise ValueError(f"edge endpoint out of range [0, {n})")
    loops = pairs[:, 0] == pairs[:, 1]
    n_loops = int(loops.sum())
    pairs = pairs[~loops]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keys = lo * n + hi
    uniq = np.unique(keys)
    n_dup = keys.size - uniq.size
    edges = np.column_stack([uniq // n, uniq % n])
    return edges, n_dup, n_loops


class SparseGraph:
    """Undirected unweighted graph: canonical edge list plus CSR adjacency.

    ``edges`` is (m, 2) with i < j, no duplicates, no self-loops, sorted
    lexicographically.  The CSR arrays store both directions of every edge
    (2m entries), column indices strictly increasing within each row.
    Instances are immutable after construction.
    """

    def __init__(self, n: int, pairs: np.ndarray | list):
        if n < 1:
            raise ValueError("graph needs at least one node")
        self.n = int(n)
        edges, n_dup, n_loops = canonical_edges(
            np.asarray(pairs, dtype=np.int64).reshape(-1, 2), self.n
        )
        if n_dup or n_loops:
            log.debug("dropped %d duplicate edges, %d self-loops", n_dup, n_loops)
        self.edges = edges
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((cols, rows))
        self.indices = cols[order]
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.n), out=self.indptr[1:])

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.indptr[1:] - self.indptr[:-1]

    def edge_keys(self) -> np.ndarray:
        """Edges encoded as i*n + j (i < j), for fast membership tests."""
        return self.edges[:, 0] * self.n + self.edges[:, 1]

    def to_scipy(self) -> sparse.csr_array:
        data = np.ones(self.indices.shape[0], dtype=np.float64)
        return sparse.csr_array((data, self.indices, self.indptr), shape=(self.n, self.n))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseGraph)
            and self.n == other.n
            and np.array_equal(self.edges, other.edges)
        )


class NormalizedOperator:
    """Symmetric degree-normalized adjacency with self-loops, in CSR form.

    Entry (i, j) is 1/sqrt((d_i + 1)(d_j + 1)) for every edge of the
    self-looped adjacency, d being the degree in the plain graph.  An
    isolated node keeps a unit self-loop.
    """

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray, values: np.ndarray):
        self.n = n
        self.indptr = indptr
        self.indices = indices
        self.values = values
        self._mat = sparse.csr_array((values, indices, indptr), shape=(n, n))

    def toarray(self) -> np.ndarray:
        return self._mat.toarray()


def normalize_adjacency(graph: SparseGraph) -> NormalizedOperator:
    """Build the normalized operator of a graph (self-loops added here)."""
    n = graph.n
    deg_plus_1 = graph.degrees.astype(np.float64) + 1.0
    inv_sqrt = 1.0 / np.sqrt(deg_plus_1)
    loops = np.arange(n, dtype=np.int64)
    rows = np.concatenate([graph.edges[:, 0], graph.edges[:, 1], loops])
    cols = np.concatenate([graph.edges[:, 1], graph.edges[:, 0], loops])
    vals = inv_sqrt[rows] * inv_sqrt[cols]
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return NormalizedOperator(n, indptr, cols[order], vals[order])


def spmm(op: NormalizedOperator, dense: np.ndarray) -> np.ndarray:
    """Sparse-dense product op @ dense for an (n, c) matrix."""
    dense = np.asarray(dense, dtype=np.float64)
    if dense.ndim != 2 or dense.shape[0] != op.n:
        raise ValueError(f"expected a ({op.n}, c) matrix, got shape {dense.shape}")
    return op._mat @ dense
