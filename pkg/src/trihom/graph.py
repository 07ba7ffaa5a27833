"""Immutable graph and dataset containers.

Graphs are undirected and simple, stored in CSR form with both arc directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import NonConvergence


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def normalize_edges(num_nodes: int, edges) -> tuple[np.ndarray, dict]:
    """Canonicalize an undirected edge list.

    Returns an (E, 2) array of unique pairs with ``u < v`` sorted
    lexicographically, and the counts of what was removed.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= num_nodes):
        raise ValueError(f"edge endpoint outside [0, {num_nodes})")
    loops = e[:, 0] == e[:, 1]
    e = e[~loops]
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    keys = np.unique(lo * num_nodes + hi)
    pairs = np.stack([keys // num_nodes, keys % num_nodes], axis=1) if keys.size else np.empty((0, 2), np.int64)
    counts = {
        "self_loops_removed": int(loops.sum()),
        "duplicates_removed": int(len(e) - len(keys)),
    }
    return pairs, counts


@dataclass(frozen=True, eq=False)
class Graph:
    num_nodes: int
    row_offsets: np.ndarray
    neighbor_ids: np.ndarray

    def __post_init__(self):
        ro = np.asarray(self.row_offsets, dtype=np.int64)
        nb = np.asarray(self.neighbor_ids, dtype=np.int64)
        n = int(self.num_nodes)
        if n < 0 or ro.shape != (n + 1,):
            raise ValueError("row_offsets must have length num_nodes + 1")
        if ro[0] != 0 or np.any(np.diff(ro) < 0) or ro[-1] != nb.size:
            raise ValueError("row_offsets must start at 0, be non-decreasing and end at len(neighbor_ids)")
        if nb.size:
            if nb.min() < 0 or nb.max() >= n:
                raise ValueError("neighbor id out of range")
            rows = np.repeat(np.arange(n), np.diff(ro))
            if np.any(rows == nb):
                raise ValueError("self-loops are not allowed")
            # strictly increasing inside each row
            same_row = rows[1:] == rows[:-1]
            if np.any(nb[1:][same_row] <= nb[:-1][same_row]):
                raise ValueError("neighbor lists must be strictly increasing")
            fwd = rows * n + nb
            rev = nb * n + rows
            if not np.array_equal(np.sort(fwd), np.sort(rev)):
                raise ValueError("adjacency is not symmetric")
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "row_offsets", _frozen(ro))
        object.__setattr__(self, "neighbor_ids", _frozen(nb))

    @classmethod
    def from_edges(cls, num_nodes: int, edges, *, strict: bool = True) -> "Graph":
        """Build from undirected ``(u, v)`` pairs.

        With ``strict`` (the default) self-loops and repeated edges raise
        ``ValueError``; otherwise they are dropped silently. Use
        :func:`normalize_edges` to obtain the counts.
        """
        pairs, counts = normalize_edges(num_nodes, edges)
        if strict and (counts["self_loops_removed"] or counts["duplicates_removed"]):
            raise ValueError(f"graph is not simple: {counts}")
        return cls._from_unique_pairs(num_nodes, pairs)

    @classmethod
    def _from_unique_pairs(cls, num_nodes: int, pairs: np.ndarray) -> "Graph":
        u = np.concatenate([pairs[:, 0], pairs[:, 1]])
        v = np.concatenate([pairs[:, 1], pairs[:, 0]])
        order = np.lexsort((v, u))
        u, v = u[order], v[order]
        offsets = np.zeros(num_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(u, minlength=num_nodes), out=offsets[1:])
        return cls(num_nodes, offsets, v)

    @classmethod
    def from_adjacency(cls, adj) -> "Graph":
        """Build from a symmetric 0/1 sparse or dense matrix (upper triangle is read)."""
        a = sp.triu(sp.csr_matrix(adj), k=1).tocoo()
        pairs = np.stack([a.row, a.col], axis=1).astype(np.int64)
        return cls._from_unique_pairs(a.shape[0], pairs)

    @property
    def num_arcs(self) -> int:
        return int(self.neighbor_ids.size)

    @property
    def num_edges(self) -> int:
        return self.num_arcs // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.neighbor_ids[self.row_offsets[u]:self.row_offsets[u + 1]]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.num_arcs, dtype=np.float64)
        a = sp.csr_matrix((data, self.neighbor_ids, self.row_offsets), shape=(self.num_nodes, self.num_nodes))
        a.has_sorted_indices = True
        return a

    @cached_property
    def arc_sources(self) -> np.ndarray:
        return _frozen(np.repeat(np.arange(self.num_nodes), np.diff(self.row_offsets)))

    def edge_array(self) -> np.ndarray:
        """Each undirected edge once, as ``(u, v)`` with ``u < v``."""
        src = self.arc_sources
        keep = src < self.neighbor_ids
        return np.stack([src[keep], self.neighbor_ids[keep]], axis=1)


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: Graph
    labels: np.ndarray
    num_classes: int
    features: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.labels, dtype=np.int64)
        n = self.graph.num_nodes
        if y.shape != (n,):
            raise ValueError(f"labels must have shape ({n},), got {y.shape}")
        c = int(self.num_classes)
        if y.size and (y.min() < 0 or y.max() >= c):
            raise ValueError(f"class ids must lie in [0, {c})")
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(n, -1) if n else x.reshape(0, 0)
        if x.ndim != 2 or x.shape[0] != n:
            raise ValueError("features must have one row per node")
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "num_classes", c)
        object.__setattr__(self, "features", _frozen(x))

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @cached_property
    def one_hot(self) -> np.ndarray:
        z = np.zeros((self.num_nodes, self.num_classes))
        z[np.arange(self.num_nodes), self.labels] = 1.0
        return _frozen(z)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(self.graph, self.labels, self.num_classes, features, dict(self.info))


@dataclass(frozen=True, eq=False)
class NeighborDistribution:
    rows: np.ndarray
    isolated_mask: np.ndarray


def degrees(graph: Graph) -> np.ndarray:
    return np.diff(graph.row_offsets)


def neighbor_distribution(dataset: Dataset) -> NeighborDistribution:
    """Per-node class proportions among neighbors; isolated nodes get a zero row."""
    if dataset.num_classes < 2:
        raise ValueError("at least two classes are required")
    counts = np.asarray(dataset.graph.adjacency @ dataset.one_hot)
    deg = degrees(dataset.graph)
    isolated = deg == 0
    rows = np.zeros_like(counts)
    rows[~isolated] = counts[~isolated] / deg[~isolated, None]
    return NeighborDistribution(_frozen(rows), _frozen(isolated))


def _component_radius(adj: sp.csr_matrix, tol: float, max_iter: int) -> float:
    n = adj.shape[0]
    x = np.full(n, 1.0 / np.sqrt(n))
    lam_prev = None
    delta_prev = None
    for it in range(1, max_iter + 1):
        y = adj @ x
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
        if lam_prev is not None:
            delta = abs(lam - lam_prev)
            scale = tol * max(1.0, lam)
            if delta <= scale:
                # geometric tail estimate from the last two increments
                if delta == 0.0 or delta_prev is None:
                    return lam
                ratio = delta / delta_prev if delta_prev > 0 else 0.0
                if ratio < 1.0 and delta * ratio / (1.0 - ratio) <= scale:
                    return lam
            delta_prev = delta
        lam_prev = lam
    raise NonConvergence(max_iter)


def spectral_radius(graph: Graph, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest adjacency eigenvalue magnitude by power iteration.

    The estimate is ``||A x||`` for the unit iterate ``x``, which converges to
    the spectral radius even on bipartite components where the Rayleigh
    quotient of ``A`` itself does not. Each connected component is iterated
    separately (all-ones start) so near-equal disjoint blocks do not stall
    convergence.
    """
    if graph.num_nodes < 1:
        raise ValueError("graph has no nodes")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if graph.num_arcs == 0:
        return 0.0
    adj = graph.adjacency
    deg = degrees(graph)
    ncomp, comp = connected_components(adj, directed=False)
    comp_maxdeg = np.zeros(ncomp, dtype=np.int64)
    np.maximum.at(comp_maxdeg, comp, deg)
    best = 0.0
    for c in np.argsort(-comp_maxdeg, kind="stable"):
        # rho of a component is bounded by its max degree
        if comp_maxdeg[c] == 0 or comp_maxdeg[c] <= best:
            break
        idx = np.flatnonzero(comp == c)
        sub = adj if idx.size == graph.num_nodes else adj[idx][:, idx]
        best = max(best, _component_radius(sub, tol, max_iter))
    return best
