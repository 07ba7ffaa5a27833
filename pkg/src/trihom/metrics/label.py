"""Label-aspect homophily metrics.

Undirected edges are counted once; degree sums count both arc directions.
Isolated nodes are left out of node averages.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import DegenerateInput, EmptyGraph
from ..graph import Dataset, degrees


def _same_label_arcs(ds: Dataset) -> np.ndarray:
    g = ds.graph
    return ds.labels[g.arc_sources] == ds.labels[g.neighbor_ids]


def edge_homophily(ds: Dataset) -> float:
    g = ds.graph
    if g.num_edges == 0:
        raise EmptyGraph("edge homophily needs at least one edge")
    # every undirected edge appears as two arcs with the same outcome
    return float(np.count_nonzero(_same_label_arcs(ds)) / g.num_arcs)


def node_homophily(ds: Dataset) -> float:
    g = ds.graph
    deg = degrees(g)
    active = deg > 0
    if not active.any():
        raise EmptyGraph("node homophily needs a non-isolated node")
    same = np.bincount(g.arc_sources, weights=_same_label_arcs(ds), minlength=g.num_nodes)
    return float(np.mean(same[active] / deg[active]))


def class_homophily(ds: Dataset) -> float:
    g, C = ds.graph, ds.num_classes
    deg = degrees(g)
    same = np.bincount(g.arc_sources, weights=_same_label_arcs(ds), minlength=g.num_nodes)
    intra = np.bincount(ds.labels, weights=same, minlength=C)
    total = np.bincount(ds.labels, weights=deg, minlength=C)
    share = np.bincount(ds.labels, minlength=C) / g.num_nodes
    frac = np.divide(intra, total, out=np.zeros(C), where=total > 0)
    terms = np.where(total > 0, np.maximum(frac - share, 0.0), 0.0)
    return float(terms.sum() / (C - 1))


def class_degree_totals(ds: Dataset) -> np.ndarray:
    return np.bincount(ds.labels, weights=degrees(ds.graph), minlength=ds.num_classes)


def adjusted_homophily(ds: Dataset) -> float:
    g = ds.graph
    h_edge = edge_homophily(ds)
    chance = float(np.sum((class_degree_totals(ds) / g.num_arcs) ** 2))
    denom = 1.0 - chance
    if abs(denom) < 1e-15:
        raise DegenerateInput("adjusted homophily undefined: a single class carries every edge end")
    return (h_edge - chance) / denom


def class_edge_counts(ds: Dataset) -> np.ndarray:
    """C x C matrix of undirected edge counts between classes (diagonal = intra)."""
    C = ds.num_classes
    e = ds.graph.edge_array()
    a, b = ds.labels[e[:, 0]], ds.labels[e[:, 1]]
    m = np.zeros((C, C))
    np.add.at(m, (a, b), 1.0)
    return m + m.T - np.diag(np.diag(m))


def density_aware_homophily(ds: Dataset) -> float:
    """(1 + min_c(intra density_c - max inter density_c)) / 2.

    The inter density of a class is its largest density of edges towards
    any other single class.
    """
    C = ds.num_classes
    n = np.bincount(ds.labels, minlength=C).astype(np.float64)
    if np.any(n < 2):
        raise DegenerateInput("density-aware homophily needs at least two nodes per class")
    counts = class_edge_counts(ds)
    intra = np.diag(counts) / (n * (n - 1) / 2.0)
    inter = counts / np.outer(n, n)
    np.fill_diagonal(inter, -np.inf)
    gap = intra - inter.max(axis=1)
    return float((1.0 + gap.min()) / 2.0)


def _bool_adjacency(ds: Dataset) -> sp.csr_matrix:
    a = ds.graph.adjacency.astype(bool)
    return a.tocsr()


def _hop_sets(ds: Dataset, k: int, exact_two: bool) -> sp.csr_matrix:
    """Boolean reachability without the diagonal.

    ``exact_two`` gives neighbors-of-neighbors; otherwise all nodes within
    ``k`` hops.
    """
    a = _bool_adjacency(ds)
    if exact_two:
        r = (a @ a).astype(bool)
    else:
        r = a.copy()
        frontier = a
        for _ in range(k - 1):
            frontier = (frontier @ a).astype(bool)
            r = (r + frontier).astype(bool)
    r = r.tocoo()
    off = r.row != r.col
    n = ds.num_nodes
    return sp.csr_matrix((np.ones(int(off.sum())), (r.row[off], r.col[off])), shape=(n, n))


def two_hop_class_similarity(ds: Dataset, literal_denominator: bool = False) -> float:
    """Same-label fraction among each node's two-hop set.

    The two-hop set is the union of the neighbors' neighbor lists minus the
    node itself. ``literal_denominator`` divides by the node degree instead of
    the set size (the value can then exceed 1).
    """
    r = _hop_sets(ds, 2, exact_two=True)
    size = np.asarray(r.sum(axis=1)).ravel()
    by_class = np.asarray(r @ ds.one_hot)
    same_counts = by_class[np.arange(ds.num_nodes), ds.labels]
    if literal_denominator:
        deg = degrees(ds.graph)
        active = deg > 0
        if not active.any():
            raise EmptyGraph("no non-isolated node")
        return float(np.mean(same_counts[active] / deg[active]))
    active = size > 0
    if not active.any():
        raise EmptyGraph("no node has a non-empty two-hop set")
    return float(np.mean(same_counts[active] / size[active]))


def neighbor_homophily(ds: Dataset, k: int = 2) -> float:
    """Mean dominant-class fraction over each node's within-k-hop set."""
    if k < 1:
        raise ValueError("k must be >= 1")
    r = _hop_sets(ds, k, exact_two=False)
    by_class = np.asarray(r @ ds.one_hot)
    size = by_class.sum(axis=1)
    active = size > 0
    if not active.any():
        raise EmptyGraph("no node has a non-empty k-hop set")
    return float(np.mean(by_class[active].max(axis=1) / size[active]))
