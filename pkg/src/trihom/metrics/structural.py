"""Structural-aspect homophily: structural homophily h_S, label
informativeness, neighborhood similarity and aggregation homophily."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateInput, EmptyGraph
from ..graph import Dataset, neighbor_distribution
from .label import class_edge_counts

TIE_TOL = 1e-12


def structural_homophily_from_rows(rows: np.ndarray, labels: np.ndarray, num_classes: int,
                                   include: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Class-wise dispersion of neighbor-distribution rows.

    For class c, ``sigma_c`` is the root mean (over the C entries) of the
    per-entry population variance across the class's rows, and
    ``h_S,c = clip(1 - sigma_c * sqrt(C - 1), 0, 1)``. Classes with fewer than
    two included rows are skipped (NaN in the per-class array).
    """
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels)
    C = int(num_classes)
    if C < 2:
        raise ValueError("at least two classes are required")
    if include is None:
        include = np.ones(len(labels), dtype=bool)
    sigma_max = 1.0 / np.sqrt(C - 1)
    per_class = np.full(C, np.nan)
    skipped = []
    for c in range(C):
        sel = rows[include & (labels == c)]
        if sel.shape[0] < 2:
            skipped.append(c)
            continue
        sigma = np.sqrt(np.mean(np.var(sel, axis=0)))
        per_class[c] = min(max(1.0 - sigma / sigma_max, 0.0), 1.0)
    if skipped:
        warnings.warn(f"structural homophily skips classes {skipped}: fewer than two non-isolated nodes",
                      RuntimeWarning, stacklevel=2)
    if np.all(np.isnan(per_class)):
        raise DegenerateInput("no class has two or more non-isolated nodes")
    return float(np.nanmean(per_class)), per_class


def structural_homophily(ds: Dataset) -> tuple[float, np.ndarray]:
    nd = neighbor_distribution(ds)
    return structural_homophily_from_rows(nd.rows, ds.labels, ds.num_classes, ~nd.isolated_mask)


def edge_class_distribution(ds: Dataset) -> np.ndarray:
    """Symmetric C x C distribution of (class of u, class of v) over arcs."""
    m = class_edge_counts(ds)
    arcs = m + np.diag(np.diag(m))
    total = arcs.sum()
    if total == 0:
        raise EmptyGraph("label informativeness needs at least one edge")
    return arcs / total


def _xlogx_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(np.sum(p * np.log(p)))


def label_informativeness(ds: Dataset, literal: bool = False) -> float:
    """2 - sum p log p / sum pbar log pbar (natural log).

    ``literal`` drops the ``p`` weight in the numerator sum.
    """
    p = edge_class_distribution(ds)
    pbar = p.sum(axis=1)
    denom = _xlogx_sum(pbar)
    if denom == 0.0:
        raise DegenerateInput("label informativeness undefined for a single effective class")
    if literal:
        num = float(np.sum(np.log(p[p > 0])))
    else:
        num = _xlogx_sum(p)
    return 2.0 - num / denom


@dataclass
class SimilarityEstimate:
    value: float
    intra_mean: float
    inter_mean: float
    method: str
    intra_pairs: int
    inter_pairs: int
    intra_se: float = 0.0
    inter_se: float = 0.0
    seed: int | None = None


def _unit_rows(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    nd = neighbor_distribution(ds)
    keep = ~nd.isolated_mask
    r = nd.rows[keep]
    r = r / np.linalg.norm(r, axis=1, keepdims=True)
    return r, ds.labels[keep]


def sample_class_pairs(labels: np.ndarray, n_pairs: int, intra: bool, rng: np.random.Generator):
    """Uniform sample of unordered distinct pairs, intra- or inter-class."""
    n = len(labels)
    out_u, out_v = [], []
    got = 0
    if intra:
        classes, counts = np.unique(labels, return_counts=True)
        weights = counts * (counts - 1) / 2.0
        if weights.sum() == 0:
            return np.empty(0, int), np.empty(0, int)
        members = [np.flatnonzero(labels == c) for c in classes]
        cls = rng.choice(len(classes), size=n_pairs, p=weights / weights.sum())
        u = np.empty(n_pairs, int)
        v = np.empty(n_pairs, int)
        for i, mem in enumerate(members):
            sel = np.flatnonzero(cls == i)
            if sel.size == 0:
                continue
            a = rng.integers(0, len(mem), sel.size)
            b = rng.integers(0, len(mem) - 1, sel.size)
            b = b + (b >= a)
            u[sel], v[sel] = mem[a], mem[b]
        return u, v
    while got < n_pairs:
        a = rng.integers(0, n, 2 * (n_pairs - got) + 16)
        b = rng.integers(0, n, a.size)
        ok = labels[a] != labels[b]
        a, b = a[ok], b[ok]
        out_u.append(a)
        out_v.append(b)
        got += a.size
    return np.concatenate(out_u)[:n_pairs], np.concatenate(out_v)[:n_pairs]


def neighborhood_similarity_estimate(ds: Dataset, max_pairs: int = 200_000, seed: int = 0,
                                     exact_limit: int | None = None) -> SimilarityEstimate:
    """Ratio of mean intra-class to mean inter-class cosine similarity of
    neighbor distributions (isolated nodes excluded).

    The exact all-pairs value is computed from per-class sums of unit rows in
    O(N C). Pair sampling is used only when ``exact_limit`` is set and the
    number of rows exceeds it.
    """
    r, y = _unit_rows(ds)
    n = len(y)
    if len(np.unique(y)) < 2:
        raise DegenerateInput("neighborhood similarity needs two classes with non-isolated nodes")
    if exact_limit is None or n <= exact_limit:
        C = ds.num_classes
        sums = np.zeros((C, r.shape[1]))
        np.add.at(sums, y, r)
        self_sim = np.bincount(y, weights=np.einsum("ij,ij->i", r, r), minlength=C)
        counts = np.bincount(y, minlength=C).astype(np.float64)
        intra_sum = float(np.sum((np.einsum("ij,ij->i", sums, sums) - self_sim) / 2.0))
        total_vec = sums.sum(axis=0)
        all_sum = (float(total_vec @ total_vec) - float(self_sim.sum())) / 2.0
        intra_pairs = int(np.sum(counts * (counts - 1) / 2))
        inter_pairs = int(n * (n - 1) // 2 - intra_pairs)
        if intra_pairs == 0:
            raise DegenerateInput("no intra-class pair")
        intra_mean = intra_sum / intra_pairs
        inter_mean = (all_sum - intra_sum) / inter_pairs
        est = SimilarityEstimate(np.nan, intra_mean, inter_mean, "exact", intra_pairs, inter_pairs)
    else:
        rng = np.random.default_rng(seed)
        ui, vi = sample_class_pairs(y, max_pairs, True, rng)
        uo, vo = sample_class_pairs(y, max_pairs, False, rng)
        ci = np.einsum("ij,ij->i", r[ui], r[vi])
        co = np.einsum("ij,ij->i", r[uo], r[vo])
        est = SimilarityEstimate(np.nan, float(ci.mean()), float(co.mean()), "sampled", ci.size, co.size,
                                 float(ci.std(ddof=1) / np.sqrt(ci.size)), float(co.std(ddof=1) / np.sqrt(co.size)),
                                 seed)
    if abs(est.inter_mean) < 1e-15:
        raise DegenerateInput("mean inter-class cosine similarity is zero")
    est.value = est.intra_mean / est.inter_mean
    return est


def neighborhood_similarity(ds: Dataset, max_pairs: int = 200_000, seed: int = 0,
                            exact_limit: int | None = None) -> float:
    return neighborhood_similarity_estimate(ds, max_pairs, seed, exact_limit).value


def aggregation_homophily(ds: Dataset) -> float:
    """Share of nodes whose mean intra-class aggregation similarity
    (``D_u . D_v``) is at least the inter-class one; ties count as satisfied.

    Isolated nodes are excluded on both sides of the comparison.
    """
    nd = neighbor_distribution(ds)
    keep = ~nd.isolated_mask
    if not keep.any():
        raise EmptyGraph("no non-isolated node")
    rows, y, C = nd.rows[keep], ds.labels[keep], ds.num_classes
    sums = np.zeros((C, C))
    np.add.at(sums, y, rows)
    counts = np.bincount(y, minlength=C).astype(np.float64)
    total = sums.sum(axis=0)
    own = sums[y]
    n_in = counts[y]
    n_out = len(y) - n_in
    intra = np.einsum("ij,ij->i", rows, own) / n_in
    inter_dot = np.einsum("ij,ij->i", rows, total[None, :] - own)
    inter = np.divide(inter_dot, n_out, out=np.zeros_like(inter_dot), where=n_out > 0)
    return float(np.mean(intra >= inter - TIE_TOL))


@dataclass
class StructuralReport:
    h_S: float
    per_class_h_S: list
    LI: float
    h_NS: float
    h_agg: float
    sampling_meta: dict = field(default_factory=dict)


def structural_report(ds: Dataset, max_pairs: int = 200_000, seed: int = 0,
                      exact_limit: int | None = None, literal_li: bool = False) -> StructuralReport:
    h_s, per_class = structural_homophily(ds)
    ns = neighborhood_similarity_estimate(ds, max_pairs, seed, exact_limit)
    meta = {"method": ns.method, "intra_pairs": ns.intra_pairs, "inter_pairs": ns.inter_pairs,
            "seed": ns.seed, "intra_se": ns.intra_se, "inter_se": ns.inter_se}
    return StructuralReport(h_s, [None if np.isnan(v) else float(v) for v in per_class],
                            label_informativeness(ds, literal_li), ns.value, aggregation_homophily(ds), meta)
