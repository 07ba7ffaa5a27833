"""Feature-aspect homophily metrics and the diffusion-based h_F estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import DegenerateInput, EmptyGraph
from ..graph import Dataset, degrees

ENERGY_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureEstimate:
    raw: float
    clipped: float
    energy: float
    residual: float

    @property
    def degenerate(self) -> bool:
        return not np.isfinite(self.raw)


@dataclass
class FeatureHomophilyEstimate:
    h_F: float
    per_feature: list[FeatureEstimate]
    rho_used: float
    h_F_raw_mean: float = float("nan")

    @property
    def num_degenerate(self) -> int:
        return sum(f.degenerate for f in self.per_feature)


def _class_pair_sums(z: np.ndarray, w: np.ndarray, labels: np.ndarray, C: int) -> np.ndarray:
    """Sum over ordered same-class pairs of (z_u - z_v)(w_u - w_v), one value per column.

    Uses the per-class identity 2 n_c sum(z w) - 2 sum(z) sum(w).
    """
    n = np.bincount(labels, minlength=C).astype(np.float64)
    sz = np.zeros((C, z.shape[1]))
    sw = np.zeros((C, z.shape[1]))
    szw = np.zeros((C, z.shape[1]))
    np.add.at(sz, labels, z)
    np.add.at(sw, labels, w)
    np.add.at(szw, labels, z * w)
    return np.sum(2.0 * n[:, None] * szw - 2.0 * sz * sw, axis=0)


def estimate_feature_homophily(ds: Dataset, rho: float) -> FeatureHomophilyEstimate:
    """Per-feature least-squares inversion of the diffusion model.

    For feature m the recovered structure-agnostic column is
    ``x0(h) = x - (h / rho) A x``; ``h`` minimizes the sum over same-class
    pairs of squared differences of ``x0(h)``. The objective is quadratic, so
    ``h* = rho B / E`` in closed form. ``residual`` is the objective at the
    clipped value, over unordered pairs. Columns with ``E`` below the floor,
    or constant columns, are degenerate, report 0 and are left out of the mean.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if np.max(np.bincount(ds.labels, minlength=ds.num_classes)) < 2:
        raise DegenerateInput("feature homophily needs a class with at least two nodes")
    x = ds.features
    ax = np.asarray(ds.graph.adjacency @ x)
    C = ds.num_classes
    sxx = _class_pair_sums(x, x, ds.labels, C)
    b = _class_pair_sums(x, ax, ds.labels, C)
    e = _class_pair_sums(ax, ax, ds.labels, C)
    flat = np.ptp(x, axis=0) == 0 if x.shape[0] else np.ones(x.shape[1], bool)
    per = []
    for m in range(x.shape[1]):
        # a constant column carries no signal even when Ax varies with degree
        if e[m] < ENERGY_FLOOR or flat[m]:
            per.append(FeatureEstimate(float("nan"), 0.0, float(e[m]), float(sxx[m] / 2.0)))
            continue
        raw = rho * b[m] / e[m]
        h = min(max(raw, -1.0), 1.0)
        w = h / rho
        per.append(FeatureEstimate(float(raw), float(h), float(e[m]),
                                   float(max(sxx[m] - 2.0 * w * b[m] + w * w * e[m], 0.0) / 2.0)))
    good = [f for f in per if not f.degenerate]
    if not good:
        raise DegenerateInput("every feature column is degenerate for the h_F estimator")
    return FeatureHomophilyEstimate(float(np.mean([f.clipped for f in good])), per, float(rho),
                                    float(np.mean([f.raw for f in good])))


def _row_norms(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x, axis=1)


def _arc_cosines(ds: Dataset) -> np.ndarray:
    g, x = ds.graph, ds.features
    src, dst = g.arc_sources, g.neighbor_ids
    nrm = _row_norms(x)
    dots = np.einsum("ij,ij->i", x[src], x[dst])
    den = nrm[src] * nrm[dst]
    # zero-norm endpoint: contributes 0
    return np.divide(dots, den, out=np.zeros_like(dots), where=den > 0)


def generalized_edge_homophily(ds: Dataset) -> float:
    if ds.graph.num_edges == 0:
        raise EmptyGraph("generalized edge homophily needs at least one edge")
    # both arcs of an edge carry the same cosine
    return float(np.clip(np.mean(_arc_cosines(ds)), -1.0, 1.0))


def local_similarity(ds: Dataset, mode: str = "cos") -> float:
    """Node-averaged mean neighbor similarity (cosine, or negated Euclidean distance)."""
    g = ds.graph
    deg = degrees(g)
    active = deg > 0
    if not active.any():
        raise EmptyGraph("local similarity needs a non-isolated node")
    if mode == "cos":
        s = _arc_cosines(ds)
    elif mode == "euclidean":
        s = -np.linalg.norm(ds.features[g.arc_sources] - ds.features[g.neighbor_ids], axis=1)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    per_node = np.bincount(g.arc_sources, weights=s, minlength=g.num_nodes)
    return float(np.mean(per_node[active] / deg[active]))


@dataclass
class AttributeDetails:
    value: float
    per_feature: list
    shifted: list = field(default_factory=list)
    skipped: list = field(default_factory=list)


def attribute_homophily_details(ds: Dataset) -> AttributeDetails:
    """Mean over valid features of the feature-weighted neighbor-mean ratio.

    Columns with negative entries are shifted by their minimum; columns whose
    sum over non-isolated nodes is zero are skipped.
    """
    g = ds.graph
    deg = degrees(g)
    active = deg > 0
    if not active.any():
        raise EmptyGraph("attribute homophily needs a non-isolated node")
    x = np.array(ds.features, dtype=np.float64)
    mins = x.min(axis=0) if x.size else np.zeros(x.shape[1])
    shifted = [int(m) for m in np.flatnonzero(mins < 0)]
    x[:, shifted] -= mins[shifted]
    nbr_mean = np.asarray(g.adjacency @ x)[active] / deg[active, None]
    xa = x[active]
    tot = xa.sum(axis=0)
    valid = tot > 0
    skipped = [int(m) for m in np.flatnonzero(~valid)]
    if not valid.any():
        raise DegenerateInput("attribute homophily: every feature column sums to zero")
    per = np.full(x.shape[1], np.nan)
    per[valid] = np.sum(xa[:, valid] * nbr_mean[:, valid], axis=0) / tot[valid]
    return AttributeDetails(float(np.mean(per[valid])), [None if np.isnan(v) else float(v) for v in per],
                            shifted, skipped)


def attribute_homophily(ds: Dataset) -> float:
    return attribute_homophily_details(ds).value


def class_controlled_features(ds: Dataset) -> np.ndarray:
    C = ds.num_classes
    x = ds.features
    n = np.bincount(ds.labels, minlength=C).astype(np.float64)
    if np.any(n == 0):
        raise DegenerateInput("class-controlled features need every class to be non-empty")
    sums = np.zeros((C, x.shape[1]))
    np.add.at(sums, ds.labels, x)
    return x - (sums / n[:, None])[ds.labels]


@dataclass
class ClassControlledEstimate:
    value: float
    method: str
    reference_size: int
    se: float = 0.0
    seed: int | None = None


def _distance_row_sums(z: np.ndarray, ref: np.ndarray, chunk: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Total and per-reference-node distances from every row of ``z`` to ``z[ref]``.

    Returns ``(row_totals, dist_block)`` where ``dist_block`` is only kept
    when it is small enough to be useful for the standard error.
    """
    n = z.shape[0]
    totals = np.empty(n)
    per_ref = np.zeros((n, ref.size)) if ref.size * n <= 4_000_000 else None
    for start in range(0, n, chunk):
        d = cdist(z[start:start + chunk], z[ref])
        totals[start:start + chunk] = d.sum(axis=1)
        if per_ref is not None:
            per_ref[start:start + chunk] = d
    return totals, per_ref


def class_controlled_feature_homophily_estimate(ds: Dataset, ref_sample: int = 500, seed: int = 0,
                                                exact_limit: int = 1000) -> ClassControlledEstimate:
    """Mean over non-isolated u of the neighbor-mean gap between a neighbor's
    average distance to the reference set (minus u) and its distance to u,
    on class-controlled features.

    The reference set is every node when ``N <= exact_limit``; otherwise a
    seeded uniform sample of ``ref_sample`` nodes without replacement.
    """
    g = ds.graph
    deg = degrees(g)
    active = deg > 0
    if not active.any():
        raise EmptyGraph("class-controlled feature homophily needs a non-isolated node")
    z = class_controlled_features(ds)
    n = g.num_nodes
    if n <= exact_limit:
        ref = np.arange(n)
        method, seed_used = "exact", None
    else:
        rng = np.random.default_rng(seed)
        ref = np.sort(rng.choice(n, size=min(ref_sample, n), replace=False))
        method, seed_used = "sampled", seed
    in_ref = np.zeros(n, dtype=bool)
    in_ref[ref] = True
    totals, per_ref = _distance_row_sums(z, ref)
    src, dst = g.arc_sources, g.neighbor_ids
    d_uv = np.linalg.norm(z[src] - z[dst], axis=1)
    u_in = in_ref[src]
    size = ref.size - u_in
    d_ref = np.divide(totals[dst] - np.where(u_in, d_uv, 0.0), size,
                      out=np.zeros_like(d_uv), where=size > 0)
    per_node = np.bincount(src, weights=d_ref - d_uv, minlength=n)
    value = float(np.mean(per_node[active] / deg[active]))
    se = 0.0
    if method == "sampled" and per_ref is not None and ref.size > 1:
        # first-order contribution of each reference node to the estimate
        w = np.bincount(dst, weights=np.where(active[src], 1.0 / np.maximum(deg[src], 1), 0.0), minlength=n)
        g_r = (w @ per_ref) / active.sum()
        se = float(np.std(g_r, ddof=1) / np.sqrt(ref.size))
    return ClassControlledEstimate(value, method, int(ref.size), se, seed_used)


def class_controlled_feature_homophily(ds: Dataset, ref_sample: int = 500, seed: int = 0,
                                       exact_limit: int = 1000) -> float:
    return class_controlled_feature_homophily_estimate(ds, ref_sample, seed, exact_limit).value
