"""CSBM-3H: stochastic block graphs with controlled label, structural and
feature homophily, plus the linear feature-diffusion solver."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import DegenerateGraph, NonConvergence
from .graph import Dataset, Graph, degrees, spectral_radius


@dataclass(frozen=True)
class Csbm3hParams:
    h_L: float
    h_S: float
    h_F: float
    num_nodes: int = 1000
    num_classes: int = 3
    degree_range: tuple[int, int] = (1, 10)
    class_means: np.ndarray | None = None
    class_vars: np.ndarray | None = None
    seed: int = 0
    diffusion_power: int = 1
    diffusion_tol: float = 1e-10
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0.0 <= self.h_L <= 1.0 and 0.0 <= self.h_S <= 1.0):
            raise ValueError("h_L and h_S must lie in [0, 1]")
        if not abs(self.h_F) < 1.0:
            raise ValueError("|h_F| must be < 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        d_min, d_max = self.degree_range
        if d_min < 1 or d_max < d_min or d_max >= self.num_nodes:
            raise ValueError("degree_range must satisfy 1 <= d_min <= d_max < N")
        if self.diffusion_power not in (1, 2):
            raise ValueError("diffusion_power must be 1 or 2")
        mu = default_class_means(self.num_classes) if self.class_means is None else self.class_means
        mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
        var = np.ones_like(mu) if self.class_vars is None else self.class_vars
        var = np.broadcast_to(np.asarray(var, dtype=np.float64), mu.shape).copy()
        if mu.shape[0] != self.num_classes:
            raise ValueError("class_means must have one row per class")
        if np.any(var < 0):
            raise ValueError("class_vars must be non-negative")
        mu.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "class_means", mu)
        object.__setattr__(self, "class_vars", var)
        object.__setattr__(self, "degree_range", (int(d_min), int(d_max)))

    @property
    def feature_dim(self) -> int:
        return int(self.class_means.shape[1])

    def with_targets(self, h_L: float, h_S: float, h_F: float, seed: int) -> "Csbm3hParams":
        return replace(self, h_L=h_L, h_S=h_S, h_F=h_F, seed=seed)


def default_class_means(num_classes: int) -> np.ndarray:
    """One-hot class means (M = C)."""
    return np.eye(num_classes)


@dataclass(frozen=True, eq=False)
class GeneratedGraph:
    dataset: Dataset
    realized_degrees: np.ndarray
    omega: float
    rho_used: float
    structural_agnostic: np.ndarray = field(repr=False)
    target_neighbor_dist: np.ndarray = field(repr=False)


def _base_sampling_matrix(h_L: float, C: int) -> np.ndarray:
    off = (1.0 - h_L) / (C - 1)
    return off * np.ones((C, C)) + (h_L - off) * np.eye(C)


def _legalize_rows(rows: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and renormalize; an all-zero row falls back to ``fallback``."""
    rows = np.clip(rows, 0.0, 1.0)
    sums = rows.sum(axis=1, keepdims=True)
    dead = sums[:, 0] <= 0.0
    if np.any(dead):
        rows[dead] = fallback[dead]
        sums[dead] = rows[dead].sum(axis=1, keepdims=True)
    return rows / sums


def class_sampling_matrix(h_L: float, h_S: float, C: int, rng: np.random.Generator) -> np.ndarray:
    base = _base_sampling_matrix(h_L, C)
    noise = rng.normal(0.0, (1.0 - h_S) / np.sqrt(C - 1), size=(C, C)) if h_S < 1.0 else 0.0
    return _legalize_rows(base + noise, base)


@lru_cache(maxsize=4)
def _upper_flat_indices(n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, k=1)
    flat = iu * n + ju
    flat.setflags(write=False)
    return flat


def generate_topology(params: Csbm3hParams,
                      rng: np.random.Generator) -> tuple[Graph, np.ndarray, np.ndarray, np.ndarray]:
    """Sample labels, target degrees, per-node neighbor distributions and edges.

    Returns ``(graph, labels, target_neighbor_dist, target_degrees)``.
    """
    N, C = params.num_nodes, params.num_classes
    d_min, d_max = params.degree_range
    labels = rng.integers(0, C, size=N)
    target_deg = rng.integers(d_min, d_max + 1, size=N).astype(np.float64)

    base = _base_sampling_matrix(params.h_L, C)[labels]
    if params.h_S < 1.0:
        noise = rng.normal(0.0, (1.0 - params.h_S) / np.sqrt(C - 1), size=(N, C))
        dist = _legalize_rows(base + noise, base)
    else:
        dist = base

    sq = np.sqrt(target_deg)
    # A_p[u, v] = (C/N) sqrt(d_u d_v) D[u, Y_v], clamped, then averaged with its transpose
    ap = (C / N) * np.outer(sq, sq) * dist[:, labels]
    np.clip(ap, 0.0, 1.0, out=ap)
    flat = _upper_flat_indices(N)
    p = np.take((ap + ap.T).ravel(), flat)
    p *= 0.5
    keep = np.flatnonzero(rng.random(p.size) < p)
    kept = flat[keep]
    pairs = np.stack([kept // N, kept % N], axis=1)
    if pairs.shape[0] == 0:
        raise DegenerateGraph("sampled graph has no edges")
    graph = Graph._from_unique_pairs(N, pairs)
    return graph, labels, dist, target_deg


def sample_structural_agnostic_features(labels: np.ndarray, class_means: np.ndarray, class_vars: np.ndarray,
                                        rng: np.random.Generator) -> np.ndarray:
    mu = np.asarray(class_means, dtype=np.float64)[labels]
    sd = np.sqrt(np.asarray(class_vars, dtype=np.float64))[labels]
    return mu + sd * rng.standard_normal(mu.shape)


def solve_feature_diffusion(graph: Graph, omega: float, x0: np.ndarray, tol: float = 1e-10,
                            max_terms: int = 10_000) -> np.ndarray:
    """Solve ``(I - omega A) X = X0`` by the Neumann series.

    Summation stops at the first term whose max-norm falls below ``tol``;
    that term is exactly the residual of the partial sum, so the returned
    matrix satisfies ``||(I - omega A) X - X0||_inf < tol``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    out = x0.copy()
    if omega == 0.0 or graph.num_arcs == 0:
        return out
    adj = graph.adjacency
    term = x0
    for _ in range(max_terms):
        term = omega * (adj @ term)
        if np.max(np.abs(term), initial=0.0) < tol:
            return out
        out += term
    raise NonConvergence(max_terms, f"Neumann series did not reach tol={tol} within {max_terms} terms")


def diffusion_residual(graph: Graph, omega: float, x: np.ndarray, x0: np.ndarray) -> float:
    return float(np.max(np.abs(x - omega * (graph.adjacency @ x) - x0), initial=0.0))


def generate(params: Csbm3hParams) -> GeneratedGraph:
    rng = np.random.default_rng(params.seed)
    graph, labels, dist, _ = generate_topology(params, rng)
    rho = spectral_radius(graph)
    omega = params.h_F / rho
    x0 = sample_structural_agnostic_features(labels, params.class_means, params.class_vars, rng)
    x = x0
    for _ in range(params.diffusion_power):
        x = solve_feature_diffusion(graph, omega, x, params.diffusion_tol, params.max_terms)
    info = {
        "generator": {
            "targets": {"h_L": params.h_L, "h_S": params.h_S, "h_F": params.h_F},
            "rho": rho,
            "omega": omega,
            "seed": int(params.seed),
            "num_nodes": params.num_nodes,
            "num_classes": params.num_classes,
            "degree_range": list(params.degree_range),
            "diffusion_power": params.diffusion_power,
        }
    }
    ds = Dataset(graph, labels, params.num_classes, x, info)
    return GeneratedGraph(ds, degrees(graph), omega, rho, x0, dist)
