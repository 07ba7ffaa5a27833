"""Train/val/test splits, a nearest-centroid probe and the CSBM-3H sweep driver."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .csbm3h import Csbm3hParams, generate
from .errors import MissingClass, TooFewNodes, TriHomError
from .metrics.feature import estimate_feature_homophily
from .metrics.label import node_homophily
from .metrics.structural import structural_homophily
from .model import aggregate_representations, empirical_J, j_h_agnostic, j_h_aware

DEFAULT_RATIOS = (0.5, 0.25, 0.25)


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int

    def part(self, name: str) -> np.ndarray:
        if name not in ("train", "val", "test"):
            raise ValueError(f"unknown split part {name!r}")
        return getattr(self, name)


def make_split(num_nodes: int, ratios=DEFAULT_RATIOS, seed: int = 0) -> Split:
    """Seeded shuffle, then contiguous cut; train and val sizes are rounded half up."""
    r = np.asarray(ratios, dtype=np.float64)
    if r.shape != (3,) or np.any(r <= 0) or abs(r.sum() - 1.0) > 1e-9:
        raise ValueError("ratios must be three positive numbers summing to 1")
    n_train = int(np.floor(r[0] * num_nodes + 0.5))
    n_val = int(np.floor(r[1] * num_nodes + 0.5))
    n_test = num_nodes - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise TooFewNodes(f"{num_nodes} nodes cannot fill a {tuple(ratios)} split")
    perm = np.random.default_rng(seed).permutation(num_nodes)
    return Split(np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
                 np.sort(perm[n_train + n_val:]), int(seed))


def centroid_classify(representations: np.ndarray, labels: np.ndarray, split: Split,
                      num_classes: int | None = None, part: str = "test") -> float:
    z = np.asarray(representations, dtype=np.float64)
    y = np.asarray(labels)
    C = int(num_classes if num_classes is not None else y.max() + 1)
    tr = split.train
    counts = np.bincount(y[tr], minlength=C)
    if np.any(counts == 0):
        raise MissingClass(f"classes {np.flatnonzero(counts == 0).tolist()} have no training node")
    centroids = np.zeros((C, z.shape[1]))
    np.add.at(centroids, y[tr], z[tr])
    centroids /= counts[:, None]
    ev = split.part(part)
    d = np.sum((z[ev, None, :] - centroids[None, :, :]) ** 2, axis=2)
    # argmin returns the first minimum, so ties go to the lowest class id
    return float(np.mean(np.argmin(d, axis=1) == y[ev]))


@dataclass
class SweepRecord:
    h_L_target: float
    h_S_target: float
    h_F_target: float
    seed: int
    point_index: int
    h_L_measured: float = float("nan")
    h_S_measured: float = float("nan")
    h_F_measured: float = float("nan")
    rho: float = float("nan")
    J_emp_aware: float = float("nan")
    J_emp_agnostic: float = float("nan")
    Jh_theory_aware: float = float("nan")
    Jh_theory_agnostic: float = float("nan")
    Jh_target_aware: float = float("nan")
    Jh_target_agnostic: float = float("nan")
    acc_aware: float = float("nan")
    acc_agnostic: float = float("nan")
    flags: dict = field(default_factory=dict)


def _theory(h_L, h_S, h_F, C, rho) -> tuple[float, float]:
    p = SimpleNamespace(h_L=h_L, h_S=h_S, h_F=h_F, C=C, rho=rho)
    with np.errstate(all="ignore"):
        return float(j_h_aware(p)), float(j_h_agnostic(p))


def _guard(rec: SweepRecord, name: str, fn):
    try:
        return fn()
    except (TriHomError, FloatingPointError, ValueError) as e:
        rec.flags[name] = f"{type(e).__name__}: {e}"
        return None


def stream_seeds(seed: int, point_index: int) -> tuple[int, int]:
    """Generator and split seeds owned by one (seed, grid point) pair."""
    gen_ss, split_ss = np.random.SeedSequence([int(seed), int(point_index)]).spawn(2)
    return int(gen_ss.generate_state(1, np.uint64)[0]), int(split_ss.generate_state(1, np.uint64)[0])


def run_point(template: Csbm3hParams, h_L: float, h_S: float, h_F: float, seed: int, point_index: int,
              ratios=DEFAULT_RATIOS, part: str = "test") -> SweepRecord:
    rec = SweepRecord(h_L, h_S, h_F, int(seed), point_index)
    gen_seed, split_seed = stream_seeds(seed, point_index)
    out = _guard(rec, "generate", lambda: generate(template.with_targets(h_L, h_S, h_F, gen_seed)))
    if out is None:
        return rec
    ds = out.dataset
    C = ds.num_classes
    rec.rho = out.rho_used
    rec.Jh_target_aware, rec.Jh_target_agnostic = _theory(h_L, h_S, h_F, C, rec.rho)
    v = _guard(rec, "h_L", lambda: node_homophily(ds))
    if v is not None:
        rec.h_L_measured = v
    v = _guard(rec, "h_S", lambda: structural_homophily(ds)[0])
    if v is not None:
        rec.h_S_measured = v
    v = _guard(rec, "h_F", lambda: estimate_feature_homophily(ds, rec.rho).h_F)
    if v is not None:
        rec.h_F_measured = v
    if np.isfinite([rec.h_L_measured, rec.h_S_measured, rec.h_F_measured]).all():
        rec.Jh_theory_aware, rec.Jh_theory_agnostic = _theory(rec.h_L_measured, rec.h_S_measured,
                                                              rec.h_F_measured, C, rec.rho)
    else:
        rec.flags["Jh_theory"] = "measured point incomplete"
    for name in ("Jh_theory_aware", "Jh_theory_agnostic", "Jh_target_aware", "Jh_target_agnostic"):
        if not np.isfinite(getattr(rec, name)) and name not in rec.flags:
            setattr(rec, name, float("nan"))
            rec.flags.setdefault(name, "non-finite")
    h = aggregate_representations(ds)
    v = _guard(rec, "J_emp_aware", lambda: empirical_J(ds, "aware"))
    if v is not None:
        rec.J_emp_aware = v
    v = _guard(rec, "J_emp_agnostic", lambda: empirical_J(ds, "agnostic"))
    if v is not None:
        rec.J_emp_agnostic = v
    split = _guard(rec, "split", lambda: make_split(ds.num_nodes, ratios, split_seed))
    if split is not None:
        v = _guard(rec, "acc_aware", lambda: centroid_classify(h, ds.labels, split, C, part))
        if v is not None:
            rec.acc_aware = v
        v = _guard(rec, "acc_agnostic", lambda: centroid_classify(ds.features, ds.labels, split, C, part))
        if v is not None:
            rec.acc_agnostic = v
    return rec


def sweep_points(h_L_grid, h_S_grid, h_F_grid):
    """Grid points in sweep order: h_L outermost, then h_S, then h_F."""
    return list(itertools.product(h_L_grid, h_S_grid, h_F_grid))


def _run_task(args):
    return run_point(*args)


def run_sweep(h_L_grid, h_S_grid, h_F_grid, gen_template: Csbm3hParams, seeds,
              ratios=DEFAULT_RATIOS, part: str = "test", workers: int = 1) -> list[SweepRecord]:
    """One record per (grid point, seed), ordered by grid index then seed.

    Every record owns a random stream derived from ``(seed, point index)``, so
    the output does not depend on ``workers`` or execution order.
    """
    points = sweep_points(h_L_grid, h_S_grid, h_F_grid)
    if not points:
        raise ValueError("sweep grid is empty")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("at least one seed is required")
    tasks = [(gen_template, float(l), float(s), float(f), sd, i, tuple(ratios), part)
             for i, (l, s, f) in enumerate(points) for sd in seeds]
    if workers <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (workers * 8))))
