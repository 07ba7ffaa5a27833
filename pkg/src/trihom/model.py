"""Tri-Hom: closed-form distinguishability factors J_h for graph-aware and
graph-agnostic models, their critical points, the empirical distance ratio
and a finite-difference checker for the sign claims."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from types import SimpleNamespace

import numpy as np

from .errors import DegenerateInput, NotApplicable
from .graph import Dataset, degrees
from .metrics.structural import sample_class_pairs


@dataclass(frozen=True)
class TriHomPoint:
    h_L: float
    h_S: float
    h_F: float
    C: int = 3
    rho: float = 10.0

    def __post_init__(self):
        if not (0.0 <= self.h_L <= 1.0 and 0.0 <= self.h_S <= 1.0):
            raise ValueError("h_L and h_S must lie in [0, 1]")
        if not abs(self.h_F) < 1.0:
            raise ValueError("h_F must lie in (-1, 1)")
        if self.C < 2:
            raise ValueError("C must be >= 2")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if 1.0 - (self.h_F / self.rho) * _p0(self.h_L, self.C) == 0.0:
            raise ValueError("J_h denominator vanishes at this point")


@dataclass(frozen=True)
class GaussianSpec:
    mu: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mu = np.atleast_2d(np.asarray(self.mu, dtype=np.float64))
        var = np.broadcast_to(np.asarray(self.var, dtype=np.float64), mu.shape).copy()
        if np.any(var < 0):
            raise ValueError("variances must be non-negative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "var", var)


def _p0(h_L, C):
    return (h_L * C - 1.0) / (C - 1.0)


def _second_moment(h_L, h_S, C):
    """C a^2 + C (1 - h_S)^2 / (C - 1) + p0^2, with a = (1 - h_L)/(C - 1)."""
    a = (1.0 - h_L) / (C - 1.0)
    return C * a * a + C * (1.0 - h_S) ** 2 / (C - 1.0) + _p0(h_L, C) ** 2


def j_h_agnostic(p) -> float:
    w = p.h_F / p.rho
    q = _second_moment(p.h_L, p.h_S, p.C)
    return (1.0 - w * w * q) / (1.0 - w * _p0(p.h_L, p.C)) ** 2


def aware_prefactor(h_L, h_S, C):
    return _p0(h_L, C) ** 2 / _second_moment(h_L, h_S, C)


def j_h_aware(p) -> float:
    return aware_prefactor(p.h_L, p.h_S, p.C) * j_h_agnostic(p)


def j_h_aware_approx(h_L, h_S, C):
    """Large-rho limit of the graph-aware factor."""
    return aware_prefactor(h_L, h_S, C)


def j_N(spec: GaussianSpec) -> float:
    mu = spec.mu
    C = mu.shape[0]
    total_var = float(spec.var.sum())
    if total_var == 0.0:
        raise DegenerateInput("J_N needs a positive total variance")
    diff = mu[:, None, :] - mu[None, :, :]
    ordered = float(np.sum(diff * diff))
    return (ordered / (2.0 * C * (C - 1))) / (total_var / C)


def j_total(jn: float, jh: float) -> float:
    d = 1.0 + jn * jh
    if d == 0.0:
        raise DegenerateInput("1 + J_N J_h is zero")
    return 1.0 / d


def critical_feature_homophily(h_L, h_S, C, rho):
    """Feature homophily where the h_F-derivative of J_h changes sign (unclipped)."""
    return rho * _p0(h_L, C) / _second_moment(h_L, h_S, C)


def critical_label_bounds(h_S: float, C: int, rho: float) -> tuple[float, float]:
    """``(h_L_minus, h_L_plus)``: where the critical feature homophily equals -1 and +1."""
    k = C * (C - 1) * (1.0 - h_S) ** 2
    den = 2.0 * C * (C + 1)
    b_plus = 4 * C + C * (C - 1) * rho
    disc_plus = b_plus ** 2 - 4 * C * (C + 1) * (C + 1 + (C - 1) * rho + k)
    b_minus = 4 * C - C * (C - 1) * rho
    disc_minus = b_minus ** 2 - 4 * C * (C + 1) * (C + 1 - (C - 1) * rho + k)
    if disc_minus < 0:
        raise NotApplicable("h_L_minus")
    if disc_plus < 0:
        raise NotApplicable("h_L_plus")
    return (b_minus + np.sqrt(disc_minus)) / den, (b_plus - np.sqrt(disc_plus)) / den


def aggregate_representations(ds: Dataset, return_isolated: bool = False):
    """Neighbor-mean aggregation; isolated nodes keep their own features."""
    deg = degrees(ds.graph)
    iso = deg == 0
    h = np.asarray(ds.graph.adjacency @ ds.features)
    h[~iso] /= deg[~iso, None]
    h[iso] = ds.features[iso]
    return (h, iso) if return_isolated else h


@dataclass
class EmpiricalJ:
    value: float
    intra_mean: float
    inter_mean: float
    method: str
    intra_pairs: int
    inter_pairs: int
    se: float = 0.0


def empirical_J_estimate(ds: Dataset, mode: str = "aware", max_pairs: int = 200_000, seed: int = 0,
                         exact_limit: int | None = None) -> EmpiricalJ:
    """Mean intra-class over mean inter-class squared distance across node pairs.

    Exact all-pairs sums use class-centered scatter, so the cost is O(N M).
    Pair sampling is used only when ``exact_limit`` is set and exceeded.
    """
    if mode == "aware":
        z = aggregate_representations(ds)
    elif mode == "agnostic":
        z = np.asarray(ds.features)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    y, C, n = ds.labels, ds.num_classes, ds.num_nodes
    counts = np.bincount(y, minlength=C).astype(np.float64)
    intra_pairs = int(np.sum(counts * (counts - 1) / 2))
    inter_pairs = int(n * (n - 1) // 2 - intra_pairs)
    if intra_pairs == 0 or inter_pairs == 0:
        raise DegenerateInput("empirical J needs at least one intra-class and one inter-class pair")
    if exact_limit is None or n <= exact_limit:
        sums = np.zeros((C, z.shape[1]))
        np.add.at(sums, y, z)
        means = np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)
        within = np.bincount(y, weights=np.sum((z - means[y]) ** 2, axis=1), minlength=C)
        intra_sum = float(np.sum(counts * within))
        total_sum = float(n * np.sum((z - z.mean(axis=0)) ** 2))
        intra = intra_sum / intra_pairs
        inter = (total_sum - intra_sum) / inter_pairs
        out = EmpiricalJ(np.nan, intra, inter, "exact", intra_pairs, inter_pairs)
    else:
        rng = np.random.default_rng(seed)
        ui, vi = sample_class_pairs(y, max_pairs, True, rng)
        uo, vo = sample_class_pairs(y, max_pairs, False, rng)
        di = np.sum((z[ui] - z[vi]) ** 2, axis=1)
        do = np.sum((z[uo] - z[vo]) ** 2, axis=1)
        intra, inter = float(di.mean()), float(do.mean())
        out = EmpiricalJ(np.nan, intra, inter, "sampled", di.size, do.size)
        if inter > 0:
            # delta method for a ratio of independent means
            r = intra / inter
            out.se = float(r * np.sqrt(di.var(ddof=1) / di.size / intra ** 2 + do.var(ddof=1) / do.size / inter ** 2)) \
                if intra > 0 else float(np.sqrt(di.var(ddof=1) / di.size) / inter)
    if not out.inter_mean > 1e-300:
        raise DegenerateInput("mean inter-class distance is zero")
    out.value = out.intra_mean / out.inter_mean
    return out


def empirical_J(ds: Dataset, mode: str = "aware", max_pairs: int = 200_000, seed: int = 0,
                exact_limit: int | None = None) -> float:
    return empirical_J_estimate(ds, mode, max_pairs, seed, exact_limit).value


# sign verification

GATING = ("aware_label_approx", "aware_structural_approx")
MAX_LISTED = 200


@dataclass
class SignReport:
    C: int
    rho: float
    grid_step: float
    exact_step: float
    fd_step: float
    exclusion: float
    zero_tol: float
    grid: dict = field(default_factory=dict)
    checked: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)
    violation_counts: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    cross_checks: dict = field(default_factory=dict)

    def violation_rate(self, claim: str) -> float:
        n = self.checked.get(claim, 0)
        return self.violation_counts.get(claim, 0) / n if n else 0.0

    @property
    def approx_violations(self) -> int:
        return sum(self.violation_counts.get(c, 0) for c in GATING)

    @property
    def passed(self) -> bool:
        return self.approx_violations == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violation_rates"] = {c: self.violation_rate(c) for c in self.checked}
        d["approx_violations"] = self.approx_violations
        d["gating_claims"] = list(GATING)
        return d


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def _record(report: SignReport, claim: str, mask_checked, bad, coords: dict, claimed, deriv):
    report.checked[claim] = int(np.count_nonzero(mask_checked))
    report.violation_counts[claim] = int(np.count_nonzero(bad))
    idx = np.flatnonzero(bad.ravel())[:MAX_LISTED]
    listed = []
    for i in idx:
        pt = {k: float(np.ravel(v)[i]) for k, v in coords.items()}
        listed.append({"point": pt, "claimed": int(np.ravel(claimed)[i]), "derivative": float(np.ravel(deriv)[i])})
    report.violations[claim] = listed


def _sign_check(deriv, claimed, zero_tol):
    """Violation when the derivative points against the claimed sign beyond ``zero_tol``.

    ``claimed == 0`` requires ``|deriv| <= zero_tol``.
    """
    return np.where(claimed == 0, np.abs(deriv) > zero_tol, claimed * deriv < -zero_tol)


def verify_theorem_signs(C: int = 3, rho: float = 10.0, grid_step: float = 0.01, fd_step: float = 1e-5,
                         exclusion: float = 0.02, exact_step: float = 0.05, zero_tol: float = 1e-9) -> SignReport:
    """Finite-difference check of the monotonicity claims.

    Approximate (large-rho) form over an (h_L, h_S) grid: the h_L-derivative
    has sign ``sign(h_L - 1/C)`` and the h_S-derivative is non-negative.
    These two are gating. Exact forms over an (h_L, h_S, h_F) grid: the
    h_F-derivative sign regions of both factors, the h_L-derivative of the
    graph-agnostic factor against ``sign(h_F)``, and h_S non-negativity;
    points within ``exclusion`` of a critical surface are skipped and
    violation rates reported.
    """
    if grid_step <= 0 or fd_step <= 0 or exact_step <= 0:
        raise ValueError("grid_step, fd_step and exact_step must be positive")
    rep = SignReport(C, float(rho), grid_step, exact_step, fd_step, exclusion, zero_tol)
    inv_c = 1.0 / C
    h = fd_step

    hl = _axis(0.0, 1.0, grid_step)
    hs = _axis(0.0, 1.0, grid_step)
    L, S = np.meshgrid(hl, hs, indexing="ij")
    rep.grid["approx"] = {"h_L": [0.0, 1.0, grid_step], "h_S": [0.0, 1.0, grid_step], "points": int(L.size)}
    d_l = (j_h_aware_approx(L + h, S, C) - j_h_aware_approx(L - h, S, C)) / (2 * h)
    d_s = (j_h_aware_approx(L, S + h, C) - j_h_aware_approx(L, S - h, C)) / (2 * h)
    claimed_l = np.where(np.abs(L - inv_c) < 1e-9, 0, np.sign(L - inv_c)).astype(int)
    coords = {"h_L": L, "h_S": S}
    _record(rep, "aware_label_approx", np.ones_like(L, bool), _sign_check(d_l, claimed_l, zero_tol), coords,
            claimed_l, d_l)
    _record(rep, "aware_structural_approx", np.ones_like(L, bool), d_s < -zero_tol, coords,
            np.ones_like(claimed_l), d_s)

    hl3 = _axis(0.0, 1.0, exact_step)
    hs3 = _axis(0.0, 1.0, exact_step)
    hf3 = _axis(-1.0 + exact_step, 1.0 - exact_step / 2, exact_step)
    L, S, F = np.meshgrid(hl3, hs3, hf3, indexing="ij")
    rep.grid["exact"] = {"h_L": [0.0, 1.0, exact_step], "h_S": [0.0, 1.0, exact_step],
                         "h_F": [float(hf3[0]), float(hf3[-1]), exact_step], "points": int(L.size)}
    coords = {"h_L": L, "h_S": S, "h_F": F}

    def pt(l, s, f):
        return SimpleNamespace(h_L=l, h_S=s, h_F=f, C=C, rho=rho)

    lo = np.full(hs3.shape, np.nan)
    hi = np.full(hs3.shape, np.nan)
    worst = 0.0
    not_applicable = []
    for i, s in enumerate(hs3):
        try:
            lo[i], hi[i] = critical_label_bounds(float(s), C, rho)
        except NotApplicable as e:
            not_applicable.append({"h_S": float(s), "bound": e.bound})
            continue
        worst = max(worst, abs(critical_feature_homophily(lo[i], s, C, rho) + 1.0),
                    abs(critical_feature_homophily(hi[i], s, C, rho) - 1.0))
    rep.cross_checks = {"max_abs_error": worst, "tolerance": 1e-6, "passed": bool(worst <= 1e-6),
                        "not_applicable": not_applicable}

    h_lo = np.broadcast_to(lo[None, :, None], L.shape)
    h_hi = np.broadcast_to(hi[None, :, None], L.shape)
    hat = critical_feature_homophily(L, S, C, rho)
    claimed_f = np.where(L < h_lo, -1, np.where(L > h_hi, 1, np.sign(hat - F))).astype(int)
    near = (np.abs(L - h_lo) < exclusion) | (np.abs(L - h_hi) < exclusion) | (np.abs(L - inv_c) < exclusion)
    middle = (L >= h_lo) & (L <= h_hi)
    skip_f = np.isnan(h_lo) | near | (middle & (np.abs(F - hat) < exclusion))
    for claim, fn in (("aware_feature_exact", j_h_aware), ("agnostic_feature_exact", j_h_agnostic)):
        d = (fn(pt(L, S, F + h)) - fn(pt(L, S, F - h))) / (2 * h)
        bad = ~skip_f & _sign_check(d, claimed_f, zero_tol)
        _record(rep, claim, ~skip_f, bad, coords, claimed_f, d)
        rep.excluded[claim] = int(np.count_nonzero(skip_f))

    d = (j_h_agnostic(pt(L + h, S, F)) - j_h_agnostic(pt(L - h, S, F))) / (2 * h)
    claimed = np.sign(F).astype(int)
    skip = np.abs(F) < exclusion
    _record(rep, "agnostic_label_exact", ~skip, ~skip & _sign_check(d, claimed, zero_tol), coords, claimed, d)
    rep.excluded["agnostic_label_exact"] = int(np.count_nonzero(skip))

    d = (j_h_aware(pt(L + h, S, F)) - j_h_aware(pt(L - h, S, F))) / (2 * h)
    claimed = np.sign(L - inv_c).astype(int)
    skip = np.abs(L - inv_c) < exclusion
    _record(rep, "aware_label_exact", ~skip, ~skip & _sign_check(d, claimed, zero_tol), coords, claimed, d)
    rep.excluded["aware_label_exact"] = int(np.count_nonzero(skip))

    ones = np.ones_like(L, dtype=int)
    for claim, fn in (("aware_structural_exact", j_h_aware), ("agnostic_structural_exact", j_h_agnostic)):
        d = (fn(pt(L, S + h, F)) - fn(pt(L, S - h, F))) / (2 * h)
        _record(rep, claim, np.ones_like(L, bool), d < -zero_tol, coords, ones, d)
    return rep
