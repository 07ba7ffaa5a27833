"""Pearson and Kendall tau-a correlations and metric-vs-performance tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantInput, TriHomError


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("inputs must have equal length")
    if x.size < 2:
        raise ValueError("at least two observations are required")
    return x, y


def pearson(x, y) -> float:
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("pearson correlation of a constant input")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(max(r, -1.0), 1.0))


def _concordance(x: np.ndarray, y: np.ndarray, chunk: int = 2048) -> int:
    """Sum over i < j of sign(x_i - x_j) sign(y_i - y_j), exact in integers."""
    n = x.size
    total = 0
    for start in range(0, n, chunk):
        xi = x[start:start + chunk, None]
        yi = y[start:start + chunk, None]
        s = np.sign(xi - x[None, :]).astype(np.int8) * np.sign(yi - y[None, :]).astype(np.int8)
        # keep j > i only
        j = np.arange(n)[None, :]
        i = np.arange(start, min(start + chunk, n))[:, None]
        total += int(np.sum(s[j > i], dtype=np.int64))
    return total


def kendall_tau_a(x, y) -> float:
    """(concordant - discordant) / (n (n - 1) / 2); tied pairs count as neither."""
    x, y = _pair(x, y)
    n = x.size
    return _concordance(x, y) / (n * (n - 1) / 2)


@dataclass
class CorrelationTable:
    metrics: list[str]
    models: list[str]
    pearson: dict = field(default_factory=dict)
    kendall: dict = field(default_factory=dict)
    n: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    pearson_rank: dict = field(default_factory=dict)
    kendall_rank: dict = field(default_factory=dict)
    pearson_avg_rank: dict = field(default_factory=dict)
    kendall_avg_rank: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def nest(d):
            out = {}
            for (m, p), v in d.items():
                out.setdefault(m, {})[p] = v
            return out

        return {
            "metrics": self.metrics,
            "models": self.models,
            "pearson": nest(self.pearson),
            "kendall_tau_a": nest(self.kendall),
            "n": nest(self.n),
            "errors": nest(self.errors),
            "pearson_rank": nest(self.pearson_rank),
            "kendall_rank": nest(self.kendall_rank),
            "pearson_avg_rank": self.pearson_avg_rank,
            "kendall_avg_rank": self.kendall_avg_rank,
        }


def _ranks(table: CorrelationTable, values: dict, ranks: dict, avg: dict):
    for p in table.models:
        cells = [(m, values[m, p]) for m in table.metrics if values.get((m, p)) is not None]
        if not cells:
            continue
        # descending |correlation|, mid-ranks for ties
        r = rankdata([-abs(v) for _, v in cells], method="average")
        for (m, _), rk in zip(cells, r):
            ranks[m, p] = float(rk)
    for m in table.metrics:
        got = [ranks[m, p] for p in table.models if (m, p) in ranks]
        avg[m] = float(np.mean(got)) if got else None


def correlate_table(metrics: dict, performances: dict) -> CorrelationTable:
    """Correlate every metric column with every performance column.

    Columns are equal-length sequences; None or NaN cells are dropped
    pairwise. A failed cell is stored as None with its reason.
    """
    lengths = {len(v) for v in list(metrics.values()) + list(performances.values())}
    if len(lengths) > 1:
        raise ValueError("all columns must have the same number of rows")
    table = CorrelationTable(list(metrics), list(performances))
    for m, xs in metrics.items():
        x = np.array([np.nan if v is None else v for v in xs], dtype=np.float64)
        for p, ys in performances.items():
            y = np.array([np.nan if v is None else v for v in ys], dtype=np.float64)
            ok = np.isfinite(x) & np.isfinite(y)
            table.n[m, p] = int(ok.sum())
            for name, fn, store in (("pearson", pearson, table.pearson), ("kendall", kendall_tau_a, table.kendall)):
                try:
                    store[m, p] = fn(x[ok], y[ok])
                except (TriHomError, ValueError) as e:
                    store[m, p] = None
                    table.errors.setdefault((m, p), {})[name] = f"{type(e).__name__}: {e}"
    _ranks(table, table.pearson, table.pearson_rank, table.pearson_avg_rank)
    _ranks(table, table.kendall, table.kendall_rank, table.kendall_avg_rank)
    return table
