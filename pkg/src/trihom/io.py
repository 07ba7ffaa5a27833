"""Dataset bundles (edges.csv, labels.csv, features.csv, meta.json), atomic
file output, sweep CSV and config documents."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InconsistentSizes, NonContiguousIds, ParseError
from .graph import Dataset, Graph, normalize_edges

OUTPUT_DIR_ENV = "TRIHOM_OUTPUT_DIR"

SWEEP_COLUMNS = (
    "h_L_target", "h_S_target", "h_F_target", "seed",
    "h_L_measured", "h_S_measured", "h_F_measured", "rho",
    "J_emp_aware", "J_emp_agnostic", "Jh_theory_aware", "Jh_theory_agnostic",
    "acc_aware", "acc_agnostic",
)


def output_path(path: str | os.PathLike) -> Path:
    """Resolve a relative output path against ``$TRIHOM_OUTPUT_DIR`` when it is set."""
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write_text(path, dump_json(obj))


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in r])
    atomic_write_text(path, buf.getvalue())


def _read_rows(path: Path, header: list[str] | None, prefix: str | None = None):
    """Yield ``(line_number, fields)``; checks the header exactly or by prefix."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(path.name, 0, "file not found") from None
    with fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ParseError(path.name, 1, "missing header row") from None
        head = [h.strip() for h in head]
        if header is not None and head != header:
            raise ParseError(path.name, 1, f"expected header {','.join(header)}, got {','.join(head)}")
        if prefix is not None and (not head or head[0] != prefix):
            raise ParseError(path.name, 1, f"header must start with {prefix!r}")
        yield 1, head
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            yield reader.line_num, row


def _ints(path: Path, line: int, row: list[str], width: int) -> list[int]:
    if len(row) != width:
        raise ParseError(path.name, line, f"expected {width} fields, got {len(row)}")
    try:
        return [int(c.strip()) for c in row]
    except ValueError:
        raise ParseError(path.name, line, f"non-integer field in {row!r}") from None


def load_dataset(path: str | os.PathLike) -> Dataset:
    """Read a bundle directory. Self-loops and repeated edges (in either
    direction) are dropped and counted in ``info["normalizations"]``."""
    root = Path(path)
    meta = {}
    meta_path = root / "meta.json"
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError("meta.json", e.lineno, e.msg) from None

    lp = root / "labels.csv"
    rows = _read_rows(lp, ["node", "label"])
    next(rows)
    ids, labs = [], []
    for line, row in rows:
        a, b = _ints(lp, line, row, 2)
        ids.append(a)
        labs.append(b)
    ids = np.asarray(ids, dtype=np.int64)
    n = len(ids)
    if n == 0:
        raise InconsistentSizes("labels.csv lists no nodes")
    order = np.argsort(ids, kind="stable")
    if not np.array_equal(ids[order], np.arange(n)):
        raise NonContiguousIds("node ids in labels.csv must be exactly 0..N-1")
    labels = np.asarray(labs, dtype=np.int64)[order]
    if labels.min() < 0:
        raise ParseError("labels.csv", 0, "negative class id")
    C = int(meta.get("num_classes", labels.max() + 1))
    if labels.max() >= C:
        raise InconsistentSizes(f"label {labels.max()} outside num_classes={C}")
    if "num_nodes" in meta and int(meta["num_nodes"]) != n:
        raise InconsistentSizes(f"meta.json num_nodes={meta['num_nodes']} but labels.csv has {n} nodes")

    ep = root / "edges.csv"
    rows = _read_rows(ep, ["u", "v"])
    next(rows)
    edges = []
    for line, row in rows:
        u, v = _ints(ep, line, row, 2)
        if not (0 <= u < n and 0 <= v < n):
            raise InconsistentSizes(f"edges.csv:{line}: endpoint outside [0, {n})")
        edges.append((u, v))
    pairs, counts = normalize_edges(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    graph = Graph._from_unique_pairs(n, pairs)

    fp = root / "features.csv"
    if fp.exists():
        rows = _read_rows(fp, None, prefix="node")
        _, head = next(rows)
        m = len(head) - 1
        if head[1:] != [f"f{i}" for i in range(m)]:
            raise ParseError("features.csv", 1, "feature columns must be named f0..f{M-1}")
        x = np.empty((n, m))
        seen = np.zeros(n, dtype=bool)
        for line, row in rows:
            if len(row) != m + 1:
                raise ParseError("features.csv", line, f"expected {m + 1} fields, got {len(row)}")
            try:
                u = int(row[0])
                vals = [float(c) for c in row[1:]]
            except ValueError:
                raise ParseError("features.csv", line, "unparseable value") from None
            if not 0 <= u < n:
                raise InconsistentSizes(f"features.csv:{line}: node {u} outside [0, {n})")
            if seen[u]:
                raise ParseError("features.csv", line, f"node {u} listed twice")
            seen[u] = True
            x[u] = vals
        if not seen.all():
            raise InconsistentSizes(f"features.csv covers {int(seen.sum())} of {n} nodes")
    else:
        x = np.empty((n, 0))
    if "feature_dim" in meta and int(meta["feature_dim"]) != x.shape[1]:
        raise InconsistentSizes(f"meta.json feature_dim={meta['feature_dim']} but features.csv has {x.shape[1]}")

    info = {"normalizations": counts, "source": str(root)}
    if "generator" in meta:
        info["generator"] = meta["generator"]
    return Dataset(graph, labels, C, x, info)


def bundle_meta(ds: Dataset) -> dict:
    norm = ds.info.get("normalizations", {})
    meta = {
        "num_nodes": ds.num_nodes,
        "num_classes": ds.num_classes,
        "feature_dim": ds.feature_dim,
        "normalizations": [{"kind": k, "count": int(v)} for k, v in norm.items()],
    }
    if "generator" in ds.info:
        meta["generator"] = ds.info["generator"]
    return meta


def write_bundle(ds: Dataset, path: str | os.PathLike) -> Path:
    root = Path(path)
    e = ds.graph.edge_array()
    write_csv(root / "edges.csv", ["u", "v"], ([int(u), int(v)] for u, v in e))
    write_csv(root / "labels.csv", ["node", "label"], ([i, int(c)] for i, c in enumerate(ds.labels)))
    header = ["node"] + [f"f{i}" for i in range(ds.feature_dim)]
    write_csv(root / "features.csv", header, ([i] + [float(v) for v in row] for i, row in enumerate(ds.features)))
    write_json(root / "meta.json", bundle_meta(ds))
    return root


def sweep_rows(records):
    for r in records:
        yield [float(r.h_L_target), float(r.h_S_target), float(r.h_F_target), int(r.seed),
               float(r.h_L_measured), float(r.h_S_measured), float(r.h_F_measured), float(r.rho),
               float(r.J_emp_aware), float(r.J_emp_agnostic), float(r.Jh_theory_aware), float(r.Jh_theory_agnostic),
               float(r.acc_aware), float(r.acc_agnostic)]


def write_sweep_csv(path, records) -> None:
    write_csv(path, SWEEP_COLUMNS, sweep_rows(records))


def read_table(path: str | os.PathLike) -> dict[str, list]:
    """Numeric CSV columns; empty, 'nan' and 'null' cells become None."""
    p = Path(path)
    rows = _read_rows(p, None)
    _, head = next(rows)
    cols = {h: [] for h in head}
    for line, row in rows:
        if len(row) != len(head):
            raise ParseError(p.name, line, f"expected {len(head)} fields, got {len(row)}")
        for h, c in zip(head, row):
            c = c.strip()
            if c == "" or c.lower() in ("nan", "null", "none"):
                cols[h].append(None)
                continue
            try:
                cols[h].append(float(c))
            except ValueError:
                cols[h].append(c)
    return cols


def load_config(path: str | os.PathLike | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(p.name, 0, "config file not found") from None
    except json.JSONDecodeError as e:
        raise ParseError(p.name, e.lineno, e.msg) from None
    if not isinstance(doc, dict):
        raise ParseError(p.name, 1, "config must be a JSON object")
    return doc
