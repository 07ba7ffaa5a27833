"""Command-line entry point: generate, metrics, trihom, verify, sweep, correlate.

Exit codes: 0 success, 1 usage or parse error, 2 degenerate input,
3 verification failure. Each command reads an optional JSON config
(``--config``); flags given on the command line override it.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from . import io as bundle_io
from . import model
from .csbm3h import Csbm3hParams, generate
from .errors import BundleError, DegenerateInput, NotApplicable, TriHomError
from .graph import spectral_radius
from .harness import run_sweep
from .metrics import feature, label, structural
from .stats import correlate_table

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_VERIFY = 0, 1, 2, 3

FULL_H_L = "0:1:0.1"
FULL_H_S = "0:1:0.1"
FULL_H_F = "-0.8:0.8:0.2"

DEFAULTS = {
    "generate": {"h_L": 0.5, "h_S": 1.0, "h_F": 0.0, "num_nodes": 1000, "num_classes": 3, "degree_min": 1,
                 "degree_max": 10, "seed": 0, "diffusion_power": 1, "diffusion_tol": 1e-10,
                 "class_means": None, "class_vars": None, "out": "bundle"},
    "metrics": {"select": None, "seed": 0, "max_pairs": 200_000, "exact_limit": None, "ref_sample": 500,
                "cf_exact_limit": 1000, "literal_li": False, "literal_2hop": False, "nei_k": 2,
                "spectral_tol": 1e-8, "trihom_C": 3, "trihom_rho": 10.0, "out": None},
    "trihom": {"C": 3, "rho": 10.0, "h_L_grid": "0:1:0.05", "h_S_grid": "0:1:0.05", "h_F_grid": "-0.9:0.9:0.1",
               "out": "trihom_grid.csv"},
    "verify": {"C": 3, "rho": 10.0, "grid_step": 0.01, "fd_step": 1e-5, "exclusion": 0.02, "exact_step": 0.05,
               "zero_tol": 1e-9, "out": None},
    "sweep": {"h_L_grid": FULL_H_L, "h_S_grid": FULL_H_S, "h_F_grid": FULL_H_F, "seeds": "0",
              "num_nodes": 1000, "num_classes": 3, "degree_min": 1, "degree_max": 10, "diffusion_power": 1,
              "diffusion_tol": 1e-10, "class_means": None, "class_vars": None, "part": "test",
              "ratios": [0.5, 0.25, 0.25], "workers": 1, "out": "sweep.csv"},
    "correlate": {"metrics": None, "performances": None, "out": None},
}

TOLERANCE_KEYS = ("diffusion_tol", "fd_step", "grid_step", "exact_step", "spectral_tol", "zero_tol")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_grid(spec) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list; lists pass through."""
    if isinstance(spec, (list, tuple)):
        return [float(v) for v in spec]
    s = str(spec).strip()
    try:
        if ":" in s:
            lo, hi, step = (float(t) for t in s.split(":"))
            if step <= 0:
                raise UsageError(f"grid step must be positive in {s!r}")
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return [float(v) for v in np.round(lo + step * np.arange(n), 12)]
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {s!r}") from None


def parse_seeds(spec) -> list[int]:
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, (list, tuple)):
        return [int(v) for v in spec]
    s = str(spec).strip()
    try:
        if ":" in s:
            lo, hi = (int(t) for t in s.split(":"))
            return list(range(lo, hi + 1))
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse seeds {s!r}") from None


def _names(spec) -> list[str] | None:
    if spec is None:
        return None
    if isinstance(spec, (list, tuple)):
        return [str(v) for v in spec]
    return [t.strip() for t in str(spec).split(",") if t.strip()]


def effective_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    cfg.update(bundle_io.load_config(args.config))
    for k, v in vars(args).items():
        if k in ("command", "config", "func", "bundle", "table") or v is None:
            continue
        cfg[k] = v
    for k in TOLERANCE_KEYS:
        if k in cfg and not float(cfg[k]) > 0:
            raise UsageError(f"{k} must be positive")
    for k in ("seed",):
        if k in cfg and not -(2 ** 63) <= int(cfg[k]) < 2 ** 64:
            raise UsageError("seed must fit in 64 bits")
    return cfg


def _emit(cfg: dict, doc: dict) -> None:
    text = bundle_io.dump_json(doc)
    if cfg.get("out"):
        bundle_io.atomic_write_text(bundle_io.output_path(cfg["out"]), text)
    else:
        sys.stdout.write(text)


def _params(cfg: dict, h_L=0.0, h_S=1.0, h_F=0.0, seed=0) -> Csbm3hParams:
    return Csbm3hParams(h_L=float(h_L), h_S=float(h_S), h_F=float(h_F), num_nodes=int(cfg["num_nodes"]),
                        num_classes=int(cfg["num_classes"]),
                        degree_range=(int(cfg["degree_min"]), int(cfg["degree_max"])),
                        class_means=cfg.get("class_means"), class_vars=cfg.get("class_vars"), seed=int(seed),
                        diffusion_power=int(cfg["diffusion_power"]), diffusion_tol=float(cfg["diffusion_tol"]))


def cmd_generate(cfg: dict) -> int:
    out = generate(_params(cfg, cfg["h_L"], cfg["h_S"], cfg["h_F"], cfg["seed"]))
    root = bundle_io.output_path(cfg["out"])
    bundle_io.write_bundle(out.dataset, root)
    print(f"wrote {root} (N={out.dataset.num_nodes}, edges={out.dataset.graph.num_edges}, "
          f"rho={out.rho_used:.6g}, omega={out.omega:.6g})", file=sys.stderr)
    return EXIT_OK


def _metric_table(cfg: dict) -> dict:
    seed, pairs = int(cfg["seed"]), int(cfg["max_pairs"])
    exact_limit = cfg.get("exact_limit")
    exact_limit = None if exact_limit is None else int(exact_limit)

    def h_s(ds, ctx):
        v, per = structural.structural_homophily(ds)
        return v, {"per_class": per}

    def h_ns(ds, ctx):
        est = structural.neighborhood_similarity_estimate(ds, pairs, seed, exact_limit)
        return est.value, {"method": est.method, "intra_pairs": est.intra_pairs, "inter_pairs": est.inter_pairs,
                           "intra_se": est.intra_se, "inter_se": est.inter_se, "seed": est.seed}

    def h_f(ds, ctx):
        est = feature.estimate_feature_homophily(ds, ctx["rho"])
        return est.h_F, {"rho": est.rho_used, "raw_mean": est.h_F_raw_mean,
                         "per_feature": [vars(f) for f in est.per_feature],
                         "degenerate_features": est.num_degenerate}

    def h_attr(ds, ctx):
        d = feature.attribute_homophily_details(ds)
        return d.value, {"per_feature": d.per_feature, "min_shifted": d.shifted, "zero_sum_skipped": d.skipped}

    def h_cf(ds, ctx):
        est = feature.class_controlled_feature_homophily_estimate(ds, int(cfg["ref_sample"]), seed,
                                                                  int(cfg["cf_exact_limit"]))
        return est.value, {"method": est.method, "reference_size": est.reference_size, "se": est.se,
                           "seed": est.seed}

    def plain(fn, **flags):
        return lambda ds, ctx: (fn(ds), flags)

    return {
        "h_edge": plain(label.edge_homophily),
        "h_node": plain(label.node_homophily),
        "h_class": plain(label.class_homophily),
        "h_adj": plain(label.adjusted_homophily),
        "h_den": plain(label.density_aware_homophily),
        "h_2hop": lambda ds, ctx: (label.two_hop_class_similarity(ds, bool(cfg["literal_2hop"])),
                                   {"literal_denominator": bool(cfg["literal_2hop"])}),
        "h_nei": lambda ds, ctx: (label.neighbor_homophily(ds, int(cfg["nei_k"])), {"k": int(cfg["nei_k"])}),
        "h_S": h_s,
        "LI": lambda ds, ctx: (structural.label_informativeness(ds, bool(cfg["literal_li"])),
                               {"literal": bool(cfg["literal_li"]), "log": "natural"}),
        "h_NS": h_ns,
        "h_agg": plain(structural.aggregation_homophily, ties="count as satisfied"),
        "h_F": h_f,
        "h_GE": plain(feature.generalized_edge_homophily, zero_norm="contributes 0"),
        "h_LS_cos": lambda ds, ctx: (feature.local_similarity(ds, "cos"), {"zero_norm": "contributes 0"}),
        "h_LS_euc": lambda ds, ctx: (feature.local_similarity(ds, "euclidean"), {}),
        "h_attr": h_attr,
        "h_CF": h_cf,
    }


def _trihom_entries(results: dict, cfg: dict) -> dict:
    vals = {k: results.get(k, {}).get("value") for k in ("h_node", "h_S", "h_F")}
    C, rho = int(cfg["trihom_C"]), float(cfg["trihom_rho"])
    out = {}
    for name, fn in (("J_h_aware", model.j_h_aware), ("J_h_agnostic", model.j_h_agnostic)):
        entry = {"value": None, "inputs": {"h_L": vals["h_node"], "h_S": vals["h_S"], "h_F": vals["h_F"],
                                           "C": C, "rho": rho, "h_L_source": "h_node"}}
        if any(v is None for v in vals.values()):
            entry["error"] = "requires h_node, h_S and h_F"
        else:
            try:
                p = model.TriHomPoint(vals["h_node"], vals["h_S"], float(np.clip(vals["h_F"], -0.999999, 0.999999)),
                                      C, rho)
                entry["value"] = float(fn(p))
            except (ValueError, TriHomError) as e:
                entry["error"] = f"{type(e).__name__}: {e}"
        out[name] = entry
    return out


def cmd_metrics(cfg: dict, bundle: str) -> int:
    ds = bundle_io.load_dataset(bundle)
    table = _metric_table(cfg)
    selected = _names(cfg.get("select"))
    trihom_names = {"J_h_aware", "J_h_agnostic"}
    if selected is None:
        selected = list(table) + sorted(trihom_names)
    unknown = [s for s in selected if s not in table and s not in trihom_names]
    if unknown:
        raise UsageError(f"unknown metrics: {unknown}; choose from {list(table) + sorted(trihom_names)}")
    ctx = {}
    needs_rho = "h_F" in selected or trihom_names & set(selected)
    if needs_rho:
        ctx["rho"] = spectral_radius(ds.graph, tol=float(cfg["spectral_tol"]))
    compute = list(selected)
    if trihom_names & set(selected):
        compute += [k for k in ("h_node", "h_S", "h_F") if k not in compute]
    results = {}
    for name in compute:
        if name in trihom_names:
            continue
        try:
            value, details = table[name](ds, ctx)
            results[name] = {"value": float(value), "details": details}
        except (TriHomError, ValueError) as e:
            results[name] = {"value": None, "error": f"{type(e).__name__}: {e}",
                             "degenerate": isinstance(e, DegenerateInput)}
    if trihom_names & set(selected):
        results.update(_trihom_entries(results, cfg))
    metrics = {k: results[k] for k in selected}
    doc = {"dataset": {"path": str(bundle), "num_nodes": ds.num_nodes, "num_classes": ds.num_classes,
                       "feature_dim": ds.feature_dim, "num_edges": ds.graph.num_edges,
                       "normalizations": ds.info.get("normalizations", {})},
           "rho": ctx.get("rho"), "metrics": metrics, "config": cfg}
    _emit(cfg, doc)
    if metrics and all(m.get("value") is None for m in metrics.values()):
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_trihom(cfg: dict) -> int:
    C, rho = int(cfg["C"]), float(cfg["rho"])
    axes = [parse_grid(cfg[k]) for k in ("h_L_grid", "h_S_grid", "h_F_grid")]
    rows = []
    for l, s, f in itertools.product(*axes):
        p = model.TriHomPoint(l, s, f, C, rho)
        rows.append([l, s, f, float(model.j_h_aware(p)), float(model.j_h_agnostic(p))])
    out = bundle_io.output_path(cfg["out"])
    bundle_io.write_csv(out, ["h_L", "h_S", "h_F", "J_aware", "J_agnostic"], rows)
    bundle_io.write_json(out.with_suffix(out.suffix + ".json"), {"rows": len(rows), "config": cfg})
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    rep = model.verify_theorem_signs(C=int(cfg["C"]), rho=float(cfg["rho"]), grid_step=float(cfg["grid_step"]),
                                     fd_step=float(cfg["fd_step"]), exclusion=float(cfg["exclusion"]),
                                     exact_step=float(cfg["exact_step"]), zero_tol=float(cfg["zero_tol"]))
    doc = rep.to_dict()
    doc["config"] = cfg
    _emit(cfg, doc)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_sweep(cfg: dict) -> int:
    template = _params(cfg)
    seeds = parse_seeds(cfg["seeds"])
    if cfg["part"] not in ("test", "val"):
        raise UsageError("part must be 'test' or 'val'")
    records = run_sweep(parse_grid(cfg["h_L_grid"]), parse_grid(cfg["h_S_grid"]), parse_grid(cfg["h_F_grid"]),
                        template, seeds, tuple(cfg["ratios"]), cfg["part"], int(cfg["workers"]))
    out = bundle_io.output_path(cfg["out"])
    bundle_io.write_sweep_csv(out, records)
    flagged = [{"row": i, "h_L_target": r.h_L_target, "h_S_target": r.h_S_target, "h_F_target": r.h_F_target,
                "seed": r.seed, "flags": r.flags,
                "Jh_target_aware": r.Jh_target_aware, "Jh_target_agnostic": r.Jh_target_agnostic}
               for i, r in enumerate(records) if r.flags]
    bundle_io.write_json(out.with_suffix(out.suffix + ".json"),
                         {"rows": len(records), "columns": list(bundle_io.SWEEP_COLUMNS),
                          "flagged": flagged, "config": cfg})
    return EXIT_OK


def cmd_correlate(cfg: dict, table_path: str) -> int:
    cols = bundle_io.read_table(table_path)
    metrics = _names(cfg.get("metrics"))
    perfs = _names(cfg.get("performances"))
    if not metrics or not perfs:
        raise UsageError("correlate needs --metrics and --performances column lists")
    missing = [c for c in metrics + perfs if c not in cols]
    if missing:
        raise UsageError(f"columns not in {table_path}: {missing}")
    for c in metrics + perfs:
        if any(isinstance(v, str) for v in cols[c]):
            raise UsageError(f"column {c!r} is not numeric")
    table = correlate_table({m: cols[m] for m in metrics}, {p: cols[p] for p in perfs})
    doc = table.to_dict()
    doc["config"] = cfg
    _emit(cfg, doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trihom", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON config document")
        sp.add_argument("--out", help="output path (relative paths honor $TRIHOM_OUTPUT_DIR)")
        return sp

    def generator_args(sp):
        sp.add_argument("--num-nodes", dest="num_nodes", type=int)
        sp.add_argument("--num-classes", dest="num_classes", type=int)
        sp.add_argument("--degree-min", dest="degree_min", type=int)
        sp.add_argument("--degree-max", dest="degree_max", type=int)
        sp.add_argument("--diffusion-power", dest="diffusion_power", type=int, choices=(1, 2))
        sp.add_argument("--diffusion-tol", dest="diffusion_tol", type=float)

    g = common(sub.add_parser("generate", help="sample a CSBM-3H dataset bundle"))
    g.add_argument("--h-L", dest="h_L", type=float)
    g.add_argument("--h-S", dest="h_S", type=float)
    g.add_argument("--h-F", dest="h_F", type=float)
    g.add_argument("--seed", type=int)
    generator_args(g)

    m = common(sub.add_parser("metrics", help="compute homophily metrics for a bundle"))
    m.add_argument("bundle")
    m.add_argument("--select", help="comma-separated metric names")
    m.add_argument("--seed", type=int)
    m.add_argument("--max-pairs", dest="max_pairs", type=int)
    m.add_argument("--exact-limit", dest="exact_limit", type=int,
                   help="sample node pairs for h_NS above this many nodes (default: always exact)")
    m.add_argument("--ref-sample", dest="ref_sample", type=int)
    m.add_argument("--cf-exact-limit", dest="cf_exact_limit", type=int)
    m.add_argument("--literal-li", dest="literal_li", action="store_true", default=None)
    m.add_argument("--literal-2hop", dest="literal_2hop", action="store_true", default=None)
    m.add_argument("--nei-k", dest="nei_k", type=int)
    m.add_argument("--trihom-C", dest="trihom_C", type=int)
    m.add_argument("--trihom-rho", dest="trihom_rho", type=float)

    t = common(sub.add_parser("trihom", help="evaluate J_h over a grid"))
    t.add_argument("--C", type=int)
    t.add_argument("--rho", type=float)
    t.add_argument("--h-L-grid", dest="h_L_grid")
    t.add_argument("--h-S-grid", dest="h_S_grid")
    t.add_argument("--h-F-grid", dest="h_F_grid")

    v = common(sub.add_parser("verify", help="finite-difference check of the J_h sign claims"))
    v.add_argument("--C", type=int)
    v.add_argument("--rho", type=float)
    v.add_argument("--grid-step", dest="grid_step", type=float)
    v.add_argument("--fd-step", dest="fd_step", type=float)
    v.add_argument("--exclusion", type=float)
    v.add_argument("--exact-step", dest="exact_step", type=float)
    v.add_argument("--zero-tol", dest="zero_tol", type=float)

    s = common(sub.add_parser("sweep", help="CSBM-3H sweep with centroid accuracies"))
    s.add_argument("--h-L-grid", dest="h_L_grid")
    s.add_argument("--h-S-grid", dest="h_S_grid")
    s.add_argument("--h-F-grid", dest="h_F_grid")
    s.add_argument("--seeds", help="comma list or inclusive range a:b")
    s.add_argument("--part", choices=("test", "val"))
    s.add_argument("--workers", type=int)
    generator_args(s)

    c = common(sub.add_parser("correlate", help="Pearson / Kendall table from a CSV"))
    c.add_argument("table")
    c.add_argument("--metrics")
    c.add_argument("--performances")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = effective_config(args.command, args)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "metrics":
            return cmd_metrics(cfg, args.bundle)
        if args.command == "trihom":
            return cmd_trihom(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_correlate(cfg, args.table)
    except (UsageError, BundleError, json.JSONDecodeError) as e:
        print(f"trihom {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateInput, NotApplicable) as e:
        print(f"trihom {args.command}: degenerate input: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as e:
        print(f"trihom {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
