"""Command-line interface: ``metric-embed <verb> ...``.

Vertex ids on the command line and in JSON output are 0-based; only the
edge-list and DIMACS graph files use 1-based ids.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .decomp import sample_clustering
from .experiments import DEFAULT_CONSTANTS, EXPERIMENTS, ExperimentConfig, estimate_center_sum, \
    estimate_separation, load_graph, run_experiment
from .generators import GeneratorError
from .graph import DisconnectedGraphError, GraphFormatError, WeightedGraph, num_levels, read_graph
from .hierarchy import ball_growth_profile, build_hierarchy, refine
from .rng import RandomStreams
from .routing import (CertificationError, RoutingBuildError, UnbalancedDemandError, build_routing_operator,
                      load_operator, save_operator, verify_competitive_ratio, verify_or_rebuild)
from .tree import build_tree, stretch_stats

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("METRIC_EMBED_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"METRIC_EMBED_SEED must be an integer, got {raw!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $METRIC_EMBED_SEED or 0)")
    p.add_argument("--mode", choices=("exact", "approx"), default="exact")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--eps", type=float, default=None, help="approximate-mode tolerance (default 1/(40 ln n))")
    p.add_argument("--dcnt-log-base", choices=("ln", "lg"), default="ln")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--graph-format", choices=("edge-list", "dimacs"), default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="metric-embed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name, help_text, graph=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if graph:
            p.add_argument("graph", help="graph file, or gen:kind:key=value,...")
        return p

    verb("parse", "validate a graph and print its summary")
    p = verb("decompose", "one random-shift decomposition")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scale", type=float, help="scale D")
    g.add_argument("--level", type=int, help="scale 2^level")
    verb("hierarchy", "hierarchy of decompositions and its refinement")
    verb("tree", "one sampled tree embedding")
    p = verb("stretch", "mean stretch over --trials trees")
    p.add_argument("--max-pairs", type=int, default=256 * 255 // 2)
    p = verb("separation", "single-scale separation frequency of a vertex pair")
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--level", type=int, required=True)
    p = verb("center-sum", "mean of sum_l centerDist_l(v) / 2^l")
    p.add_argument("--vertex", type=int, default=0)
    p = verb("ball-growth", "deterministic ball-growth profile")
    p.add_argument("--vertex", type=int, default=None, help="one vertex (default: all)")

    routing = sub.add_parser("routing", help="oblivious routing operators")
    rsub = routing.add_subparsers(dest="action", required=True)
    p = rsub.add_parser("build", parents=[common], help="build an operator and save it (--out required)")
    p.add_argument("graph")
    for name, text in (("apply", "flow A d for a demand vector file"),
                       ("transpose", "A^T y for an edge vector file")):
        p = rsub.add_parser(name, parents=[common], help=text)
        p.add_argument("operator")
        p.add_argument("vector", help="one value per line")
    p = rsub.add_parser("verify", parents=[common], help="edge competitive ratio of a saved operator")
    p.add_argument("operator")
    p.add_argument("--threshold", type=float, default=None, help="default 64 ln n")
    p = rsub.add_parser("certify", parents=[common], help="rebuild until the ratio check passes")
    p.add_argument("graph")
    p.add_argument("--threshold", type=float, default=None, help="default 64 ln n")

    exp = sub.add_parser("experiment", help="named experiments with pass/fail criteria")
    esub = exp.add_subparsers(dest="action", required=True)
    p = esub.add_parser("run", parents=[common], help="run one experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("graph")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--constant", action="append", default=[], metavar="KEY=VALUE",
                   help=f"acceptance multipliers: {', '.join(DEFAULT_CONSTANTS)}")
    return parser


def _pairs(items) -> dict:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise UsageError(f"expected KEY=VALUE, got {item!r}")
        out[key] = val
    return out


def _graph(args) -> WeightedGraph:
    if args.graph.startswith("gen:"):
        return load_graph(args.graph, args.seed)
    return read_graph(args.graph, args.graph_format)


def _check_vertex(graph: WeightedGraph, v: int, name: str = "vertex") -> int:
    if not 0 <= v < graph.n:
        raise UsageError(f"{name} {v} outside 0..{graph.n - 1}")
    return v


def _emit(args, payload, rows=None) -> None:
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def read_vector(path: str) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise UsageError(f"{path}:{lineno}: not a number: {line!r}") from None
    return np.array(vals)


def write_vector(values, out=None) -> None:
    text = "".join(f"{float(x)!r}\n" for x in values)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_parse(args):
    g = _graph(args)
    rows = [{"u": u, "v": v, "w": w} for u, v, w in g.edges]
    _emit(args, {"n": g.n, "m": g.m, "W": g.W, "L": num_levels(g), "hash": g.digest()}, rows)
    return EXIT_OK


def _cmd_decompose(args):
    g = _graph(args)
    D = args.scale if args.scale is not None else float(2**args.level)
    if not D > 0:
        raise UsageError("scale must be positive")
    cl = sample_clustering(g, D, RandomStreams(args.seed).spawn("decompose").generator(), args.mode, args.eps)
    rows = [{"vertex": v, "cluster": int(a), "center": cl.center_of(v), "center_dist": float(d)}
            for v, (a, d) in enumerate(zip(cl.assignment, cl.center_dist))]
    _emit(args, cl.to_dict(), rows)
    return EXIT_OK


def _cmd_hierarchy(args):
    g = _graph(args)
    h = build_hierarchy(g, args.mode, RandomStreams(args.seed), eps=args.eps)
    r = refine(h, g)
    payload = {
        "L": h.L,
        "levels": [cl.to_dict() for cl in h.levels],
        "refined": [{"parts": r.parts[l].tolist(), "centers": r.centers[l].tolist()} for l in range(h.L + 1)],
    }
    rows = [{"level": l, "vertex": v, "part": int(r.parts[l][v]), "center": r.center_of(l, v)}
            for l in range(h.L + 1) for v in range(g.n)]
    _emit(args, payload, rows)
    return EXIT_OK


def _cmd_tree(args):
    g = _graph(args)
    h = build_hierarchy(g, args.mode, RandomStreams(args.seed), eps=args.eps)
    T = build_tree(refine(h, g), g)
    _emit(args, T.to_dict(), T.to_dict()["nodes"])
    return EXIT_OK


def _cmd_stretch(args):
    g = _graph(args)
    rep = stretch_stats(g, args.trials, args.mode, RandomStreams(args.seed), eps=args.eps, max_pairs=args.max_pairs)
    _emit(args, {**rep.summary(), "pairs_detail": rep.rows()}, rep.rows())
    return EXIT_OK if rep.dominance_violations == 0 else EXIT_FAIL


def _cmd_separation(args):
    g = _graph(args)
    u, v = _check_vertex(g, args.u, "u"), _check_vertex(g, args.v, "v")
    if u == v:
        raise UsageError("u and v must differ")
    p, band = estimate_separation(g, u, v, args.level, args.trials, args.mode, RandomStreams(args.seed), args.eps)
    bound = min(1.0, 2.0 * g.distance(u, v) / 2**args.level)
    row = {"u": u, "v": v, "level": args.level, "frequency": p, "bound": bound, "band": band,
           "passed": p <= bound + band}
    _emit(args, row, [row])
    return EXIT_OK


def _cmd_center_sum(args):
    g = _graph(args)
    v = _check_vertex(g, args.vertex)
    mean, band = estimate_center_sum(g, v, args.trials, args.mode, RandomStreams(args.seed), args.eps)
    row = {"vertex": v, "mean": mean, "band": band, "bound": 16.0 * math.log(g.n) if g.n > 1 else 0.0}
    _emit(args, row, [row])
    return EXIT_OK


def _cmd_ball_growth(args):
    g = _graph(args)
    verts = [_check_vertex(g, args.vertex)] if args.vertex is not None else range(g.n)
    rows = []
    for v in verts:
        prof = ball_growth_profile(g, v)
        rows.append({"vertex": v, "delta": list(prof.delta), "r": [str(x) for x in prof.r],
                     "delta_sum": prof.delta_sum(), "recurrence": prof.recurrence_holds()})
    _emit(args, {"profiles": rows}, [{**r, "delta": " ".join(map(str, r["delta"])), "r": " ".join(r["r"])}
                                     for r in rows])
    ok = all(r["delta_sum"] <= 2.0 * math.log(g.n) if g.n > 1 else r["delta_sum"] == 0 for r in rows)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_routing(args):
    if args.action == "build":
        if not args.out:
            raise UsageError("routing build needs --out")
        g = _graph(args)
        op = build_routing_operator(g, args.mode, RandomStreams(args.seed), log_base=args.dcnt_log_base,
                                    eps=args.eps)
        save_operator(op, args.out)
        print(json.dumps({"n": g.n, "m": g.m, "L": op.L, "dcnt": op.dcnt, "routes": len(op.routes),
                          "segments": op.paths.n_segments}, sort_keys=True))
        return EXIT_OK
    if args.action == "certify":
        if not args.out:
            raise UsageError("routing certify needs --out")
        g = _graph(args)
        op, attempts = verify_or_rebuild(g, args.mode, RandomStreams(args.seed), args.threshold,
                                         log_base=args.dcnt_log_base, eps=args.eps)
        save_operator(op, args.out)
        print(json.dumps({"attempts": attempts, "max_ratio": verify_competitive_ratio(op).max_ratio},
                         sort_keys=True))
        return EXIT_OK
    op = load_operator(args.operator)
    if args.action == "apply":
        write_vector(op.apply(read_vector(args.vector)), args.out)
        return EXIT_OK
    if args.action == "transpose":
        write_vector(op.apply_transpose(read_vector(args.vector)), args.out)
        return EXIT_OK
    rep = verify_competitive_ratio(op, threshold=args.threshold)
    _emit(args, rep.summary(op.graph.n),
          [{"u": int(u), "v": int(v), "ratio": float(r)}
           for u, v, r in zip(op.graph.edge_u, op.graph.edge_v, rep.ratios)])
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_experiment(args):
    constants = {k: float(v) for k, v in _pairs(args.constant).items()}
    cfg = ExperimentConfig(args.name, args.graph, seed=args.seed, mode=args.mode, trials=args.trials, eps=args.eps,
                           dcnt_log_base=args.dcnt_log_base, constants=constants, params=_pairs(args.param),
                           out=args.out, format=args.format)
    report = run_experiment(cfg)
    if not args.out:
        sys.stdout.write(report.to_json() if args.format == "json" else report.to_csv())
    print(f"{report.experiment}: {'pass' if report.passed else 'FAIL'} in {report.wall_clock:.2f}s",
          file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "parse": _cmd_parse,
    "decompose": _cmd_decompose,
    "hierarchy": _cmd_hierarchy,
    "tree": _cmd_tree,
    "stretch": _cmd_stretch,
    "separation": _cmd_separation,
    "center-sum": _cmd_center_sum,
    "ball-growth": _cmd_ball_growth,
    "routing": _cmd_routing,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        return COMMANDS[args.verb](args)
    except (RoutingBuildError, CertificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, GraphFormatError, DisconnectedGraphError, GeneratorError, UnbalancedDemandError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
