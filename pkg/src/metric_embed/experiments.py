"""Monte Carlo estimators and machine-readable experiment reports."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .decomp import default_eps, sample_clustering
from .generators import generate_graph, parse_generator_spec
from .graph import WeightedGraph, read_graph
from .hierarchy import ball_growth_profile, build_hierarchy, normalize_mode
from .oracles import opt_transshipment
from .rng import RandomStreams, as_streams
from .routing import (build_routing_operator, column_mass, divergence, flow_cost, lipschitz_constants,
                      outflow_residual, verify_competitive_ratio)
from .tree import stretch_stats

EXPERIMENTS = ("stretch", "separation", "center-sum", "ball-growth", "routing-verify", "routing-oracle",
               "approx-clustering")

DEFAULT_CONSTANTS = {
    "stretch": 16.0,
    "separation": 2.0,
    "center_sum": 16.0,
    "center_level": 8.0,
    "ball_growth": 2.0,
    "routing": 64.0,
    "clustered": 0.45,
}


@dataclass
class ExperimentConfig:
    experiment: str
    graph: str = "gen:grid:k=4"
    seed: int = 0
    mode: str = "exact"
    trials: int = 100
    eps: float | None = None
    dcnt_log_base: str = "ln"
    constants: dict = field(default_factory=lambda: dict(DEFAULT_CONSTANTS))
    params: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.mode = normalize_mode(self.mode)
        if self.dcnt_log_base not in ("ln", "lg"):
            raise ValueError("dcnt log base must be ln or lg")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if self.eps is not None and not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        unknown = set(self.constants) - set(DEFAULT_CONSTANTS)
        if unknown:
            raise ValueError(f"unknown constants: {', '.join(sorted(unknown))}")
        self.constants = {**DEFAULT_CONSTANTS, **self.constants}

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d


@dataclass
class Criterion:
    name: str
    invariant: str
    tolerance: str
    measured: float
    bound: float
    passed: bool
    op: str = "<="


@dataclass
class Report:
    experiment: str
    config: dict
    statistics: dict
    criteria: list[Criterion]
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self) -> dict:
        # wall-clock time is left out so identical runs give identical bytes
        return _clean({
            "experiment": self.experiment,
            "config": self.config,
            "statistics": self.statistics,
            "criteria": [asdict(c) for c in self.criteria],
            "passed": self.passed,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["experiment", "criterion", "invariant", "tolerance", "measured", "op", "bound", "passed"])
        for c in self.criteria:
            writer.writerow([self.experiment, c.name, c.invariant, c.tolerance, _num(c.measured), c.op,
                             _num(c.bound), str(c.passed).lower()])
        return buf.getvalue()

    def write(self, path: str, fmt: str = "json") -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() if fmt == "json" else self.to_csv())


def _num(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    return _num(obj)


def load_graph(source: str, seed: int = 0) -> WeightedGraph:
    """A file path, or ``gen:kind:k=v,...`` for a generated graph."""
    if source.startswith("gen:"):
        kind, params = parse_generator_spec(source)
        return generate_graph(kind, params, RandomStreams(seed).spawn("graph"))
    return read_graph(source)


def random_demand(n: int, gen: np.random.Generator) -> np.ndarray:
    """Balanced demand: either a single pair or a centered Gaussian vector."""
    if n < 2:
        return np.zeros(n)
    if gen.random() < 0.5:
        u, v = gen.choice(n, size=2, replace=False)
        d = np.zeros(n)
        q = gen.uniform(0.5, 2.0)
        d[u], d[v] = q, -q
        return d
    d = gen.normal(size=n)
    return d - d.mean()


def _log_n(n: int) -> float:
    return math.log(n) if n > 1 else 0.0


# -- estimators ----------------------------------------------------------------

def separation_frequencies(graph: WeightedGraph, pairs, level: int, trials: int, mode: str = "exact", rng=0,
                           eps: float | None = None) -> np.ndarray:
    """Fraction of ``trials`` decompositions at scale 2^level putting u and v in different clusters.

    Decompositions are shared across all pairs.  A vertex left unclustered
    counts as its own side, so two unclustered vertices are not separated.
    """
    mode = normalize_mode(mode)
    streams = as_streams(rng)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if (pairs[:, 0] == pairs[:, 1]).any():
        raise ValueError("separation needs u != v")
    hits = np.zeros(len(pairs))
    D = float(2**level)
    for t in range(trials):
        cl = sample_clustering(graph, D, streams.spawn("separation", level, t).generator(), mode, eps)
        a = cl.assignment
        hits += a[pairs[:, 0]] != a[pairs[:, 1]]
    return hits / trials


def separation_bound(graph: WeightedGraph, u: int, v: int, level: int, factor: float = 2.0) -> float:
    return factor * graph.distance(u, v) / 2**level


def estimate_separation(graph: WeightedGraph, u: int, v: int, level: int, trials: int, mode: str = "exact",
                        rng=0, eps: float | None = None, factor: float = 2.0) -> tuple[float, float]:
    """Empirical separation probability and the 3-sigma band of the bound it is compared with."""
    p = float(separation_frequencies(graph, [(u, v)], level, trials, mode, rng, eps)[0])
    p0 = min(1.0, separation_bound(graph, u, v, level, factor))
    return p, 3.0 * math.sqrt(p0 * (1.0 - p0) / trials)


def center_sums(graph: WeightedGraph, vertices, trials: int, mode: str = "exact", rng=0,
                eps: float | None = None) -> np.ndarray:
    """trials x len(vertices) x (L + 1) array of centerDist_l(v) / 2^l; unclustered levels contribute 0."""
    mode = normalize_mode(mode)
    streams = as_streams(rng)
    vertices = np.asarray(vertices, dtype=np.int64)
    out = None
    for t in range(trials):
        h = build_hierarchy(graph, mode, streams.spawn("center-sum", t), eps=eps)
        if out is None:
            out = np.zeros((trials, len(vertices), h.L + 1))
        for l, cl in enumerate(h.levels):
            cd = cl.center_dist[vertices]
            out[t, :, l] = np.where(cl.assignment[vertices] >= 0, cd, 0.0) / 2**l
    return out


def estimate_center_sum(graph: WeightedGraph, v: int, trials: int, mode: str = "exact", rng=0,
                        eps: float | None = None) -> tuple[float, float]:
    """Mean of sum_l centerDist_l(v) / 2^l and its 3-sigma band."""
    sums = center_sums(graph, [v], trials, mode, rng, eps)[:, 0, :].sum(axis=1)
    band = 3.0 * float(sums.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return float(sums.mean()), band


def clustering_frequencies(graph: WeightedGraph, D: float, trials: int, rng=0,
                           eps: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per vertex, how often an approximate decomposition clusters it, and how often B(v, D/8) sits in its cluster."""
    streams = as_streams(rng)
    dist = graph.distance_matrix()
    near = dist <= D / 8.0 + 1e-9 * max(1.0, D)
    clustered = np.zeros(graph.n)
    contained = np.zeros(graph.n)
    for t in range(trials):
        cl = sample_clustering(graph, D, streams.spawn("approx-clustering", t).generator(), "approx", eps)
        a = cl.assignment
        ok = a >= 0
        clustered += ok
        same = (a[None, :] == a[:, None]) | ~near
        contained += ok & same.all(axis=1)
    return clustered / trials, contained / trials


# -- experiments ---------------------------------------------------------------

def _criterion(name, invariant, tolerance, measured, bound, op: str = "<=") -> Criterion:
    passed = measured <= bound if op == "<=" else measured >= bound
    return Criterion(name, invariant, tolerance, _num(measured), _num(bound), bool(passed), op)


def _pick_vertices(graph: WeightedGraph, count: int, streams: RandomStreams) -> np.ndarray:
    if count >= graph.n:
        return np.arange(graph.n)
    return np.sort(streams.spawn("vertices").generator().choice(graph.n, size=count, replace=False))


def _levels_param(value, default):
    if value is None:
        return list(default)
    if isinstance(value, str):
        return [int(x) for x in value.replace(";", ",").split(",") if x]
    if isinstance(value, (int, float)):
        return [int(value)]
    return [int(x) for x in value]


def _exp_stretch(cfg, graph, streams):
    rep = stretch_stats(graph, cfg.trials, cfg.mode, streams, eps=cfg.eps)
    C = cfg.constants["stretch"]
    bound = C * _log_n(graph.n) if graph.n > 1 else 1.0
    stats = rep.summary()
    crit = [
        _criterion("dominance", "dist_T(u,v) >= dist_G(u,v) for every sampled tree and pair", "slack 1e-9",
                   rep.dominance_violations, 0),
        _criterion("mean-stretch", "max over pairs of mean stretch <= C ln n", f"C = {C:g}",
                   rep.max_mean_stretch, bound),
    ]
    return stats, crit


def _default_pairs(graph, levels, count, streams):
    dist = graph.distance_matrix()
    iu, iv = np.triu_indices(graph.n, k=1)
    d = dist[iu, iv]
    cand = np.flatnonzero(d <= 2 ** max(levels) / 4.0)
    if len(cand) == 0:
        cand = np.arange(len(iu))
    if len(cand) > count:
        cand = np.sort(streams.spawn("pairs").generator().choice(cand, size=count, replace=False))
    return np.column_stack([iu[cand], iv[cand]])


def _exp_separation(cfg, graph, streams):
    if graph.n < 2:
        raise ValueError("separation needs at least two vertices")
    levels = _levels_param(cfg.params.get("levels"), (2, 3, 4))
    if "u" in cfg.params and "v" in cfg.params:
        pairs = np.array([[int(cfg.params["u"]), int(cfg.params["v"])]])
    else:
        pairs = _default_pairs(graph, levels, int(cfg.params.get("pairs", 20)), streams)
    factor = cfg.constants["separation"]
    rows, crit = [], []
    for l in levels:
        freq = separation_frequencies(graph, pairs, l, cfg.trials, cfg.mode, streams, cfg.eps)
        for (u, v), p in zip(pairs.tolist(), freq):
            p0 = min(1.0, separation_bound(graph, u, v, l, factor))
            band = 3.0 * math.sqrt(p0 * (1.0 - p0) / cfg.trials)
            rows.append({"u": u, "v": v, "level": l, "dist": graph.distance(u, v), "frequency": float(p),
                         "bound": p0, "band": band})
            crit.append(_criterion(f"separation[{u},{v},l={l}]", "P[C(u) != C(v)] <= c dist(u,v) / 2^l + 3 sigma",
                                   f"c = {factor:g}, 3 sigma = {band:.6g}", float(p), p0 + band))
    ratios = [r["frequency"] * 2 ** r["level"] / r["dist"] for r in rows]
    return {"pairs": rows, "measured_constant": max(ratios)}, crit


def _exp_center_sum(cfg, graph, streams):
    verts = _pick_vertices(graph, int(cfg.params.get("vertices", 10)), streams)
    vals = center_sums(graph, verts, cfg.trials, cfg.mode, streams, cfg.eps)
    sums = vals.sum(axis=2)
    means = sums.mean(axis=0)
    bands = 3.0 * sums.std(axis=0, ddof=1) / math.sqrt(cfg.trials) if cfg.trials > 1 else np.zeros(len(verts))
    C = cfg.constants["center_sum"]
    c_level = cfg.constants["center_level"]
    bound = C * _log_n(graph.n)
    crit, rows = [], []
    for i, v in enumerate(verts.tolist()):
        prof = ball_growth_profile(graph, v)
        level_means = vals[:, i, :].mean(axis=0)
        level_bounds = np.array([c_level * (float(r) + 1.0) for r in prof.r])
        rows.append({"vertex": v, "mean": float(means[i]), "band": float(bands[i]),
                     "level_means": level_means.tolist()})
        crit.append(_criterion(f"center-sum[{v}]", "mean of sum_l centerDist_l(v) / 2^l <= C ln n",
                               f"C = {C:g}", float(means[i]), bound))
        crit.append(_criterion(f"center-level-shape[{v}]", "per-level mean centerDist_l(v) / 2^l <= c (r_l + 1)",
                               f"c = {c_level:g}", float((level_means / level_bounds).max()), 1.0))
    stats = {"vertices": rows, "bound": bound,
             "measured_constant": float(means.max() / _log_n(graph.n)) if graph.n > 1 else 0.0}
    return stats, crit


def _exp_ball_growth(cfg, graph, streams):
    n = graph.n
    C = cfg.constants["ball_growth"]
    bound = C * math.log(n) if n > 1 else 0.0
    worst_delta, worst_r, recurrence = 0, 0.0, True
    rows = []
    for v in range(n):
        prof = ball_growth_profile(graph, v)
        worst_delta = max(worst_delta, prof.delta_sum())
        r_bound = 4.0 * math.log(n) + 4 * prof.L + 2 if n > 1 else 4 * prof.L + 2
        worst_r = max(worst_r, float(prof.r_sum()) / r_bound)
        recurrence &= prof.recurrence_holds()
        rows.append({"vertex": v, "delta": list(prof.delta), "r": [str(r) for r in prof.r]})
    crit = [
        _criterion("delta-sum", "sum_l Delta_l <= 2 ln n for every vertex", "exact", worst_delta, bound),
        _criterion("recurrence", "r_l = r_{l-1} / 2 + Delta_l + 2 with r_0 = 1", "exact rationals",
                   0 if recurrence else 1, 0),
        _criterion("r-sum", "sum_l r_l <= 4 ln n + 4 L + 2 (ratio shown)", "exact", worst_r, 1.0),
    ]
    return {"profiles": rows, "max_delta_sum": worst_delta}, crit


def _routing_common(cfg, graph, streams):
    return build_routing_operator(graph, cfg.mode, streams.spawn("operator"), log_base=cfg.dcnt_log_base,
                                  eps=cfg.eps)


def _exp_routing_verify(cfg, graph, streams):
    op = _routing_common(cfg, graph, streams)
    n = graph.n
    C = cfg.constants["routing"]
    threshold = C * _log_n(n) if n > 1 else math.inf
    ratio = verify_competitive_ratio(op, threshold=threshold)
    gen = streams.spawn("demands").generator()
    cons, adj = 0.0, 0.0
    for _ in range(cfg.trials):
        d = random_demand(n, gen)
        y = gen.normal(size=graph.m)
        f = op.apply(d)
        scale = max(np.abs(d).sum(), 1e-300)
        cons = max(cons, float(np.abs(divergence(graph, f) - d).max(initial=0.0)) / scale)
        lhs, rhs = float(f @ y), float(d @ op.apply_transpose(y))
        adj = max(adj, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    w_lo = min(float((w / op.dcnt).min()) for w in op.weights)
    w_hi = max(float((w / op.dcnt).max()) for w in op.weights)
    mass = float(np.abs(column_mass(op) - 1.0).max(initial=0.0))
    kappa = lipschitz_constants(op)
    stats = {
        **ratio.summary(n),
        "min_ratio": float(ratio.ratios.min(initial=math.inf)) if graph.m else 1.0,
        "L": op.L, "dcnt": op.dcnt, "routes": len(op.routes), "segments": op.paths.n_segments,
        "nnz_B": int(op.B.nnz), "nnz_C": int(op.C.nnz), "kappa": kappa.tolist(),
        "resample_attempts": {str(k): v for k, v in op.attempts.items()},
    }
    crit = [
        _criterion("competitive-ratio", "max_e cost(A(1_u - 1_v)) / dist(u,v) <= C ln n", f"C = {C:g}",
                   ratio.max_ratio, threshold),
        _criterion("ratio-at-least-one", "every edge ratio >= 1", "1e-9", stats["min_ratio"], 1.0 - 1e-9, ">="),
        _criterion("conservation", "divergence(A d) = d", "1e-9 ||d||_1", cons, 1e-9),
        _criterion("adjoint", "<A d, y> = <d, A^T y>", "1e-9 relative", adj, 1e-9),
        _criterion("out-flow", "sum over upper copies of f = share of the lower copy", "1e-9",
                   outflow_residual(op), 1e-9),
        _criterion("column-mass", "coefficients at each level boundary sum to 1 per vertex", "1e-9", mass, 1e-9),
        _criterion("w-lower", "w_l(v) >= Dcnt / 16 (ratio to Dcnt shown)", "exact", w_lo, 1.0 / 16, ">="),
        _criterion("w-upper", "w_l(v) <= Dcnt (ratio to Dcnt shown)", "exact", w_hi, 1.0),
    ]
    return stats, crit


def _exp_routing_oracle(cfg, graph, streams):
    op = _routing_common(cfg, graph, streams)
    edge_max = verify_competitive_ratio(op, threshold=math.inf).max_ratio if graph.m else 1.0
    gen = streams.spawn("demands").generator()
    worst = 0.0
    for _ in range(cfg.trials):
        d = random_demand(graph.n, gen)
        opt = opt_transshipment(graph, d)
        if opt > 0:
            worst = max(worst, flow_cost(graph, op.apply(d)) / opt)
    stats = {"edge_ratio_max": edge_max, "demand_ratio_max": worst, "dcnt": op.dcnt, "L": op.L}
    crit = [_criterion("oracle-ratio", "cost(A d) / OPT(d) <= max edge ratio", "1e-9 relative",
                       worst, edge_max * (1 + 1e-9))]
    return stats, crit


def _exp_approx_clustering(cfg, graph, streams):
    scales = [float(x) for x in _levels_param(cfg.params.get("scales"), (8, 64))]
    floor = cfg.constants["clustered"]
    crit, rows = [], []
    for i, D in enumerate(scales):
        clustered, contained = clustering_frequencies(graph, D, cfg.trials, streams.spawn("scale", i), cfg.eps)
        rows.append({"D": D, "clustered": clustered.tolist(), "contained": contained.tolist()})
        crit.append(_criterion(f"clustered[D={D:g}]", "per-vertex clustered frequency >= floor",
                               f"floor = {floor:g}", float(clustered.min()), floor, ">="))
        crit.append(_criterion(f"contained[D={D:g}]", "frequency of B(v, D/8) inside one cluster >= floor",
                               f"floor = {floor:g}", float(contained.min()), floor, ">="))
    eps = cfg.eps if cfg.eps is not None else default_eps(graph.n)
    return {"scales": rows, "eps": eps}, crit


_DISPATCH = {
    "stretch": _exp_stretch,
    "separation": _exp_separation,
    "center-sum": _exp_center_sum,
    "ball-growth": _exp_ball_growth,
    "routing-verify": _exp_routing_verify,
    "routing-oracle": _exp_routing_oracle,
    "approx-clustering": _exp_approx_clustering,
}


def run_experiment(config: ExperimentConfig, graph: WeightedGraph | None = None) -> Report:
    config.validate()
    start = time.perf_counter()
    if graph is None:
        graph = load_graph(config.graph, config.seed)
    streams = RandomStreams(config.seed).spawn("experiment", config.experiment)
    stats, crit = _DISPATCH[config.experiment](config, graph, streams)
    stats = {"n": graph.n, "m": graph.m, "W": graph.W, "graph_hash": graph.digest(), **stats}
    report = Report(config.experiment, config.to_dict(), stats, crit, time.perf_counter() - start)
    if config.out:
        report.write(config.out, config.format)
    return report
