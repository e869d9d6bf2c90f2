"""Synthetic connected graphs with weights in [1, W]."""
from __future__ import annotations

import math

import numpy as np

from .graph import WeightedGraph
from .rng import as_streams

KINDS = ("grid", "path", "star", "erdos-renyi-connected", "random-geometric")


class GeneratorError(ValueError):
    pass


def _weights(gen: np.random.Generator, count: int, W: float) -> np.ndarray:
    if W < 1:
        raise GeneratorError("W must be >= 1")
    if W == 1:
        return np.ones(count)
    return gen.uniform(1.0, W, size=count)


def _int(params: dict, key: str, default=None, lo: int = 1) -> int:
    val = params.get(key, default)
    if val is None:
        raise GeneratorError(f"missing parameter {key!r}")
    try:
        ival = int(val)
    except (TypeError, ValueError):
        raise GeneratorError(f"parameter {key!r} must be an integer") from None
    if ival != float(val) or ival < lo:
        raise GeneratorError(f"parameter {key!r} must be an integer >= {lo}")
    return ival


def _float(params: dict, key: str, default=None, lo: float = 0.0, hi: float = math.inf) -> float:
    val = params.get(key, default)
    if val is None:
        raise GeneratorError(f"missing parameter {key!r}")
    try:
        fval = float(val)
    except (TypeError, ValueError):
        raise GeneratorError(f"parameter {key!r} must be a number") from None
    if not lo <= fval <= hi:
        raise GeneratorError(f"parameter {key!r} must lie in [{lo}, {hi}]")
    return fval


def grid(rows: int, cols: int, W: float = 1.0, gen=None) -> WeightedGraph:
    pairs = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                pairs.append((v, v + 1))
            if i + 1 < rows:
                pairs.append((v, v + cols))
    w = _weights(gen or np.random.default_rng(0), len(pairs), W)
    return WeightedGraph(rows * cols, [(u, v, x) for (u, v), x in zip(pairs, w)])


def path(k: int, W: float = 1.0, gen=None) -> WeightedGraph:
    w = _weights(gen or np.random.default_rng(0), k - 1, W)
    return WeightedGraph(k, [(i, i + 1, x) for i, x in enumerate(w)])


def star(leaves: int, W: float = 1.0, gen=None) -> WeightedGraph:
    w = _weights(gen or np.random.default_rng(0), leaves, W)
    return WeightedGraph(leaves + 1, [(0, i + 1, x) for i, x in enumerate(w)])


def generate_graph(kind: str, params: dict | None = None, rng=0, *, max_retries: int = 200) -> WeightedGraph:
    """Build a connected graph of the given kind; random kinds resample until connected."""
    params = dict(params or {})
    W = _float(params, "W", 1.0, lo=1.0)
    gen = as_streams(rng).spawn("generate", kind).generator()
    if kind == "grid":
        k = params.get("k")
        rows = _int(params, "rows", k)
        cols = _int(params, "cols", k if k is not None else rows)
        return grid(rows, cols, W, gen)
    if kind == "path":
        return path(_int(params, "k", params.get("n")), W, gen)
    if kind == "star":
        return star(_int(params, "k", params.get("leaves"), lo=1), W, gen)
    if kind == "erdos-renyi-connected":
        n = _int(params, "n")
        p = _float(params, "p", lo=0.0, hi=1.0)
        for _ in range(max_retries):
            iu, iv = np.triu_indices(n, k=1)
            keep = gen.random(len(iu)) < p
            w = _weights(gen, int(keep.sum()), W)
            g = WeightedGraph(n, zip(iu[keep].tolist(), iv[keep].tolist(), w.tolist()), require_connected=False)
            if g.is_connected():
                return g
        raise GeneratorError(f"no connected G({n}, {p}) in {max_retries} tries")
    if kind == "random-geometric":
        n = _int(params, "n")
        radius = _float(params, "radius", params.get("r"), lo=0.0)
        for _ in range(max_retries):
            pts = gen.random((n, 2))
            iu, iv = np.triu_indices(n, k=1)
            length = np.linalg.norm(pts[iu] - pts[iv], axis=1)
            keep = length <= radius
            # weight grows linearly with Euclidean length, from 1 up to W at the radius
            w = 1.0 + (W - 1.0) * length[keep] / radius if radius > 0 else np.ones(int(keep.sum()))
            g = WeightedGraph(n, zip(iu[keep].tolist(), iv[keep].tolist(), w.tolist()), require_connected=False)
            if g.is_connected():
                return g
        raise GeneratorError(f"no connected geometric graph (n={n}, r={radius}) in {max_retries} tries")
    raise GeneratorError(f"unknown generator {kind!r}; expected one of {', '.join(KINDS)}")


def parse_generator_spec(spec: str) -> tuple[str, dict]:
    """``gen:kind:k=v,k=v`` -> (kind, params)."""
    parts = spec.split(":", 2)
    if len(parts) < 2 or parts[0] != "gen" or not parts[1]:
        raise GeneratorError(f"bad generator spec {spec!r}; expected gen:kind:key=value,...")
    params: dict = {}
    if len(parts) == 3 and parts[2]:
        for item in parts[2].split(","):
            key, sep, val = item.partition("=")
            if not sep or not key:
                raise GeneratorError(f"bad generator parameter {item!r}")
            params[key.strip()] = val.strip()
    return parts[1], params


def corpus(seed: int = 0) -> dict[str, WeightedGraph]:
    """Small fixed graph collection used by the acceptance checks."""
    out = {
        "k2": path(2),
        "path-5": path(5),
        "star-4": star(4),
        "grid-4x4": grid(4, 4),
        "grid-6x6": grid(6, 6),
    }
    specs = [
        ("path-12-w8", "path", {"k": 12, "W": 8}),
        ("grid-5x5-w4", "grid", {"k": 5, "W": 4}),
        ("er-16", "erdos-renyi-connected", {"n": 16, "p": 0.3}),
        ("er-32", "erdos-renyi-connected", {"n": 32, "p": 0.15}),
        ("er-32-w4", "erdos-renyi-connected", {"n": 32, "p": 0.15, "W": 4}),
        ("geo-24-w4", "random-geometric", {"n": 24, "radius": 0.4, "W": 4}),
    ]
    for name, kind, params in specs:
        out[name] = generate_graph(kind, params, as_streams(seed).spawn("corpus", name))
    return out
