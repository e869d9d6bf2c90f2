"""Brute-force reference implementations used to check the fast paths."""
from __future__ import annotations

import math

import numpy as np

from .graph import WeightedGraph

MAX_OPT_VERTICES = 12


class OracleSizeError(ValueError):
    pass


def floyd_warshall(graph: WeightedGraph) -> np.ndarray:
    n = graph.n
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0.0)
    d[graph.edge_u, graph.edge_v] = graph.edge_w
    d[graph.edge_v, graph.edge_u] = graph.edge_w
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def opt_transshipment(graph: WeightedGraph, demand, *, tol: float = 1e-12) -> float:
    """Minimum weighted l1 cost of a flow with divergence ``demand``.

    Successive shortest paths with Bellman-Ford on the residual network:
    super source -> supplies, both directions of every edge at cost w and
    unbounded capacity, deficits -> super sink.
    """
    n = graph.n
    if n > MAX_OPT_VERTICES:
        raise OracleSizeError(f"transshipment oracle limited to n <= {MAX_OPT_VERTICES}")
    d = np.asarray(demand, dtype=float)
    if d.shape != (n,):
        raise ValueError(f"demand must have length {n}")
    scale = np.abs(d).sum()
    if abs(d.sum()) > 1e-9 * scale:
        raise ValueError("demand is not balanced")
    if scale == 0:
        return 0.0
    s, t = n, n + 1
    # arcs as parallel lists; arc i and i ^ 1 are mutual reverses
    head, cap, cost = [], [], []

    def add(a, b, c, w):
        head.extend([b, a])
        cap.extend([c, 0.0])
        cost.extend([w, -w])
        tails.extend([a, b])

    tails: list[int] = []
    for u, v, w in graph.edges:
        add(u, v, math.inf, w)
        add(v, u, math.inf, w)
    for v in range(n):
        if d[v] > 0:
            add(s, v, d[v], 0.0)
        elif d[v] < 0:
            add(v, t, -d[v], 0.0)
    total = 0.0
    remaining = d[d > 0].sum()
    eps = tol * max(1.0, scale)
    while remaining > eps:
        dist = [math.inf] * (n + 2)
        via = [-1] * (n + 2)
        dist[s] = 0.0
        for _ in range(n + 1):
            changed = False
            for i, b in enumerate(head):
                a = tails[i]
                if cap[i] > eps and dist[a] + cost[i] < dist[b] - 1e-12:
                    dist[b] = dist[a] + cost[i]
                    via[b] = i
                    changed = True
            if not changed:
                break
        if math.isinf(dist[t]):
            raise RuntimeError("demand cannot be routed")
        push = math.inf
        x = t
        while x != s:
            push = min(push, cap[via[x]])
            x = tails[via[x]]
        x = t
        while x != s:
            i = via[x]
            cap[i] -= push
            cap[i ^ 1] += push
            x = tails[i]
        total += push * dist[t]
        remaining -= push
    return float(total)


def naive_tree_distance(parent, weight, leaf_u: int, leaf_v: int) -> float:
    """Tree distance by walking both leaves to the root."""
    def chain(x):
        out = {}
        acc = 0.0
        while x >= 0:
            out[x] = acc
            acc += weight[x]
            x = parent[x]
        return out

    up = chain(int(leaf_u))
    acc = 0.0
    x = int(leaf_v)
    while x not in up:
        acc += weight[x]
        x = parent[x]
    return up[x] + acc


def min_dyadic_cover(lo: int, hi: int, length: int) -> int:
    """Fewest aligned blocks tiling edge positions lo..hi, by dynamic programming over start positions.

    Position length - 1 owns no edge, so a block may also cover it.
    """
    top = max(1, math.ceil(math.log2(length))) if length > 1 else 0
    best = {}
    for s in range(hi, lo - 1, -1):
        cands = []
        for i in range(top + 1):
            if s % (1 << i):
                break
            end = min(s + (1 << i), length)
            if end - 1 > hi and not (end == length and hi == length - 2):
                break
            cands.append(1 + (0 if end > hi else best[end]))
        best[s] = min(cands)
    return best[lo]
