"""Binary-heap Dijkstra with offsets, deterministic tie-breaking and restrictions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Sequence

import numpy as np

from .graph import WeightedGraph

INF = math.inf


def dijkstra(adj, n: int, sources, *, label=None, active=None, limit: float = INF, tol: float = 1e-9):
    """Multi-source Dijkstra over an adjacency list ``adj[x] = [(y, w, eid), ...]``.

    ``sources`` is an iterable of ``(vertex, offset)``; a source keeps its
    offset unless a path beats it.  Ties within ``tol`` (relative) go to the
    smaller predecessor id, and a source offset wins a tie against any path.
    ``label`` confines the search to edges whose endpoints share a label;
    ``active`` confines it to vertices flagged true.  Vertices farther than
    ``limit`` are left at infinity.
    """
    dist = [INF] * n
    parent = [-1] * n
    done = [False] * n
    heap: list[tuple[float, int]] = []
    for s, off in sources:
        if off < dist[s]:
            dist[s] = off
    for s in range(n):
        if dist[s] < INF:
            heappush(heap, (dist[s], s))
    while heap:
        d, x = heappop(heap)
        if done[x]:
            continue
        if d > limit:
            break
        done[x] = True
        lx = label[x] if label is not None else None
        for y, w, _ in adj[x]:
            if done[y]:
                continue
            if label is not None and label[y] != lx:
                continue
            if active is not None and not active[y]:
                continue
            nd = d + w
            dy = dist[y]
            slack = tol * max(1.0, nd, dy) if dy < INF else 0.0
            if nd < dy - slack:
                dist[y] = nd
                parent[y] = x
                heappush(heap, (nd, y))
            elif parent[y] != -1 and x < parent[y] and nd <= dy + slack:
                parent[y] = x
    if limit < INF:
        for x in range(n):
            if not done[x]:
                dist[x] = INF
                parent[x] = -1
    return dist, parent


@dataclass(frozen=True)
class SsspResult:
    dist: np.ndarray
    parent: np.ndarray
    source_offsets: dict = field(default_factory=dict)
    eps: float = 0.0

    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent < 0)

    def root_of(self, v: int) -> int:
        while self.parent[v] >= 0:
            v = int(self.parent[v])
        return v


def _normalize_sources(graph: WeightedGraph, sources) -> dict[int, float]:
    offsets: dict[int, float] = {}
    for s, off in sources:
        s, off = int(s), float(off)
        if not 0 <= s < graph.n:
            raise ValueError(f"source {s} out of range")
        if not off >= 0:
            raise ValueError(f"source offset {off} must be non-negative")
        offsets[s] = min(off, offsets.get(s, INF))
    if not offsets:
        raise ValueError("at least one source is required")
    return offsets


def sssp_exact(graph: WeightedGraph, sources: Sequence[tuple[int, float]]) -> SsspResult:
    """dist(v) = min over sources (s, o) of o + dist(s, v), with a parent forest."""
    offsets = _normalize_sources(graph, sources)
    dist, parent = dijkstra(graph.adj, graph.n, sorted(offsets.items()))
    return SsspResult(np.array(dist), np.array(parent, dtype=np.int64), offsets)


def sssp_approx(graph: WeightedGraph, sources: Sequence[tuple[int, float]], eps: float) -> SsspResult:
    """(1+eps)-approximate SSSP.

    Backed by the exact solver, which meets the approximation and the
    per-edge smoothness contract |d(u) - d(v)| <= 2 w(u, v) for any eps >= 0.
    """
    if not eps >= 0:
        raise ValueError("eps must be non-negative")
    res = sssp_exact(graph, sources)
    return SsspResult(res.dist, res.parent, res.source_offsets, float(eps))
