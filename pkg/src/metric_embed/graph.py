"""Undirected weighted graphs and the two text formats they are read from.

Vertices are 0-based indices internally.  Both text formats use 1-based ids.
"""
from __future__ import annotations

import hashlib
import io
import math
from collections import deque
from typing import Iterable, TextIO

import numpy as np


class GraphFormatError(ValueError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class WeightRangeError(GraphFormatError):
    pass


class DisconnectedGraphError(ValueError):
    pass


def rel_tol(a: float, b: float, tol: float = 1e-9) -> float:
    return tol * max(1.0, abs(a), abs(b))


class WeightedGraph:
    """Connected undirected graph with weights in [1, W].

    Edges are stored once as ``(u, v, w)`` with ``u < v`` and sorted; parallel
    edges collapse to their minimum weight.  Self-loops are dropped since they
    never lie on a shortest path.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]], *, require_connected: bool = True):
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        best: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if not (w >= 1.0 and math.isfinite(w)):
                raise WeightRangeError(f"weight {w} outside [1, W]")
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            if key not in best or w < best[key]:
                best[key] = w
        self.n = n
        self.edges: tuple[tuple[int, int, float], ...] = tuple((u, v, best[(u, v)]) for u, v in sorted(best))
        self.m = len(self.edges)
        self.W = max((w for _, _, w in self.edges), default=1.0)
        self.edge_u = np.array([e[0] for e in self.edges], dtype=np.int64)
        self.edge_v = np.array([e[1] for e in self.edges], dtype=np.int64)
        self.edge_w = np.array([e[2] for e in self.edges], dtype=float)
        self._edge_id = {(u, v): i for i, (u, v, _) in enumerate(self.edges)}
        # adj[x] = [(neighbor, weight, edge id), ...] sorted by neighbor
        adj: list[list[tuple[int, float, int]]] = [[] for _ in range(n)]
        for i, (u, v, w) in enumerate(self.edges):
            adj[u].append((v, w, i))
            adj[v].append((u, w, i))
        for lst in adj:
            lst.sort()
        self.adj = adj
        self._dist_cache: dict[int, np.ndarray] = {}
        if require_connected and not self.is_connected():
            raise DisconnectedGraphError(f"graph with n={n}, m={self.m} is not connected")

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m}, W={self.W:g})"

    def is_connected(self) -> bool:
        seen = [False] * self.n
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            x = queue.popleft()
            for y, _, _ in self.adj[x]:
                if not seen[y]:
                    seen[y] = True
                    count += 1
                    queue.append(y)
        return count == self.n

    def edge_id(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        try:
            return self._edge_id[key]
        except KeyError:
            raise KeyError(f"no edge between {u} and {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_id

    def weight(self, u: int, v: int) -> float:
        return self.edges[self.edge_id(u, v)][2]

    def distances_from(self, s: int) -> np.ndarray:
        """Exact distances from ``s`` (cached, read-only)."""
        row = self._dist_cache.get(s)
        if row is None:
            from .sssp import dijkstra

            dist, _ = dijkstra(self.adj, self.n, [(s, 0.0)])
            row = np.array(dist, dtype=float)
            row.setflags(write=False)
            self._dist_cache[s] = row
        return row

    def distance(self, u: int, v: int) -> float:
        return float(self.distances_from(u)[v])

    def distance_matrix(self) -> np.ndarray:
        return np.vstack([self.distances_from(s) for s in range(self.n)])

    def incidence(self):
        """Sparse n x m matrix; column e is +1 at its low endpoint, -1 at its high endpoint."""
        from scipy import sparse

        rows = np.concatenate([self.edge_u, self.edge_v])
        cols = np.concatenate([np.arange(self.m), np.arange(self.m)])
        vals = np.concatenate([np.ones(self.m), -np.ones(self.m)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n, self.m))

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [f"{u + 1} {v + 1} {w!r}" for u, v, w in self.edges]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_edge_list().encode()).hexdigest()


def num_levels(graph: WeightedGraph) -> int:
    """Top level L = ceil(lg(n * W)); 0 for a single vertex."""
    nw = graph.n * graph.W
    return 0 if nw <= 1 else math.ceil(math.log2(nw))


def _lines(source: str | TextIO) -> Iterable[tuple[int, str]]:
    stream = io.StringIO(source) if isinstance(source, str) else source
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def _parse_weight(tok: str, lineno: int) -> float:
    try:
        w = float(tok)
    except ValueError:
        raise GraphFormatError(f"bad weight {tok!r}", lineno) from None
    if not (w >= 1.0 and math.isfinite(w)):
        raise WeightRangeError(f"weight {tok} outside [1, W]", lineno)
    return w


def _parse_vertex(tok: str, n: int, lineno: int) -> int:
    try:
        x = int(tok)
    except ValueError:
        raise GraphFormatError(f"bad vertex id {tok!r}", lineno) from None
    if not 1 <= x <= n:
        raise GraphFormatError(f"vertex id {x} outside 1..{n}", lineno)
    return x - 1


def _parse_edge_list(source) -> WeightedGraph:
    lines = list(_lines(source))
    if not lines:
        raise GraphFormatError("empty input", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise GraphFormatError("header must be 'n m'", lineno)
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphFormatError("header must be two integers", lineno) from None
    if n < 1 or m < 0:
        raise GraphFormatError("need n >= 1 and m >= 0", lineno)
    body = lines[1:]
    if len(body) != m:
        at = body[m][0] if len(body) > m else (body[-1][0] if body else lineno)
        raise GraphFormatError(f"expected {m} edge lines, found {len(body)}", at)
    edges = []
    for lineno, line in body:
        toks = line.split()
        if len(toks) != 3:
            raise GraphFormatError("edge line must be 'u v w'", lineno)
        u = _parse_vertex(toks[0], n, lineno)
        v = _parse_vertex(toks[1], n, lineno)
        edges.append((u, v, _parse_weight(toks[2], lineno)))
    return WeightedGraph(n, edges)


def _parse_dimacs(source) -> WeightedGraph:
    n = m = None
    edges = []
    for lineno, line in _lines(source):
        toks = line.split()
        kind = toks[0]
        if kind == "c":
            continue
        if kind == "p":
            if n is not None or len(toks) != 4 or toks[1] != "sp":
                raise GraphFormatError("problem line must be 'p sp n m'", lineno)
            try:
                n, m = int(toks[2]), int(toks[3])
            except ValueError:
                raise GraphFormatError("problem line needs integer n m", lineno) from None
            if n < 1 or m < 0:
                raise GraphFormatError("need n >= 1 and m >= 0", lineno)
        elif kind == "a":
            if n is None:
                raise GraphFormatError("arc before problem line", lineno)
            if len(toks) != 4:
                raise GraphFormatError("arc line must be 'a u v w'", lineno)
            u = _parse_vertex(toks[1], n, lineno)
            v = _parse_vertex(toks[2], n, lineno)
            edges.append((u, v, _parse_weight(toks[3], lineno)))
        else:
            raise GraphFormatError(f"unknown line type {kind!r}", lineno)
    if n is None:
        raise GraphFormatError("missing problem line")
    if len(edges) != m:
        raise GraphFormatError(f"expected {m} arcs, found {len(edges)}")
    return WeightedGraph(n, edges)


def parse_graph(source: str | TextIO, format: str = "edge-list") -> WeightedGraph:
    """Read a graph from text or an open stream.

    ``format`` is ``"edge-list"`` (header ``n m`` then ``u v w`` lines) or
    ``"dimacs"`` (``p sp n m`` / ``a u v w``; arcs are symmetrized).
    """
    if format == "edge-list":
        return _parse_edge_list(source)
    if format == "dimacs":
        return _parse_dimacs(source)
    raise ValueError(f"unknown graph format {format!r}")


def read_graph(path: str, format: str | None = None) -> WeightedGraph:
    if format is None:
        format = "dimacs" if path.endswith((".gr", ".dimacs")) else "edge-list"
    with open(path) as fh:
        return parse_graph(fh, format)
