"""Heavy-light path collections with dyadic segments.

Each forest is split into edge-disjoint vertex sequences: a heavy chain
plus, unless it starts at a root, the light edge above its head.  Position
k of a path "owns" the edge between its k-th and (k+1)-th vertex, and a
segment is an aligned dyadic block of positions, so any run of consecutive
edges is a union of O(log |P|) segments.  Segments are oriented away from
the forest root.
"""
from __future__ import annotations

import math
from typing import Hashable, Mapping

import numpy as np


def heavy_light(parent: np.ndarray) -> list[list[int]]:
    """Edge-disjoint paths covering the forest; heavy child = largest subtree, ties to smaller id."""
    parent = np.asarray(parent, dtype=np.int64)
    n = len(parent)
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        if parent[v] >= 0:
            children[parent[v]].append(v)
    size = np.ones(n, dtype=np.int64)
    order = _topological(parent, children)
    for v in reversed(order):
        if parent[v] >= 0:
            size[parent[v]] += size[v]
    heavy = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        if children[v]:
            # children are ascending, so max() keeps the smallest id on ties
            heavy[v] = max(children[v], key=lambda c: (size[c], -c))
    paths: list[list[int]] = []
    starts = [(int(r), -1) for r in np.flatnonzero(parent < 0)]
    while starts:
        top, head = starts.pop()
        path = [top] if head < 0 else [top, head]
        x = path[-1]
        while heavy[x] >= 0:
            x = int(heavy[x])
            path.append(x)
        if len(path) > 1:
            paths.append(path)
        for y in reversed(path if head < 0 else path[1:]):
            for c in reversed(children[y]):
                if c != heavy[y]:
                    starts.append((y, c))
    return paths


def _topological(parent: np.ndarray, children: list[list[int]]) -> list[int]:
    order = [int(r) for r in np.flatnonzero(parent < 0)]
    i = 0
    while i < len(order):
        order.extend(children[order[i]])
        i += 1
    if len(order) != len(parent):
        raise ValueError("parent array contains a cycle")
    return order


def n_scales(length: int) -> int:
    """Scales 0..ceil(lg length); coarser blocks would repeat the whole path."""
    return max(1, math.ceil(math.log2(length))) + 1 if length > 1 else 1


def dyadic_blocks(length: int) -> list[tuple[int, int, int, int]]:
    """All (scale, block, lo, hi) with hi inclusive, 0-based positions."""
    out = []
    for i in range(n_scales(length)):
        size = 1 << i
        for j in range(-(-length // size)):
            out.append((i, j, j * size, min((j + 1) * size, length) - 1))
    return out


def dyadic_cover(lo: int, hi: int, length: int) -> list[tuple[int, int]]:
    """Greedy cover of positions lo..hi by aligned blocks, as (scale, block) pairs.

    A block may overrun hi only into positions that own no edge (>= length - 1).
    """
    top = n_scales(length) - 1
    out = []
    s = lo
    while s <= hi:
        i = 0
        while i < top and s % (1 << (i + 1)) == 0:
            end = min(s + (1 << (i + 1)), length)
            if end - 1 > hi and not (end == length and hi == length - 2):
                break
            i += 1
        out.append((i, s >> i))
        s += 1 << i
    return out


class PathCollection:
    """Heavy paths and dyadic segments for a set of keyed forests over one vertex set."""

    def __init__(self, n: int):
        self.n = n
        self.paths: list[list[int]] = []
        self.path_forest: list[Hashable] = []
        self._path_base: list[int] = []   # first segment id of each path
        self._scale_base: list[list[int]] = []
        self.seg_path: list[int] = []
        self.seg_lo: list[int] = []
        self.seg_hi: list[int] = []
        self.seg_scale: list[int] = []
        self._forests: dict[Hashable, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    @property
    def n_segments(self) -> int:
        return len(self.seg_path)

    def forests(self):
        return self._forests.keys()

    def parent(self, key) -> np.ndarray:
        return self._forests[key][0]

    def add_forest(self, key: Hashable, parent: np.ndarray) -> None:
        if key in self._forests:
            raise ValueError(f"forest {key!r} already present")
        parent = np.asarray(parent, dtype=np.int64)
        if len(parent) != self.n:
            raise ValueError("forest size mismatch")
        vpath = np.full(self.n, -1, dtype=np.int64)
        vpos = np.full(self.n, -1, dtype=np.int64)
        for path in heavy_light(parent):
            pid = len(self.paths)
            self.paths.append(path)
            self.path_forest.append(key)
            for k, x in enumerate(path[1:], start=1):
                vpath[x] = pid
                vpos[x] = k
            self._path_base.append(len(self.seg_path))
            bases = []
            length = len(path)
            for i, j, lo, hi in dyadic_blocks(length):
                if j == 0:
                    bases.append(len(self.seg_path))
                self.seg_path.append(pid)
                self.seg_scale.append(i)
                self.seg_lo.append(lo)
                self.seg_hi.append(hi)
            self._scale_base.append(bases)
        self._forests[key] = (parent, vpath, vpos)

    def segment_id(self, pid: int, scale: int, block: int) -> int:
        return self._scale_base[pid][scale] + block

    def segment_vertices(self, seg: int) -> list[int]:
        """Vertex walk of a segment in its forward (root-away) direction."""
        path = self.paths[self.seg_path[seg]]
        lo, hi = self.seg_lo[seg], self.seg_hi[seg]
        return path[lo:min(hi + 2, len(path))]

    def segment_edges(self, seg: int) -> list[tuple[int, int]]:
        walk = self.segment_vertices(seg)
        return list(zip(walk[:-1], walk[1:]))

    def interval(self, pid: int, lo: int, hi: int) -> list[int]:
        """Segments covering the edges owned by positions lo..hi of path pid, in order."""
        length = len(self.paths[pid])
        return [self.segment_id(pid, i, j) for i, j in dyadic_cover(lo, hi, length)]

    def root_path(self, key, v: int) -> list[tuple[int, int]]:
        """Signed segments (all forward) whose concatenation is the root-to-v forest path."""
        parent, vpath, vpos = self._forests[key]
        chunks = []
        x = int(v)
        while parent[x] >= 0:
            pid = int(vpath[x])
            chunks.append(self.interval(pid, 0, int(vpos[x]) - 1))
            x = self.paths[pid][0]
        return [(s, 1) for chunk in reversed(chunks) for s in chunk]

    def heavy_paths_on_root_path(self, key, v: int) -> int:
        parent, vpath, _ = self._forests[key]
        count = 0
        x = int(v)
        while parent[x] >= 0:
            count += 1
            x = self.paths[int(vpath[x])][0]
        return count

    def edge_matrix(self, graph):
        """Sparse m x S matrix: +-1 per edge of each segment under the low-to-high orientation."""
        from scipy import sparse

        rows, cols, vals = [], [], []
        for seg in range(self.n_segments):
            for a, b in self.segment_edges(seg):
                rows.append(graph.edge_id(a, b))
                cols.append(seg)
                vals.append(1.0 if a < b else -1.0)
        return sparse.csc_matrix((vals, (rows, cols)), shape=(graph.m, self.n_segments))


def build_path_collection(forests: Mapping[Hashable, np.ndarray], n: int) -> PathCollection:
    pc = PathCollection(n)
    for key, parent in forests.items():
        pc.add_forest(key, parent)
    return pc


def decompose_root_path(collection: PathCollection, key, v: int, *, clustering=None) -> list[tuple[int, int]]:
    """Center-to-v path in forest ``key`` as signed segments.

    With ``clustering`` given, v must be clustered in it.
    """
    if clustering is not None and clustering.assignment[v] < 0:
        raise ValueError(f"vertex {v} is not clustered")
    return collection.root_path(key, v)
