"""Hierarchies of decompositions over scales 2^0..2^L and their refinement."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .decomp import Clustering, rooted_clustering, sample_clustering, singleton_clustering
from .graph import WeightedGraph, num_levels
from .rng import RandomStreams, as_streams

ROOT = 0


def normalize_mode(mode: str) -> str:
    if mode in ("approx", "approximate"):
        return "approx"
    if mode == "exact":
        return "exact"
    raise ValueError(f"unknown mode {mode!r}")


def center_dist_cap(n: int, scale: float) -> float:
    return scale * 10.0 * math.log(n) if n > 1 else math.inf


def build_level(graph: WeightedGraph, l: int, mode: str = "exact", rng=0, *, L: int | None = None,
                copy: int = 0, eps: float | None = None, max_attempts: int = 32) -> Clustering:
    """Level ``l`` of a hierarchy, drawn from substream (level, l, copy).

    Interior levels are resampled while a clustered vertex sits farther than
    2^l * 10 ln n (forest distance) from its center.
    """
    if L is None:
        L = num_levels(graph)
    scale = float(2**l)
    if l == 0:
        return singleton_clustering(graph, scale)
    if l == L:
        return rooted_clustering(graph, ROOT, scale)
    if not 0 < l < L:
        raise ValueError(f"level {l} outside 0..{L}")
    mode = normalize_mode(mode)
    cap = center_dist_cap(graph.n, scale)
    base = as_streams(rng).spawn("level", l, copy)
    for attempt in range(max_attempts):
        gen = base.spawn(attempt).generator()
        cl = sample_clustering(graph, scale, gen, mode, eps)
        clustered = cl.assignment >= 0
        if not clustered.any() or cl.center_dist[clustered].max() <= cap:
            return cl
    raise RuntimeError(f"level {l}: center distance cap violated {max_attempts} times")


@dataclass(frozen=True, eq=False)
class Hierarchy:
    L: int
    levels: tuple[Clustering, ...]
    mode: str = "exact"
    root: int = ROOT


def build_hierarchy(graph: WeightedGraph, mode: str = "exact", rng=0, *, eps: float | None = None) -> Hierarchy:
    mode = normalize_mode(mode)
    L = num_levels(graph)
    streams = as_streams(rng)
    levels = tuple(build_level(graph, l, mode, streams, L=L, eps=eps) for l in range(L + 1))
    return Hierarchy(L, levels, mode)


@dataclass(frozen=True, eq=False)
class RefinedHierarchy:
    """Nested partitions: ``parts[l]`` is the coarsest common refinement of levels l..L.

    ``centers[l][c]`` is the projected center of refined cluster c, and
    ``source_centers[l][v]`` the underlying center it was projected from.
    """

    L: int
    parts: tuple[np.ndarray, ...]
    centers: tuple[np.ndarray, ...]
    parent_cluster: tuple[np.ndarray, ...]
    source_centers: tuple[np.ndarray, ...]

    def n_clusters(self, l: int) -> int:
        return len(self.centers[l])

    def center_of(self, l: int, v: int) -> int:
        return int(self.centers[l][self.parts[l][v]])


def refine(hierarchy: Hierarchy, graph: WeightedGraph) -> RefinedHierarchy:
    """Intersect levels top-down and project each refined cluster's center into it.

    A vertex unclustered at level l shares the label -1 there, so it is
    grouped with vertices carrying the same labels at every level >= l, and
    all of them project the center of the lowest level where they are
    clustered.
    """
    L = hierarchy.L
    n = graph.n
    levels = hierarchy.levels
    parts: list[np.ndarray] = [None] * (L + 1)  # type: ignore[list-item]
    centers: list[np.ndarray] = [None] * (L + 1)  # type: ignore[list-item]
    sources: list[np.ndarray] = [None] * (L + 1)  # type: ignore[list-item]
    parent_cluster: list[np.ndarray] = [None] * L  # type: ignore[list-item]

    top = levels[L]
    if not top.is_partition() or top.n_clusters != 1:
        raise ValueError("top level must be the single cluster V")
    parts[L] = np.zeros(n, dtype=np.int64)
    sources[L] = np.full(n, int(top.centers[0]), dtype=np.int64)
    centers[L] = np.array([int(top.centers[0])], dtype=np.int64)
    for l in range(L - 1, -1, -1):
        cl = levels[l]
        label = cl.assignment
        above = parts[l + 1]
        key = (label + 1) * (above.max() + 1) + above
        _, part = np.unique(key, return_inverse=True)
        part = part.astype(np.int64).reshape(-1)
        src = np.where(label >= 0, cl.centers[np.maximum(label, 0)], sources[l + 1])
        k = int(part.max()) + 1
        ctr = np.empty(k, dtype=np.int64)
        up = np.empty(k, dtype=np.int64)
        order = np.argsort(part, kind="stable")
        bounds = np.searchsorted(part[order], np.arange(k + 1))
        for c in range(k):
            members = order[bounds[c]:bounds[c + 1]]  # ascending vertex ids
            s = int(src[members[0]])
            d = graph.distances_from(s)[members]
            ctr[c] = members[int(np.argmin(d))]
            up[c] = above[members[0]]
        parts[l], centers[l], sources[l], parent_cluster[l] = part, ctr, src, up
    return RefinedHierarchy(L, tuple(parts), tuple(centers), tuple(parent_cluster), tuple(sources))


@dataclass(frozen=True)
class BallGrowthProfile:
    """Ball-growing sequence around one vertex.

    ``r[l]`` for l = 0..L (exact rationals, r[0] = 1); ``delta[l - 1]`` is
    the growth step chosen at level l = 1..L.
    """

    vertex: int
    r: tuple[Fraction, ...]
    delta: tuple[int, ...]
    ball_sizes: tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.delta)

    def delta_sum(self) -> int:
        return sum(self.delta)

    def r_sum(self) -> Fraction:
        return sum(self.r, Fraction(0))

    def recurrence_holds(self) -> bool:
        return self.r[0] == 1 and all(
            self.r[l] == self.r[l - 1] / 2 + self.delta[l - 1] + 2 for l in range(1, len(self.r))
        )


def ball_growth_profile(graph: WeightedGraph, v: int, L: int | None = None) -> BallGrowthProfile:
    """Largest integer step Delta_l with |B(v, (r/2 + Delta + 2) 2^l)| >= e^{Delta/2} |B(v, r 2^{l-1})|."""
    if L is None:
        L = num_levels(graph)
    dists = sorted(graph.distances_from(v).tolist())
    n = graph.n

    def ball(radius: Fraction) -> int:
        rad = float(radius)
        return bisect_right(dists, rad + 1e-9 * max(1.0, rad))

    r = [Fraction(1)]
    delta: list[int] = []
    sizes = [ball(Fraction(1))]
    for l in range(1, L + 1):
        prev_r = r[-1]
        prev = ball(prev_r * 2 ** (l - 1))
        # A step beyond 2 ln(n / prev) cannot satisfy the inequality.
        top = int(math.floor(2.0 * math.log(n / prev))) + 1
        best = 0
        for xi in range(top + 1):
            if ball((prev_r / 2 + xi + 2) * 2**l) >= math.exp(xi / 2) * prev:
                best = xi
        delta.append(best)
        r.append(prev_r / 2 + best + 2)
        sizes.append(ball(r[-1] * 2**l))
    return BallGrowthProfile(int(v), tuple(r), tuple(delta), tuple(sizes))
