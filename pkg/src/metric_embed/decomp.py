"""Single-scale random-shift decompositions, exact and with Blur."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph
from .rng import ShiftVector, sample_capped_shifts
from .sssp import dijkstra, sssp_approx, sssp_exact

UNCLUSTERED = -1


@dataclass(frozen=True, eq=False)
class Clustering:
    """One level of a (sub)partition.

    ``assignment[v]`` is a cluster id or -1.  The forest (``parent``,
    ``parent_weight``) is the shortest-path forest the clusters were cut
    from; it spans every vertex, including vertices later dropped by Blur,
    so parent chains from a clustered vertex always end at its center.
    ``center_dist`` is the forest distance to the tree root.
    """

    scale: float
    assignment: np.ndarray
    centers: np.ndarray
    parent: np.ndarray
    parent_weight: np.ndarray
    center_dist: np.ndarray

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def n_clusters(self) -> int:
        return len(self.centers)

    def is_partition(self) -> bool:
        return bool((self.assignment >= 0).all())

    def clustered(self, v: int) -> bool:
        return self.assignment[v] >= 0

    def center_of(self, v: int) -> int | None:
        c = self.assignment[v]
        return int(self.centers[c]) if c >= 0 else None

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cid)

    def clusters(self) -> list[np.ndarray]:
        return [self.members(c) for c in range(self.n_clusters)]

    def forest_root(self, v: int) -> int:
        while self.parent[v] >= 0:
            v = int(self.parent[v])
        return v

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "assignment": [int(c) if c >= 0 else None for c in self.assignment],
            "centers": {str(c): int(x) for c, x in enumerate(self.centers)},
            "forest": {
                "parent": [int(p) if p >= 0 else None for p in self.parent],
                "weight": [float(w) for w in self.parent_weight],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "Clustering":
        assignment = np.array([-1 if c is None else c for c in data["assignment"]], dtype=np.int64)
        centers = np.array([data["centers"][str(c)] for c in range(len(data["centers"]))], dtype=np.int64)
        parent = np.array([-1 if p is None else p for p in data["forest"]["parent"]], dtype=np.int64)
        weight = np.array(data["forest"]["weight"], dtype=float)
        return cls(float(data["scale"]), assignment, centers, parent, weight, _forest_depths(parent, weight))


def _forest_depths(parent: np.ndarray, weight: np.ndarray) -> np.ndarray:
    n = len(parent)
    depth = np.full(n, np.nan)
    for v in range(n):
        chain = []
        x = v
        while np.isnan(depth[x]) and parent[x] >= 0:
            chain.append(x)
            x = int(parent[x])
        if np.isnan(depth[x]):
            depth[x] = 0.0
        for y in reversed(chain):
            depth[y] = depth[parent[y]] + weight[y]
    return depth


def forest_clustering(graph: WeightedGraph, scale: float, dist, parent, keep=None) -> Clustering:
    """Cut a shortest-path forest into clusters, one per tree.

    Parents are strictly closer to the source than children (weights >= 1),
    so a pass in order of ``dist`` sees every parent first.  ``keep`` is an
    optional mask of vertices that stay clustered.
    """
    n = graph.n
    dist = np.asarray(dist, dtype=float)
    parent = np.asarray(parent, dtype=np.int64)
    root = np.arange(n)
    pw = np.zeros(n)
    cdist = np.zeros(n)
    for v in np.argsort(dist, kind="stable"):
        p = parent[v]
        if p >= 0:
            w = graph.weight(int(p), int(v))
            root[v] = root[p]
            pw[v] = w
            cdist[v] = cdist[p] + w
    if keep is None:
        keep = np.ones(n, dtype=bool)
    kept_roots = np.unique(root[keep])
    cid_of_root = np.full(n, -1, dtype=np.int64)
    cid_of_root[kept_roots] = np.arange(len(kept_roots))
    assignment = np.where(keep, cid_of_root[root], -1)
    return Clustering(float(scale), assignment, kept_roots.astype(np.int64), parent, pw, cdist)


def singleton_clustering(graph: WeightedGraph, scale: float = 1.0) -> Clustering:
    n = graph.n
    return Clustering(float(scale), np.arange(n), np.arange(n), np.full(n, -1, dtype=np.int64), np.zeros(n), np.zeros(n))


def rooted_clustering(graph: WeightedGraph, root: int, scale: float) -> Clustering:
    """The single cluster V centered at ``root``; the forest is its shortest-path tree."""
    res = sssp_exact(graph, [(root, 0.0)])
    return forest_clustering(graph, scale, res.dist, res.parent)


def _shift_sources(shifts: ShiftVector):
    delta = shifts.delta
    top = float(delta.max())
    return [(u, top - float(delta[u])) for u in range(len(delta))]


def random_shift_decompose(graph: WeightedGraph, D: float, shifts: ShiftVector) -> Clustering:
    """Exact random-shift clustering for the given shifts.

    Each vertex joins the vertex u maximizing shift(u) - dist(u, v); this is
    an SSSP from a virtual source joined to u with weight max(shift) - shift(u).
    """
    if D <= 0:
        raise ValueError("scale D must be positive")
    if len(shifts) != graph.n:
        raise ValueError(f"expected {graph.n} shifts, got {len(shifts)}")
    res = sssp_exact(graph, _shift_sources(shifts))
    return forest_clustering(graph, D, res.dist, res.parent)


def default_eps(n: int) -> float:
    return 1.0 / (40.0 * math.log(max(n, 2)))


def blur_rounds(D: float, eps: float) -> int:
    return max(0, math.ceil(math.log(D) / math.log(1.0 / eps))) + 1 if D > 1 else 1


def _blur_mask(graph: WeightedGraph, X: np.ndarray, D: float, eps: float, rng: np.random.Generator) -> np.ndarray:
    xhat = X.copy()
    adj = graph.adj
    for i in range(blur_rounds(D, eps)):
        radius = rng.uniform(0.0, eps**i * D / 64.0)
        # Distances from the contracted set: seed its outside neighbours.
        offsets: dict[int, float] = {}
        for x in np.flatnonzero(xhat):
            for y, w, _ in adj[x]:
                if not xhat[y] and w <= radius and w < offsets.get(y, math.inf):
                    offsets[y] = w
        if not offsets:
            continue
        outside = ~xhat
        dist, _ = dijkstra(adj, graph.n, sorted(offsets.items()), active=outside, limit=radius)
        for y in range(graph.n):
            if dist[y] <= radius:
                xhat[y] = True
    return xhat


def blur(graph: WeightedGraph, X, D: float, eps: float | None = None, rng: np.random.Generator | None = None) -> frozenset:
    """Grow X by random radii eps^i * D / 64 for ceil(log_{1/eps} D) + 1 rounds."""
    if rng is None:
        raise ValueError("blur needs a random generator")
    if D <= 0:
        raise ValueError("scale D must be positive")
    mask = np.zeros(graph.n, dtype=bool)
    mask[list(X)] = True
    if not mask.any() or mask.all():
        raise ValueError("blur needs a non-empty proper subset of V")
    if eps is None:
        eps = default_eps(graph.n)
    return frozenset(int(v) for v in np.flatnonzero(_blur_mask(graph, mask, D, eps, rng)))


def approx_random_shift_decompose(graph: WeightedGraph, D: float, eps: float | None = None,
                                  rng: np.random.Generator | None = None, shifts: ShiftVector | None = None) -> Clustering:
    """Random-shift clustering via approximate SSSP, shrunk by Blur.

    Returns a subpartition: each tentative cluster loses the vertices Blur
    absorbs when grown from its complement.
    """
    if rng is None:
        raise ValueError("approximate decomposition needs a random generator")
    if D <= 0:
        raise ValueError("scale D must be positive")
    n = graph.n
    if eps is None:
        eps = default_eps(n)
    if shifts is None:
        shifts = sample_capped_shifts(rng, n, D)
    res = sssp_approx(graph, _shift_sources(shifts), eps)
    tilde = forest_clustering(graph, D, res.dist, res.parent)
    keep = np.ones(n, dtype=bool)
    for cid in range(tilde.n_clusters):
        inside = tilde.assignment == cid
        if inside.all():
            continue
        xhat = _blur_mask(graph, ~inside, D, eps, rng)
        keep[inside & xhat] = False
    return forest_clustering(graph, D, res.dist, res.parent, keep=keep)


def sample_clustering(graph: WeightedGraph, D: float, rng: np.random.Generator, mode: str = "exact",
                      eps: float | None = None) -> Clustering:
    """Draw capped shifts and decompose at scale D."""
    shifts = sample_capped_shifts(rng, graph.n, D)
    if mode == "exact":
        return random_shift_decompose(graph, D, shifts)
    if mode in ("approx", "approximate"):
        return approx_random_shift_decompose(graph, D, eps, rng, shifts=shifts)
    raise ValueError(f"unknown mode {mode!r}")
