"""Tree embeddings induced by refined hierarchies, and their stretch."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import WeightedGraph
from .hierarchy import RefinedHierarchy, build_hierarchy, normalize_mode, refine
from .lca import EulerTourLCA
from .rng import as_streams


@dataclass(frozen=True, eq=False)
class TreeEmbedding:
    """One node per (level, refined cluster); leaves are the graph vertices.

    Node ids are ``level_offset[l] + cluster id``.  ``parent_weight`` of a
    node is the graph distance between its center and its parent's center.
    """

    L: int
    level_offset: np.ndarray
    node_level: np.ndarray
    node_center: np.ndarray
    node_parent: np.ndarray
    parent_weight: np.ndarray
    depth_weight: np.ndarray
    leaf_of: np.ndarray
    parts: tuple[np.ndarray, ...]
    lca_index: EulerTourLCA = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_level)

    def lca(self, u: int, v: int) -> int:
        """LCA node of the leaves of graph vertices u and v."""
        return self.lca_index.lca(int(self.leaf_of[u]), int(self.leaf_of[v]))

    def distance_matrix(self) -> np.ndarray:
        """All-pairs tree distances: a pair pays both climbing edges at every level where it is split."""
        n = len(self.leaf_of)
        out = np.zeros((n, n))
        for l in range(self.L):
            part = self.parts[l]
            climb = self.parent_weight[self.level_offset[l] + part]
            split = part[:, None] != part[None, :]
            out += split * (climb[:, None] + climb[None, :])
        return out

    def to_dict(self) -> dict:
        nodes = [
            {
                "id": i,
                "level": int(self.node_level[i]),
                "center": int(self.node_center[i]),
                "parent": int(self.node_parent[i]) if self.node_parent[i] >= 0 else None,
                "parentWeight": float(self.parent_weight[i]),
            }
            for i in range(self.n_nodes)
        ]
        return {"nodes": nodes, "leafOf": {str(v): int(x) for v, x in enumerate(self.leaf_of)}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def build_tree(refined: RefinedHierarchy, graph: WeightedGraph) -> TreeEmbedding:
    L = refined.L
    sizes = [refined.n_clusters(l) for l in range(L + 1)]
    offset = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    total = int(offset[-1])
    level = np.empty(total, dtype=np.int64)
    center = np.empty(total, dtype=np.int64)
    parent = np.full(total, -1, dtype=np.int64)
    weight = np.zeros(total)
    for l in range(L + 1):
        ids = slice(offset[l], offset[l + 1])
        level[ids] = l
        center[ids] = refined.centers[l]
        if l < L:
            up = refined.parent_cluster[l]
            parent[ids] = offset[l + 1] + up
            up_centers = refined.centers[l + 1][up]
            # one SSSP per distinct center of the level above
            for c in np.unique(up_centers):
                mask = up_centers == c
                weight[offset[l] + np.flatnonzero(mask)] = graph.distances_from(int(c))[refined.centers[l][mask]]
    depth = np.zeros(total)
    for l in range(L - 1, -1, -1):
        ids = np.arange(offset[l], offset[l + 1])
        depth[ids] = depth[parent[ids]] + weight[ids]
    leaf_of = offset[0] + refined.parts[0]
    return TreeEmbedding(L, offset, level, center, parent, weight, depth, leaf_of,
                         refined.parts, EulerTourLCA(parent))


def tree_distance(T: TreeEmbedding, u: int, v: int) -> float:
    n = len(T.leaf_of)
    for x in (u, v):
        if not (isinstance(x, (int, np.integer)) and 0 <= x < n):
            raise KeyError(f"unknown vertex {x!r}")
    if u == v:
        return 0.0
    a = T.lca(u, v)
    return float(T.depth_weight[T.leaf_of[u]] + T.depth_weight[T.leaf_of[v]] - 2.0 * T.depth_weight[a])


def sample_tree(graph: WeightedGraph, mode: str = "exact", rng=0, eps: float | None = None) -> TreeEmbedding:
    h = build_hierarchy(graph, mode, rng, eps=eps)
    return build_tree(refine(h, graph), graph)


@dataclass
class StretchReport:
    n: int
    trials: int
    mode: str
    pairs: np.ndarray
    mean_stretch: np.ndarray
    max_mean_stretch: float
    worst_pair: tuple[int, int]
    dominance_violations: int
    min_stretch: float

    @property
    def constant(self) -> float:
        """max mean stretch / ln n, the measured constant."""
        return self.max_mean_stretch / math.log(self.n) if self.n > 1 else 0.0

    def summary(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "mode": self.mode,
            "pairs": int(len(self.pairs)),
            "max_mean_stretch": self.max_mean_stretch,
            "worst_pair": list(self.worst_pair),
            "measured_constant": self.constant,
            "dominance_violations": self.dominance_violations,
            "min_stretch": self.min_stretch,
        }

    def rows(self) -> list[dict]:
        return [
            {"u": int(u), "v": int(v), "mean_stretch": float(s)}
            for (u, v), s in zip(self.pairs, self.mean_stretch)
        ]


def stretch_stats(graph: WeightedGraph, trials: int, mode: str = "exact", rng=0, *,
                  eps: float | None = None, max_pairs: int = 256 * 255 // 2) -> StretchReport:
    """Mean stretch E[dist_T]/dist_G per pair over ``trials`` independent trees."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    mode = normalize_mode(mode)
    streams = as_streams(rng)
    n = graph.n
    iu, iv = np.triu_indices(n, k=1)
    if len(iu) > max_pairs:
        pick = np.sort(streams.spawn("pairs").generator().choice(len(iu), size=max_pairs, replace=False))
        iu, iv = iu[pick], iv[pick]
    dg = graph.distance_matrix()[iu, iv] if n > 1 else np.zeros(0)
    total = np.zeros(len(iu))
    violations = 0
    min_stretch = math.inf
    for t in range(trials):
        T = sample_tree(graph, mode, streams.spawn("tree", t), eps)
        dt = T.distance_matrix()[iu, iv]
        violations += int((dt < dg - 1e-9 * np.maximum(1.0, dg)).sum())
        if len(dg):
            min_stretch = min(min_stretch, float((dt / dg).min()))
        total += dt
    mean = total / trials / dg if len(dg) else np.zeros(0)
    if len(mean):
        k = int(np.argmax(mean))
        worst, mx = (int(iu[k]), int(iv[k])), float(mean[k])
    else:
        worst, mx = (0, 0), 1.0
        min_stretch = 1.0
    return StretchReport(n, trials, mode, np.column_stack([iu, iv]), mean, mx, worst, violations, min_stretch)
