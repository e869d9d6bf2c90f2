"""Shared graph builders and hypothesis strategies for the test suite."""
from __future__ import annotations

from hypothesis import strategies as st

from metric_embed.graph import WeightedGraph

WEIGHTS = st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.25])


def triangle(w=(1.0, 1.0, 1.0)) -> WeightedGraph:
    return WeightedGraph(3, [(0, 1, w[0]), (1, 2, w[1]), (0, 2, w[2])])


def path_graph(weights) -> WeightedGraph:
    return WeightedGraph(len(weights) + 1, [(i, i + 1, w) for i, w in enumerate(weights)])


@st.composite
def connected_graphs(draw, min_n: int = 1, max_n: int = 12, weights=WEIGHTS, max_extra: int = 12):
    """Random spanning tree plus a few extra edges."""
    n = draw(st.integers(min_n, max_n))
    edges = []
    for v in range(1, n):
        edges.append((draw(st.integers(0, v - 1)), v, draw(weights)))
    if n > 2:
        for _ in range(draw(st.integers(0, max_extra))):
            u = draw(st.integers(0, n - 1))
            v = draw(st.integers(0, n - 1))
            if u != v:
                edges.append((u, v, draw(weights)))
    return WeightedGraph(n, edges)


@st.composite
def parent_arrays(draw, min_n: int = 1, max_n: int = 64):
    """Random forest as a parent array (every vertex's parent has a smaller id, then relabelled)."""
    n = draw(st.integers(min_n, max_n))
    perm = draw(st.permutations(range(n)))
    parent = [-1] * n
    for i in range(1, n):
        if draw(st.integers(0, 9)) == 0:
            continue  # extra root
        parent[perm[i]] = perm[draw(st.integers(0, i - 1))]
    return parent
