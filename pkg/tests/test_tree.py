import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import connected_graphs
from metric_embed.generators import generate_graph, star
from metric_embed.graph import WeightedGraph
from metric_embed.hierarchy import build_hierarchy, refine
from metric_embed.lca import EulerTourLCA
from metric_embed.oracles import floyd_warshall, naive_tree_distance
from metric_embed.tree import build_tree, sample_tree, stretch_stats, tree_distance

K2 = WeightedGraph(2, [(0, 1, 1.0)])


def test_single_vertex_tree():
    T = sample_tree(WeightedGraph(1, []))
    assert T.n_nodes == 1
    assert tree_distance(T, 0, 0) == 0.0


def test_k2_tree():
    T = sample_tree(K2, rng=3)
    assert T.n_nodes == 3
    assert sorted(T.parent_weight[:2].tolist()) == [0.0, 1.0]
    assert tree_distance(T, 0, 1) == 1.0


def test_unknown_vertex():
    T = sample_tree(K2)
    with pytest.raises(KeyError):
        tree_distance(T, 0, 2)
    with pytest.raises(KeyError):
        tree_distance(T, -1, 0)


def test_json_layout():
    g = generate_graph("grid", {"k": 3})
    T = sample_tree(g, rng=1)
    data = json.loads(T.to_json())
    assert set(data) == {"nodes", "leafOf"}
    assert {"id", "level", "center", "parent", "parentWeight"} == set(data["nodes"][0])
    roots = [n for n in data["nodes"] if n["parent"] is None]
    assert len(roots) == 1 and roots[0]["level"] == T.L
    assert len(data["leafOf"]) == g.n


@settings(max_examples=30, deadline=None)
@given(connected_graphs(max_n=14), st.integers(0, 2**32), st.sampled_from(["exact", "approx"]))
def test_tree_invariants(g, seed, mode):
    h = build_hierarchy(g, mode, seed, eps=0.3 if mode == "approx" else None)
    r = refine(h, g)
    T = build_tree(r, g)
    fw = floyd_warshall(g)
    assert T.n_nodes == sum(r.n_clusters(l) for l in range(h.L + 1))
    assert (T.parent_weight >= 0).all()
    assert ((T.node_parent < 0) == (T.node_level == h.L)).all()
    child = T.node_parent >= 0
    assert (T.node_level[T.node_parent[child]] == T.node_level[child] + 1).all()
    for x in np.flatnonzero(child):
        assert T.parent_weight[x] == pytest.approx(fw[T.node_center[x], T.node_center[T.node_parent[x]]])
    dm = T.distance_matrix()
    for u in range(g.n):
        for v in range(g.n):
            d = tree_distance(T, u, v)
            assert d == pytest.approx(dm[u, v], abs=1e-9)
            assert d == pytest.approx(tree_distance(T, v, u))
            assert d == pytest.approx(naive_tree_distance(T.node_parent, T.parent_weight, T.leaf_of[u],
                                                          T.leaf_of[v]), abs=1e-9)
            assert d >= fw[u, v] - 1e-9 * max(1.0, fw[u, v])
            assert (d == 0) == (u == v)


def test_lca_matches_naive_on_large_tree():
    rng = np.random.default_rng(5)
    n = 10_000
    parent = np.array([-1] + [int(rng.integers(0, v)) for v in range(1, n)])
    idx = EulerTourLCA(parent)

    def ancestors(x):
        out = []
        while x >= 0:
            out.append(x)
            x = parent[x]
        return out

    for _ in range(300):
        u, v = rng.integers(0, n, size=2)
        au = set(ancestors(int(u)))
        naive = next(x for x in ancestors(int(v)) if x in au)
        assert idx.lca(int(u), int(v)) == naive


def test_lca_requires_single_root():
    with pytest.raises(ValueError):
        EulerTourLCA(np.array([-1, -1]))


def test_stretch_k2_is_one():
    rep = stretch_stats(K2, 7, "exact", 0)
    assert rep.max_mean_stretch == 1.0 and rep.dominance_violations == 0


def test_stretch_star_leaves():
    rep = stretch_stats(star(4), 30, "exact", 2)
    assert rep.dominance_violations == 0 and rep.min_stretch >= 1.0


def test_stretch_single_vertex_and_trials_check():
    rep = stretch_stats(WeightedGraph(1, []), 1)
    assert rep.max_mean_stretch == 1.0 and len(rep.pairs) == 0
    with pytest.raises(ValueError):
        stretch_stats(K2, 0)


def test_stretch_pair_sampling():
    g = generate_graph("grid", {"k": 5})
    rep = stretch_stats(g, 3, "exact", 1, max_pairs=40)
    assert len(rep.pairs) == 40 and len(rep.rows()) == 40
    assert rep.summary()["measured_constant"] == pytest.approx(rep.max_mean_stretch / math.log(25))
