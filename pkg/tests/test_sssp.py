import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import connected_graphs, path_graph
from metric_embed.graph import WeightedGraph
from metric_embed.oracles import floyd_warshall
from metric_embed.sssp import dijkstra, sssp_approx, sssp_exact


def test_k2():
    res = sssp_exact(WeightedGraph(2, [(0, 1, 1.0)]), [(0, 0.0)])
    assert res.dist.tolist() == [0.0, 1.0]
    assert res.parent.tolist() == [-1, 0]


def test_offsets_path():
    g = path_graph([1.0, 1.0])
    res = sssp_exact(g, [(0, 0.0), (2, 5.0)])
    assert res.dist.tolist() == [0.0, 1.0, 2.0]
    assert res.roots().tolist() == [0]
    assert res.root_of(2) == 0


def test_duplicate_sources_keep_min_offset():
    g = path_graph([1.0])
    res = sssp_exact(g, [(1, 3.0), (1, 0.5)])
    assert res.dist[1] == 0.5


def test_tie_goes_to_smaller_predecessor():
    # 0 - 1 - 3 and 0 - 2 - 3, all unit: vertex 3 reached via 1 and 2
    g = WeightedGraph(4, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)])
    assert sssp_exact(g, [(0, 0.0)]).parent[3] == 1


def test_source_offset_wins_tie():
    g = path_graph([1.0])
    res = sssp_exact(g, [(0, 0.0), (1, 1.0)])
    assert res.parent[1] == -1


@pytest.mark.parametrize("sources", [[], [(0, -1.0)], [(5, 0.0)]])
def test_bad_sources(sources):
    with pytest.raises(ValueError):
        sssp_exact(path_graph([1.0]), sources)


def test_approx_rejects_negative_eps():
    with pytest.raises(ValueError):
        sssp_approx(path_graph([1.0]), [(0, 0.0)], -0.1)


def test_label_restriction_and_limit():
    g = path_graph([1.0, 1.0, 1.0])
    dist, _ = dijkstra(g.adj, g.n, [(0, 0.0)], label=np.array([0, 0, 1, 1]))
    assert dist[:2] == [0.0, 1.0] and dist[2] == float("inf")
    dist, _ = dijkstra(g.adj, g.n, [(0, 0.0)], limit=1.5)
    assert dist[1] == 1.0 and dist[2] == float("inf")


sources_strategy = st.lists(st.tuples(st.integers(0, 100), st.floats(0, 10)), min_size=1, max_size=4)


@settings(max_examples=60, deadline=None)
@given(connected_graphs(max_n=14), sources_strategy)
def test_exact_matches_all_pairs_oracle(g, raw):
    sources = [(s % g.n, o) for s, o in raw]
    res = sssp_exact(g, sources)
    fw = floyd_warshall(g)
    best = {}
    for s, o in sources:
        best[s] = min(o, best.get(s, np.inf))
    expect = np.min([o + fw[s] for s, o in best.items()], axis=0)
    np.testing.assert_allclose(res.dist, expect, rtol=1e-9, atol=1e-12)
    for v in range(g.n):
        p = res.parent[v]
        if p >= 0:
            assert res.dist[v] == pytest.approx(res.dist[p] + g.weight(p, v), rel=1e-9)
        else:
            assert v in best and res.dist[v] == best[v]
    # roots are exactly sources that win their own race
    for r in res.roots():
        assert res.dist[r] == pytest.approx(best[int(r)])


@settings(max_examples=50, deadline=None)
@given(connected_graphs(max_n=14), sources_strategy, st.floats(0, 0.5))
def test_approx_contract(g, raw, eps):
    sources = [(s % g.n, o) for s, o in raw]
    exact = sssp_exact(g, sources).dist
    approx = sssp_approx(g, sources, eps)
    assert (exact <= approx.dist + 1e-12).all()
    assert (approx.dist <= (1 + eps) * exact + 1e-12).all()
    for u, v, w in g.edges:
        assert abs(approx.dist[u] - approx.dist[v]) <= 2 * w + 1e-12
    if eps == 0:
        assert np.array_equal(approx.dist, exact)


def test_determinism():
    g = WeightedGraph(5, [(0, 1, 1), (1, 2, 2), (2, 3, 1), (3, 4, 1), (0, 4, 3)])
    a = sssp_exact(g, [(0, 0.0), (3, 0.5)])
    b = sssp_exact(g, [(0, 0.0), (3, 0.5)])
    assert np.array_equal(a.dist, b.dist) and np.array_equal(a.parent, b.parent)
