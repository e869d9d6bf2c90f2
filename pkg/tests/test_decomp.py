import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import connected_graphs, path_graph
from metric_embed.decomp import (Clustering, approx_random_shift_decompose, blur, blur_rounds, default_eps,
                                 random_shift_decompose, sample_clustering)
from metric_embed.generators import generate_graph
from metric_embed.graph import WeightedGraph
from metric_embed.oracles import floyd_warshall
from metric_embed.rng import RandomStreams, ShiftVector, sample_capped_shifts


def shifts(*vals, D=1.0):
    return ShiftVector(np.array(vals, dtype=float), D)


def check_clustering(g: WeightedGraph, cl: Clustering, exact: bool):
    fw = floyd_warshall(g)
    assert len(cl.assignment) == g.n
    if exact:
        assert cl.is_partition()
    for cid, members in enumerate(cl.clusters()):
        assert len(members) > 0
        c = cl.centers[cid]
        assert cl.assignment[c] == cid and cl.center_dist[c] == 0
    for v in range(g.n):
        p = cl.parent[v]
        if p >= 0:
            assert cl.parent_weight[v] == g.weight(p, v)
            assert cl.center_dist[v] == pytest.approx(cl.center_dist[p] + cl.parent_weight[v])
            if exact:
                assert cl.assignment[p] == cl.assignment[v]
        if cl.clustered(v):
            c = cl.center_of(v)
            assert cl.forest_root(v) == c
            assert cl.center_dist[v] >= fw[c, v] - 1e-9


def test_single_vertex():
    g = WeightedGraph(1, [])
    cl = random_shift_decompose(g, 2.0, shifts(0.7))
    assert cl.assignment.tolist() == [0] and cl.centers.tolist() == [0]
    approx = approx_random_shift_decompose(g, 2.0, rng=np.random.default_rng(0))
    assert approx.assignment.tolist() == [0]


def test_big_head_start_takes_everything():
    cl = random_shift_decompose(path_graph([1, 1]), 1.0, shifts(5, 0, 0))
    assert cl.assignment.tolist() == [0, 0, 0] and cl.centers.tolist() == [0]


def test_tie_goes_to_smaller_id():
    cl = random_shift_decompose(path_graph([1, 1]), 1.0, shifts(2, 0, 2))
    assert cl.centers.tolist() == [0, 2]
    assert cl.assignment.tolist() == [0, 0, 1]


def test_shift_length_mismatch():
    with pytest.raises(ValueError):
        random_shift_decompose(path_graph([1]), 1.0, shifts(1.0))
    with pytest.raises(ValueError):
        random_shift_decompose(path_graph([1]), 0.0, shifts(1.0, 1.0))


def test_json_round_trip():
    g = generate_graph("grid", {"k": 3})
    cl = sample_clustering(g, 2.0, np.random.default_rng(3))
    back = Clustering.from_dict(__import__("json").loads(cl.to_json()))
    for name in ("assignment", "centers", "parent", "parent_weight", "center_dist"):
        assert np.array_equal(getattr(back, name), getattr(cl, name))
    un = Clustering(1.0, np.array([0, -1]), np.array([0]), np.array([-1, 0]), np.array([0, 1.0]),
                    np.array([0, 1.0]))
    assert un.to_dict()["assignment"] == [0, None]


def test_sample_clustering_mode_check():
    with pytest.raises(ValueError):
        sample_clustering(path_graph([1]), 1.0, np.random.default_rng(0), "fast")


@settings(max_examples=40, deadline=None)
@given(connected_graphs(max_n=14), st.sampled_from([1.0, 2.0, 8.0]), st.integers(0, 2**32))
def test_exact_partition_invariants(g, D, seed):
    cl = sample_clustering(g, D, np.random.default_rng(seed))
    check_clustering(g, cl, exact=True)


@settings(max_examples=40, deadline=None)
@given(connected_graphs(max_n=14), st.sampled_from([1.0, 64.0, 512.0]), st.integers(0, 2**32),
       st.sampled_from([None, 0.3]))
def test_approx_is_subpartition_of_exact(g, D, seed, eps):
    sh = sample_capped_shifts(np.random.default_rng(seed), g.n, D)
    exact = random_shift_decompose(g, D, sh)
    approx = approx_random_shift_decompose(g, D, eps, np.random.default_rng(seed + 1), shifts=sh)
    check_clustering(g, approx, exact=False)
    for v in range(g.n):
        if approx.clustered(v):
            assert approx.center_of(v) == exact.center_of(v)


def test_exact_assignment_maximizes_shift_minus_distance():
    g = generate_graph("erdos-renyi-connected", {"n": 20, "p": 0.2, "W": 3}, 4)
    fw = floyd_warshall(g)
    for seed in range(10):
        sh = sample_capped_shifts(np.random.default_rng(seed), g.n, 4.0)
        cl = random_shift_decompose(g, 4.0, sh)
        score = sh.delta[:, None] - fw
        for v in range(g.n):
            assert score[cl.center_of(v), v] == pytest.approx(score[:, v].max(), abs=1e-9)


def test_blur_rounds():
    assert blur_rounds(64.0, 0.5) == 7
    assert blur_rounds(1.0, 0.1) == 1
    assert default_eps(math.e ** 2) == pytest.approx(1 / 80)


def test_blur_errors():
    g = path_graph([1, 1])
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        blur(g, [], 4.0, rng=rng)
    with pytest.raises(ValueError):
        blur(g, [0, 1, 2], 4.0, rng=rng)
    with pytest.raises(ValueError):
        blur(g, [0], 4.0)


def test_blur_leaves_heavy_vertex_out():
    # every edge at vertex 3 is heavier than the total blur radius
    g = WeightedGraph(4, [(0, 1, 1), (1, 2, 1), (2, 3, 50)])
    D = 64.0
    eps = 0.5
    total = sum(eps**i * D / 64 for i in range(blur_rounds(D, eps)))
    assert total < 50
    for seed in range(20):
        assert blur(g, {0, 1, 2}, D, eps, np.random.default_rng(seed)) == frozenset({0, 1, 2})


@settings(max_examples=40, deadline=None)
@given(connected_graphs(min_n=2, max_n=14), st.sampled_from([64.0, 256.0, 1024.0]), st.integers(0, 2**32),
       st.sampled_from([0.5, 0.25, None]))
def test_blur_monotone_and_capped(g, D, seed, eps):
    X = set(range(max(1, g.n // 2)))
    out = blur(g, X, D, eps, np.random.default_rng(seed))
    assert X <= out
    e = default_eps(g.n) if eps is None else eps
    cap = (1 + e) * sum(e**i * D / 64 for i in range(blur_rounds(D, e)))
    assert cap < D / 16 * (1 + e)
    fw = floyd_warshall(g)
    for w in out - X:
        assert fw[w, sorted(X)].min() <= cap + 1e-9


def test_blur_rarely_separates_close_pair():
    g = path_graph([1.0] * 39)
    D, eps, trials = 2048.0, 0.5, 500
    u, v = 30, 31
    cut = 0
    for t in range(trials):
        out = blur(g, set(range(20)), D, eps, RandomStreams(9).spawn(t).generator())
        cut += (u in out) != (v in out)
    bound = 256 * 1 / D
    assert cut / trials <= bound + 3 * math.sqrt(bound * (1 - bound) / trials)
