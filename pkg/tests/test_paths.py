import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import parent_arrays, path_graph
from metric_embed.decomp import random_shift_decompose
from metric_embed.oracles import min_dyadic_cover
from metric_embed.paths import (PathCollection, build_path_collection, decompose_root_path, dyadic_blocks,
                                dyadic_cover, heavy_light)
from metric_embed.rng import ShiftVector


def walk_to_root(parent, v):
    out = [v]
    while parent[v] >= 0:
        v = parent[v]
        out.append(v)
    return out[::-1]


def concat(pc, segs):
    walk = []
    for s, sign in segs:
        assert sign == 1
        verts = pc.segment_vertices(s)
        if walk:
            assert walk[-1] == verts[0]
            walk.extend(verts[1:])
        else:
            walk.extend(verts)
    return walk


def test_single_edge_tree():
    pc = build_path_collection({"t": np.array([-1, 0])}, 2)
    assert pc.paths == [[0, 1]]
    # scale-0 blocks {1}, {2} and the scale-1 block {1, 2} (1-based positions)
    assert [(lo, hi) for _, _, lo, hi in dyadic_blocks(2)] == [(0, 0), (1, 1), (0, 1)]
    segs = pc.root_path("t", 1)
    assert len(segs) == 1 and pc.segment_edges(segs[0][0]) == [(0, 1)]
    assert pc.root_path("t", 0) == []


def test_path_of_length_seven():
    parent = np.array([-1, 0, 1, 2, 3, 4, 5])
    pc = build_path_collection({0: parent}, 7)
    assert len(pc.paths) == 1
    segs = pc.root_path(0, 6)
    assert len(segs) <= 2 * math.ceil(math.log2(7)) + 2
    assert len(segs) == min_dyadic_cover(0, 5, 7)
    assert concat(pc, segs) == list(range(7))


def test_duplicate_forest_key():
    pc = PathCollection(2)
    pc.add_forest("a", [-1, 0])
    with pytest.raises(ValueError):
        pc.add_forest("a", [-1, 0])
    with pytest.raises(ValueError):
        pc.add_forest("b", [-1])


def test_cycle_rejected():
    with pytest.raises(ValueError):
        heavy_light(np.array([1, 0]))


def test_dyadic_cover_matches_brute_force():
    for length in range(2, 70):
        for lo in range(length - 1):
            for hi in range(lo, length - 1):
                cover = dyadic_cover(lo, hi, length)
                got = set()
                for i, j in cover:
                    got |= set(range(j << i, min((j + 1) << i, length)))
                assert got - {length - 1} == set(range(lo, hi + 1))
                assert len(cover) == min_dyadic_cover(lo, hi, length)


@settings(max_examples=60, deadline=None)
@given(parent_arrays(max_n=80))
def test_heavy_paths_partition_edges(parent):
    parent = np.array(parent)
    paths = heavy_light(parent)
    edges = [(p[k], p[k + 1]) for p in paths for k in range(len(p) - 1)]
    assert len(edges) == len(set(edges))
    assert sorted(edges) == sorted((int(parent[v]), v) for v in range(len(parent)) if parent[v] >= 0)


@settings(max_examples=60, deadline=None)
@given(parent_arrays(max_n=80))
def test_root_paths_reproduce_parent_walk(parent):
    n = len(parent)
    pc = build_path_collection({"f": np.array(parent)}, n)
    lg = math.ceil(math.log2(n)) if n > 1 else 0
    for v in range(n):
        segs = decompose_root_path(pc, "f", v)
        walk = walk_to_root(parent, v)
        assert (concat(pc, segs) if segs else [walk[0]]) == walk
        assert pc.heavy_paths_on_root_path("f", v) <= lg + 1
        assert len(segs) <= (lg + 1) * (2 * lg + 2)


def test_unclustered_vertex_rejected():
    g = path_graph([1.0, 1.0])
    cl = random_shift_decompose(g, 1.0, ShiftVector(np.array([5.0, 0, 0]), 1.0))
    cl.assignment[2] = -1
    pc = build_path_collection({"x": cl.parent}, 3)
    with pytest.raises(ValueError):
        decompose_root_path(pc, "x", 2, clustering=cl)
    assert decompose_root_path(pc, "x", 0, clustering=cl) == []


def test_edge_matrix_signs():
    g = path_graph([1.0, 2.0, 3.0])
    # forest rooted at 3 so its segments run from high ids to low ids
    pc = build_path_collection({"r": np.array([1, 2, 3, -1])}, 4)
    B = pc.edge_matrix(g).toarray()
    for s in range(pc.n_segments):
        for a, b in pc.segment_edges(s):
            assert B[g.edge_id(a, b), s] == (1 if a < b else -1)


def test_random_tree_512_bounds():
    rng = np.random.default_rng(0)
    n = 512
    parent = np.array([-1] + [int(rng.integers(0, v)) for v in range(1, n)])
    pc = build_path_collection({0: parent}, n)
    for v in range(n):
        assert pc.heavy_paths_on_root_path(0, v) <= math.log2(n) + 1
