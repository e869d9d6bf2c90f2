import io
import math

import numpy as np
import pytest
from hypothesis import given, settings

from helpers import connected_graphs, triangle
from metric_embed.graph import (DisconnectedGraphError, GraphFormatError, WeightedGraph, WeightRangeError,
                                num_levels, parse_graph, read_graph)
from metric_embed.oracles import floyd_warshall


def test_parse_k2():
    g = parse_graph("2 1\n1 2 1.0\n")
    assert (g.n, g.m, g.edges) == (2, 1, ((0, 1, 1.0),))


def test_parse_single_vertex():
    g = parse_graph("1 0")
    assert (g.n, g.m, g.W) == (1, 0, 1.0)
    assert num_levels(g) == 0


def test_parallel_edges_collapse_to_minimum():
    g = parse_graph("3 4\n1 2 1.0\n2 3 1.0\n1 3 1.0\n1 2 2.0\n")
    assert g.m == 3
    assert g.weight(0, 1) == 1.0
    again = parse_graph(g.to_edge_list())
    assert again.m == 3 and again.edges == g.edges


def test_parallel_edge_order_does_not_matter():
    a = parse_graph("2 2\n1 2 2.0\n2 1 1.5\n")
    assert a.edges == ((0, 1, 1.5),)


def test_self_loop_dropped():
    g = parse_graph("2 2\n1 1 3.0\n1 2 1.0\n")
    assert g.edges == ((0, 1, 1.0),)


def test_comments_and_blank_lines():
    g = parse_graph("# header\n\n3 2\n1 2 1\n# mid\n2 3 4.5\n")
    assert g.W == 4.5


def test_stream_input():
    g = parse_graph(io.StringIO("2 1\n1 2 3\n"))
    assert g.weight(1, 0) == 3.0


@pytest.mark.parametrize("text, line", [
    ("2 1\n1 2 x\n", 2),
    ("2 1\n1 3 1.0\n", 2),
    ("2\n1 2 1\n", 1),
    ("2 1\n1 2\n", 2),
    ("3 1\n1 2 1\n2 3 1\n", 3),
    ("2 1\n1 2 1.0\n", None),
])
def test_parse_errors_report_line(text, line):
    if line is None:
        parse_graph(text)
        return
    with pytest.raises(GraphFormatError) as info:
        parse_graph(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


def test_weight_below_one_rejected():
    with pytest.raises(WeightRangeError) as info:
        parse_graph("2 1\n1 2 0.5\n")
    assert info.value.lineno == 2


@pytest.mark.parametrize("tok", ["nan", "inf", "-2"])
def test_nonfinite_weight_rejected(tok):
    with pytest.raises(WeightRangeError):
        parse_graph(f"2 1\n1 2 {tok}\n")


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraphError):
        parse_graph("3 1\n1 2 1\n")


def test_dimacs_symmetrized():
    text = "c demo\np sp 3 3\na 1 2 2\na 2 1 1\na 2 3 4\n"
    g = parse_graph(text, "dimacs")
    assert g.edges == ((0, 1, 1.0), (1, 2, 4.0))


def test_dimacs_errors():
    with pytest.raises(GraphFormatError):
        parse_graph("a 1 2 1\n", "dimacs")
    with pytest.raises(GraphFormatError) as info:
        parse_graph("p sp 2 1\nx 1 2\n", "dimacs")
    assert info.value.lineno == 2
    with pytest.raises(GraphFormatError):
        parse_graph("p sp 2 2\na 1 2 1\n", "dimacs")


def test_unknown_format():
    with pytest.raises(ValueError):
        parse_graph("1 0", "xml")


def test_read_graph_by_extension(tmp_path):
    p = tmp_path / "g.gr"
    p.write_text("p sp 2 1\na 1 2 1\n")
    assert read_graph(str(p)).m == 1
    q = tmp_path / "g.txt"
    q.write_text("2 1\n1 2 1\n")
    assert read_graph(str(q)).m == 1


def test_num_levels():
    assert num_levels(parse_graph("2 1\n1 2 1")) == 1
    assert num_levels(triangle((1, 1, 3))) == math.ceil(math.log2(9))


def test_incidence_orientation():
    g = triangle()
    inc = g.incidence().toarray()
    assert inc.shape == (3, 3)
    for e, (u, v, _) in enumerate(g.edges):
        assert inc[u, e] == 1 and inc[v, e] == -1


def test_distance_cache_read_only():
    g = triangle((1, 1, 5))
    d = g.distances_from(0)
    assert d.tolist() == [0.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        d[0] = 3.0


def test_digest_depends_on_weights():
    assert triangle().digest() != triangle((1, 1, 2)).digest()
    assert triangle().digest() == triangle().digest()


@settings(max_examples=60, deadline=None)
@given(connected_graphs(max_n=16))
def test_invariants(g):
    assert all(u < v and 1 <= w <= g.W for u, v, w in g.edges)
    assert list(g.edges) == sorted(g.edges)
    for u, v, w in g.edges:
        assert (v, w, g.edge_id(u, v)) in g.adj[u]
        assert (u, w, g.edge_id(u, v)) in g.adj[v]
    assert sum(len(a) for a in g.adj) == 2 * g.m
    assert parse_graph(g.to_edge_list()).edges == g.edges


@settings(max_examples=60, deadline=None)
@given(connected_graphs(max_n=16))
def test_distance_matrix_matches_floyd_warshall(g):
    np.testing.assert_allclose(g.distance_matrix(), floyd_warshall(g), rtol=1e-9)
