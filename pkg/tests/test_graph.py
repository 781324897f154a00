import itertools
import math

import numpy as np
import pytest

from gsfw.graph import (EnumerationCapError, Graph, SubgraphModel, as_support,
                        brute_force_best_support, connected_components, enumerate_members,
                        is_member, read_edge_list, support_of, write_edge_list)
from gsfw.rng import Stream


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, ((0, 0),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 1), (1, 0)))
    with pytest.raises(ValueError):
        Graph(3, ((0, 3),))
    with pytest.raises(ValueError):
        Graph(0)


def test_grid_and_adjacency():
    g = Graph.grid(3, 3)
    assert g.d == 9 and g.m == 12
    assert g.adjacency[4] == (1, 3, 5, 7)
    for u, v in g.edges:
        assert v in g.adjacency[u] and u in g.adjacency[v]
    assert list(g.edges) == sorted(g.edges)


def test_relabel():
    g = Graph.path(3).relabel([2, 0, 1])
    # old 2 -> 0, old 0 -> 1, old 1 -> 2
    assert g.edges == ((0, 2), (1, 2))


def test_edge_list_roundtrip(tmp_path):
    g = Graph.grid(3, 2)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    assert read_edge_list(path) == g
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n")
    with pytest.raises(ValueError):
        read_edge_list(bad)
    ok = tmp_path / "c.txt"
    ok.write_text("# comment\nd=3\n\n0 1  # trailing\n1 2\n")
    assert read_edge_list(ok) == Graph.path(3)


def test_components_examples():
    path = Graph.path(5)
    assert connected_components(path, [0, 1, 3]) == [(0, 1), (3,)]
    assert connected_components(path, []) == []
    assert connected_components(Graph.grid(3, 3), [0, 4, 8]) == [(0,), (4,), (8,)]
    with pytest.raises(IndexError):
        connected_components(path, [5])


def test_components_partition_property():
    rng = Stream(3)
    for _ in range(100):
        d = 3 + rng.below(10)
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
        u = rng.uniform(len(pairs))
        graph = Graph(d, tuple(p for p, w in zip(pairs, u) if w < 0.3))
        sup = tuple(i for i, w in enumerate(rng.uniform(d)) if w < 0.5)
        comps = connected_components(graph, sup)
        flat = sorted(i for c in comps for i in c)
        assert flat == list(sup)
        label = {i: k for k, c in enumerate(comps) for i in c}
        for a, b in graph.edges:
            if a in label and b in label:
                assert label[a] == label[b]
        for c in comps:
            assert len(connected_components(graph, c)) == 1


def test_is_member_examples():
    # a 10-node cycle with four separated regions holding five nodes
    ring = Graph(10, tuple((i, (i + 1) % 10) for i in range(10)))
    assert is_member([0, 1, 3, 5, 7], SubgraphModel(ring, s=5, g=4))
    path = Graph.path(5)
    assert not is_member([0, 1, 2, 3], SubgraphModel(path, s=3, g=1))
    assert not is_member([0, 2, 4], SubgraphModel(path, s=3, g=2))
    assert is_member([], SubgraphModel(path, s=1, g=1))


def test_model_validation():
    with pytest.raises(ValueError):
        SubgraphModel(Graph.path(3), s=4)
    with pytest.raises(ValueError):
        SubgraphModel(Graph.path(3), s=2, g=3)
    with pytest.raises(ValueError):
        SubgraphModel(Graph.path(3), s=2, C=0)


def test_support_helpers():
    assert as_support([3, 1, 3]) == (1, 3)
    assert support_of(np.array([0.0, 1.0, 0.0, -2.0])) == (1, 3)


def test_brute_force_examples():
    model = SubgraphModel(Graph.complete(4), s=2, g=1)
    assert brute_force_best_support(np.array([1.0, 2.0, 3.0, 4.0]), model) == ((2, 3), 5.0)
    sup, val = brute_force_best_support(np.zeros(4), model)
    assert val == 0.0


def test_brute_force_cap():
    model = SubgraphModel(Graph.path(21), s=2)
    with pytest.raises(EnumerationCapError):
        brute_force_best_support(np.ones(21), model)


def _reference_members(model):
    out = []
    for k in range(model.s + 1):
        for combo in itertools.combinations(range(model.d), k):
            if len(connected_components(model.graph, combo)) <= model.g:
                out.append(combo)
    return out


def test_enumeration_matches_itertools():
    rng = Stream(11)
    for _ in range(30):
        d = 3 + rng.below(7)
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
        u = rng.uniform(len(pairs))
        graph = Graph(d, tuple(p for p, w in zip(pairs, u) if w < 0.4))
        s = 1 + rng.below(d)
        model = SubgraphModel(graph, s, 1 + rng.below(s))
        assert sorted(enumerate_members(model)) == sorted(_reference_members(model))


def test_brute_force_is_exhaustive_optimum():
    rng = Stream(5)
    for _ in range(50):
        d = 4 + rng.below(9)
        graph = Graph.grid(2, d // 2) if rng.below(2) else Graph.path(d)
        s = 1 + rng.below(graph.d)
        model = SubgraphModel(graph, s, 1 + rng.below(s))
        z = rng.normal(graph.d)
        sup, val = brute_force_best_support(z, model)
        assert is_member(sup, model)
        best = max(math.sqrt(float(np.sum(z[list(m)] ** 2))) for m in enumerate_members(model))
        assert val == pytest.approx(best, rel=1e-12)


def test_brute_force_ties_lexicographic():
    model = SubgraphModel(Graph.path(4), s=1)
    sup, _ = brute_force_best_support(np.array([1.0, -1.0, 1.0, 0.5]), model)
    assert sup == (0,)
