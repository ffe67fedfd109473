"""Small simple graphs: catalogue integrity, isomorphism search, and the
structural predicates used by strategy dispatch.

Oracle Checklist:
- numbers of isomorphism classes on 4 and 5 vertices are 11 and 34 (standard
  enumeration, cross-checked by brute force below).
- catalogue entries pairwise non-isomorphic and exhaustive.
"""

import itertools

import pytest

from cat0 import graphs
from cat0.errors import BadIndex


def test_catalogue_counts():
    four = [graphs.by_name(f"G4_{i}") for i in range(1, 12)]
    five = [graphs.by_name(f"G5_{i}") for i in range(1, 12)]
    assert all(G.n == 4 for G in four)
    assert all(G.n == 5 for G in five)


def test_catalogue_aliases():
    assert graphs.by_name("K5") == graphs.by_name("G5_11")
    assert graphs.by_name("C4") == graphs.by_name("G4_8")
    assert graphs.by_name("C5") == graphs.by_name("G5_1")
    assert len(graphs.by_name("P5").edges) == 4
    with pytest.raises(BadIndex):
        graphs.by_name("G9_1")


def test_four_vertex_catalogue_pairwise_distinct():
    named = [graphs.by_name(f"G4_{i}") for i in range(1, 12)]
    for A, B in itertools.combinations(named, 2):
        assert graphs.find_isomorphism(A, B) is None


def test_iso_class_counts():
    assert len(graphs.all_iso_classes(4)) == 11
    assert len(graphs.all_iso_classes(3)) == 4
    # the five-vertex catalogue covers exactly the min-degree-2 classes
    five = [graphs.by_name(f"G5_{i}") for i in range(1, 12)]
    mindeg2 = [G for G in graphs.all_iso_classes(5)
               if min(G.degree(v) for v in range(5)) >= 2]
    assert len(mindeg2) == len(five)
    for G in mindeg2:
        assert sum(1 for H in five
                   if graphs.find_isomorphism(G, H) is not None) == 1


def test_find_isomorphism_round_trip():
    G = graphs.by_name("G5_7")
    perm = (2, 0, 4, 1, 3)
    H = G.relabel(perm)
    found = graphs.find_isomorphism(G, H)
    assert found is not None
    assert G.relabel(found) == H


def test_find_isomorphism_rejects_distinct():
    assert graphs.find_isomorphism(graphs.by_name("G5_3"),
                                   graphs.by_name("G5_4")) is None


def test_is_semicomplete():
    assert graphs.is_semicomplete(graphs.by_name("K5")) is not None
    # K4 plus one extra vertex of degree < 4
    G = graphs.graph(5, list(itertools.combinations(range(4), 2)) + [(0, 4)])
    assert graphs.is_semicomplete(G) == 4
    assert graphs.is_semicomplete(graphs.by_name("C5")) is None


def test_components_and_connectivity():
    G = graphs.graph(5, [(0, 1), (2, 3)])
    assert not G.is_connected()
    assert G.components() == [[0, 1], [2, 3], [4]]
    assert graphs.by_name("C5").is_connected()


def test_articulation_vertices():
    G = graphs.graph(5, [(0, 1), (1, 2), (2, 3), (3, 1), (0, 4), (4, 1)])
    assert G.articulation_vertices() == [1]
    assert graphs.by_name("C5").articulation_vertices() == []


def test_complement_and_non_edges():
    G = graphs.by_name("C4")
    comp = G.complement()
    assert len(comp.edges) == 2
    assert set(G.non_edges()) == set(comp.edges)


def test_induced_and_relabel():
    G = graphs.by_name("G5_7")
    H = G.induced([0, 1, 2, 3])
    assert H.n == 4
    assert len(H.edges) == sum(
        1 for e in G.edges if e <= {0, 1, 2, 3})


def test_degree_and_neighbors():
    G = graphs.by_name("C5")
    for v in range(5):
        assert G.degree(v) == 2
        assert len(G.neighbors(v)) == 2


def test_bad_edge_rejected():
    with pytest.raises(BadIndex):
        graphs.graph(3, [(0, 3)])
    with pytest.raises(BadIndex):
        graphs.graph(3, [(1, 1)])
