"""Witness construction and verification for graph patterns on small
metric spaces.

Oracle Checklist:
- pattern relations are re-checked here directly against complex distances,
  independently of the construction code paths.
- strategy dispatch smoke cases: semicomplete graph -> Line, path graph on a
  tree metric -> Tree, wheel-like 8-edge graph -> CaseG9.
- chain-root3 space rejected with the frozen certificate value -1/8.
"""

import itertools
import math

import numpy as np
import pytest

from cat0 import boxtimes, complexes, graphs, metric, witness
from cat0.errors import BoxtimesViolated, TooManyPoints


def euclidean5(seed=3):
    return metric.generate("euclidean", 5, seed=seed)


def test_strategy_dispatch_smoke():
    X = euclidean5()
    assert witness.strategy_for(graphs.by_name("K5"), X).tag == "Line"
    assert witness.strategy_for(graphs.by_name("P5"),
                                metric.generate("tree", 5, seed=1)).tag == "Tree"
    assert witness.strategy_for(graphs.by_name("G5_9"), X).tag == "CaseG9"
    assert witness.strategy_for(graphs.by_name("C5"), X).tag == "Cycle"
    assert witness.strategy_for(graphs.by_name("G5_7"), X).tag == "CaseG7"
    assert witness.strategy_for(graphs.by_name("G5_3"), X).tag == "Fan35"
    assert witness.strategy_for(graphs.by_name("G5_4"), X).tag == "Fan46"
    assert witness.strategy_for(graphs.graph(5, [(0, 1)]), X).tag == \
        "SegmentSpacerGlue"
    assert witness.strategy_for(
        graphs.graph(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]),
        X).tag == "PointGlue"


def test_strategy_quotient_on_repeated_points():
    X = euclidean5()
    G = graphs.by_name("C5")
    # map two graph vertices to the same metric point
    assert witness.strategy_for(G, X, f=(0, 1, 2, 3, 0)).tag == "Quotient"


def test_strategy_rejects_six_vertices():
    with pytest.raises(TooManyPoints):
        witness.strategy_for(graphs.graph(6, []), euclidean5())


def check_pattern(X, f, G, W, tol=1e-7):
    """Independent re-check of the required distance relations."""
    band = tol * X.scale
    for u, v in itertools.combinations(range(G.n), 2):
        dx = X.d(f[u], f[v])
        dy = complexes.distance(W.space, W.assignment[u], W.assignment[v])
        if W.kirszbraun_required:
            if W.special_vertex in (u, v):
                assert dy <= dx + band
            else:
                assert dy >= dx - band
        elif G.has_edge(u, v):
            assert dy <= dx + band
        else:
            assert dy >= dx - band


@pytest.mark.parametrize("name", ["K5", "P5", "C4", "C5", "G5_3", "G5_4",
                                  "G5_5", "G5_6", "G5_7", "G5_8", "G5_9",
                                  "G5_10", "G4_6", "G4_8"])
def test_construct_and_verify_named_graphs(name):
    G = graphs.by_name(name)
    for kind in ("euclidean", "tree"):
        X = metric.generate(kind, G.n, seed=5)
        f = tuple(range(G.n))
        W = witness.construct(X, G=G, seed=5)
        rep = witness.verify(X, f, G, W, tol=1e-7)
        assert rep.ok, min(e["slack"] for e in rep.entries)
        check_pattern(X, f, G, W)


def test_equality_pairs_are_exact():
    X = euclidean5()
    G = graphs.by_name("K5")
    W = witness.construct(X, G=G)
    for pair in W.equalities:
        u, v = sorted(pair)
        assert W.distance(u, v) == pytest.approx(X.d(u, v),
                                                 abs=1e-9 * X.scale)


def test_quotient_collapses_duplicates():
    X = euclidean5()
    G = graphs.by_name("C5")
    f = (0, 1, 2, 3, 0)
    W = witness.construct(X, f=f, G=G)
    assert W.strategy == "Quotient"
    assert W.assignment[0] == W.assignment[4]
    rep = witness.verify(X, f, G, W, tol=1e-7)
    assert rep.ok


def test_disconnected_graph_stretches_across_components():
    X = euclidean5()
    G = graphs.graph(5, [(0, 1), (2, 3)])
    W = witness.construct(X, G=G)
    rep = witness.verify(X, tuple(range(5)), G, W, tol=1e-7)
    assert rep.ok
    # cross-component pairs must be stretched to at least the metric distance
    for u, v in ((0, 2), (0, 4), (1, 3), (3, 4)):
        assert W.distance(u, v) >= X.d(u, v) - 1e-7 * X.scale


def test_construct_rejects_violating_space(chain_root3_space):
    with pytest.raises(BoxtimesViolated) as exc_info:
        witness.construct(chain_root3_space, G=graphs.by_name("C4"))
    cert = exc_info.value.certificate
    assert cert.value == pytest.approx(-0.125, abs=1e-9)


def test_verify_flags_corrupted_witness():
    X = euclidean5()
    G = graphs.by_name("C5")
    W = witness.construct(X, G=G)
    Y = metric.FiniteMetricSpace(X.labels, 3.0 * X.dist)
    # the model fits X, so against the inflated metric some non-edge
    # (required >=) must come up short
    rep = witness.verify(Y, tuple(range(5)), G, W, tol=1e-7)
    assert not rep.ok


def test_snowflaked_space_admits_witnesses():
    X = metric.snowflake(metric.generate("euclidean", 5, seed=9), 0.5)
    assert boxtimes.space_satisfies(X).holds
    for name in ("C5", "G5_7", "G5_9"):
        G = graphs.by_name(name)
        W = witness.construct(X, G=G, seed=9)
        assert witness.verify(X, tuple(range(5)), G, W, tol=1e-7).ok


def test_exact_embedding_reproduces_small_spaces():
    for n in (1, 2, 3, 4):
        X = metric.generate("euclidean", n, seed=2)
        C = witness.exact_embedding(X, [f"v{i}" for i in range(n)])
        for i, j in itertools.combinations(range(n), 2):
            assert complexes.distance(C, f"v{i}", f"v{j}") == pytest.approx(
                X.d(i, j), abs=1e-7 * max(X.scale, 1.0))


def test_witness_json_shape():
    X = euclidean5()
    G = graphs.by_name("C5")
    W = witness.construct(X, G=G)
    obj = W.to_json_dict()
    assert set(obj) == {"model", "assignment", "kirszbraun_required",
                        "special_vertex", "strategy"}
    assert obj["strategy"].startswith("Cycle")
    rep = witness.verify(X, tuple(range(5)), G, W, tol=1e-7)
    robj = rep.to_json_dict()
    assert robj["verdict"] == "pass"
    assert len(robj["entries"]) == 10


def test_g9_kirszbraun_flag_consistency():
    # when the wheel-like case relies on the extension theorem the special
    # vertex must be set, and the report must use the row pattern
    for seed in range(8):
        X = metric.generate("complex_sample", 5, seed=seed)
        if not boxtimes.space_satisfies(X).holds:
            continue
        G = graphs.by_name("G5_9")
        W = witness.construct(X, G=G, seed=seed)
        if W.kirszbraun_required:
            assert W.special_vertex is not None
        rep = witness.verify(X, tuple(range(5)), G, W, tol=1e-7)
        assert rep.ok


def test_scaling_invariance_of_verdicts():
    X = euclidean5()
    G = graphs.by_name("G5_7")
    base = witness.construct(X, G=G, seed=1)
    for lam in (1e-3, 1e3):
        Y = metric.FiniteMetricSpace(X.labels, lam * X.dist)
        W = witness.construct(Y, G=G, seed=1)
        assert W.strategy == base.strategy
        assert witness.verify(Y, tuple(range(5)), G, W, tol=1e-7).ok
