"""Finite metric space validation, comparison angles, and generators.

Oracle Checklist:
- 3-4-5 triangle: angle at the right-angle vertex is pi/2 (Pythagoras).
- tree generator output satisfies the four-point condition, checked directly.
- snowflake at alpha=1/2 maps d to sqrt(d), checked entrywise.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cat0 import metric
from cat0.errors import (
    AsymmetricMatrix,
    BadExponent,
    BadIndex,
    BadParams,
    DegenerateVertex,
    DuplicateLabel,
    EmptySubset,
    NegativeDistance,
    NonzeroDiagonal,
    TriangleViolation,
)


def test_from_matrix_valid_round_trip(unit_square_space):
    X = unit_square_space
    assert X.n == 4
    assert X.labels == ("a", "b", "c", "d")
    assert X.d(0, 2) == pytest.approx(math.sqrt(2.0))
    assert X.scale == pytest.approx(math.sqrt(2.0))
    obj = X.to_json_dict()
    Y = metric.from_matrix(obj["labels"], obj["d"])
    assert np.allclose(X.dist, Y.dist)


def test_from_matrix_rejects_duplicate_labels():
    with pytest.raises(DuplicateLabel):
        metric.from_matrix(["a", "a"], [[0, 1], [1, 0]])


def test_from_matrix_rejects_shape_mismatch():
    with pytest.raises(BadIndex):
        metric.from_matrix(["a", "b", "c"], [[0, 1], [1, 0]])


def test_from_matrix_rejects_nonzero_diagonal():
    with pytest.raises(NonzeroDiagonal):
        metric.from_matrix(["a", "b"], [[0.5, 1], [1, 0]])


def test_from_matrix_rejects_asymmetry():
    with pytest.raises(AsymmetricMatrix):
        metric.from_matrix(["a", "b"], [[0, 1], [2, 0]])


def test_from_matrix_rejects_negative_entry():
    with pytest.raises(NegativeDistance):
        metric.from_matrix(["a", "b"], [[0, -1], [-1, 0]])


def test_from_matrix_rejects_triangle_violation():
    with pytest.raises(TriangleViolation):
        metric.from_matrix(
            ["a", "b", "c"], [[0, 1, 5], [1, 0, 1], [5, 1, 0]])


def test_from_matrix_tolerance_band_accepts_tiny_slack():
    m = [[0, 1, 2 + 1e-12], [1, 0, 1], [2 + 1e-12, 1, 0]]
    X = metric.from_matrix(["a", "b", "c"], m, tol=1e-9)
    assert X.n == 3


def test_comparison_angle_right_triangle():
    X = metric.from_matrix(["a", "b", "c"], [[0, 3, 5], [3, 0, 4], [5, 4, 0]])
    assert metric.comparison_angle(X, 0, 1, 2) == pytest.approx(math.pi / 2)


def test_comparison_angle_degenerate_vertex():
    X = metric.from_matrix(["a", "b", "c"], [[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    with pytest.raises(DegenerateVertex):
        metric.comparison_angle(X, 0, 1, 2)


def test_restrict_preserves_distances(unit_square_space):
    Y = metric.restrict(unit_square_space, [0, 2, 3])
    assert Y.labels == ("a", "c", "d")
    assert Y.d(0, 1) == pytest.approx(unit_square_space.d(0, 2))
    with pytest.raises(EmptySubset):
        metric.restrict(unit_square_space, [])
    with pytest.raises(BadIndex):
        metric.restrict(unit_square_space, [0, 9])


def test_snowflake_halves_exponent(unit_square_space):
    Y = metric.snowflake(unit_square_space, 0.5)
    assert np.allclose(Y.dist, np.sqrt(unit_square_space.dist))
    with pytest.raises(BadExponent):
        metric.snowflake(unit_square_space, 1.5)


@pytest.mark.parametrize("kind", ["euclidean", "tree", "perturbed",
                                  "complex_sample"])
def test_generate_is_deterministic(kind):
    A = metric.generate(kind, 5, seed=11)
    B = metric.generate(kind, 5, seed=11)
    assert np.array_equal(A.dist, B.dist)


def test_generate_rejects_bad_params():
    with pytest.raises(BadParams):
        metric.generate("euclidean", 0, seed=0)
    with pytest.raises(BadParams):
        metric.generate("euclidean", 4, seed=0, dim=7)
    with pytest.raises(BadParams):
        metric.generate("nope", 4, seed=0)


def test_tree_generator_four_point_condition():
    # of the three pairings, the two largest sums coincide
    for seed in range(30):
        X = metric.generate("tree", 5, seed=seed)
        for i, j, k, l in itertools.combinations(range(5), 4):
            sums = sorted([X.d(i, j) + X.d(k, l),
                           X.d(i, k) + X.d(j, l),
                           X.d(i, l) + X.d(j, k)])
            assert sums[2] - sums[1] < 1e-9 * X.scale


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), dim=st.sampled_from([1, 2, 3]),
       n=st.integers(2, 6))
def test_euclidean_generator_is_valid_metric(seed, dim, n):
    X = metric.generate("euclidean", n, seed=seed, dim=dim)
    # from_matrix already validates; re-check the triangle inequality directly
    for i, j, k in itertools.permutations(range(n), 3):
        assert X.d(i, k) <= X.d(i, j) + X.d(j, k) + 1e-9 * X.scale
