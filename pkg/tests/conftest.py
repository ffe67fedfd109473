import math

import numpy as np
import pytest

from cat0 import metric

ROOT3 = math.sqrt(3.0)


def chain_root3_matrix():
    """Four points with unit chain distances and sqrt(3) elsewhere; the
    canonical space that satisfies every metric axiom but embeds in no
    CAT(0) space."""
    return [
        [0.0, 1.0, ROOT3, ROOT3],
        [1.0, 0.0, 1.0, ROOT3],
        [ROOT3, 1.0, 0.0, 1.0],
        [ROOT3, ROOT3, 1.0, 0.0],
    ]


@pytest.fixture
def chain_root3_space():
    return metric.from_matrix(["x1", "x2", "x3", "x4"], chain_root3_matrix())


@pytest.fixture
def unit_square_space():
    r2 = math.sqrt(2.0)
    return metric.from_matrix(
        ["a", "b", "c", "d"],
        [[0, 1, r2, 1], [1, 0, 1, r2], [r2, 1, 0, 1], [1, r2, 1, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
