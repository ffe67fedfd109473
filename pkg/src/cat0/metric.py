"""Finite metric spaces: validation, comparison angles, restriction, generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
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

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Labeled points with a validated symmetric distance matrix."""

    labels: tuple
    dist: np.ndarray = field(compare=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def scale(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def index(self, label) -> int:
        return self.labels.index(label)

    def to_json_dict(self) -> dict:
        return {"labels": list(self.labels), "d": self.dist.tolist()}


def from_matrix(labels, matrix, tol: float = DEFAULT_TOL) -> FiniteMetricSpace:
    """Validate a distance matrix and wrap it. Triangle slack up to tol*scale."""
    labels = list(labels)
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"labels not unique: {labels}")
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(labels):
        raise BadIndex(f"matrix shape {m.shape} does not match {len(labels)} labels")
    scale = float(np.abs(m).max()) if m.size else 0.0
    band = tol * scale
    if np.any(np.abs(np.diagonal(m)) > band):
        raise NonzeroDiagonal("diagonal entries must vanish")
    if np.any(np.abs(m - m.T) > band):
        raise AsymmetricMatrix("matrix is not symmetric")
    if np.any(m < -band):
        raise NegativeDistance("negative distance entry")
    m = np.maximum(m, 0.0)
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    n = m.shape[0]
    for j in range(n):
        # d[i,k] <= d[i,j] + d[j,k] for all i,k, vectorized over the middle point j
        slack = m - (m[:, j : j + 1] + m[j : j + 1, :])
        worst = slack.max() if slack.size else 0.0
        if worst > band:
            i, k = np.unravel_index(np.argmax(slack), slack.shape)
            raise TriangleViolation(int(i), j, int(k), float(worst))
    return FiniteMetricSpace(tuple(labels), m)


def comparison_angle(X: FiniteMetricSpace, a: int, b: int, c: int) -> float:
    """Euclidean angle at b of the comparison triangle with these side lengths."""
    dab, dbc, dac = X.d(a, b), X.d(b, c), X.d(a, c)
    if dab == 0.0 or dbc == 0.0:
        raise DegenerateVertex(f"zero distance at vertex {b}")
    arg = (dab * dab + dbc * dbc - dac * dac) / (2.0 * dab * dbc)
    return float(np.arccos(np.clip(arg, -1.0, 1.0)))


def restrict(X: FiniteMetricSpace, subset) -> FiniteMetricSpace:
    idx = list(subset)
    if not idx:
        raise EmptySubset("empty subset")
    if any(i < 0 or i >= X.n for i in idx):
        raise BadIndex(f"indices {idx} out of range for n={X.n}")
    sub = X.dist[np.ix_(idx, idx)]
    return FiniteMetricSpace(tuple(X.labels[i] for i in idx), sub)


def snowflake(X: FiniteMetricSpace, alpha: float) -> FiniteMetricSpace:
    if not (0.0 < alpha <= 1.0):
        raise BadExponent(f"alpha must lie in (0,1], got {alpha}")
    return FiniteMetricSpace(X.labels, np.power(X.dist, alpha))


def _labels(n):
    return tuple(f"p{i}" for i in range(n))


def _euclidean(n, dim, rng):
    pts = rng.normal(size=(n, dim))
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def _tree(n, rng):
    # random attachment tree with positive edge weights; distances = path sums
    d = np.zeros((n, n))
    parents = [None] * n
    for v in range(1, n):
        parents[v] = int(rng.integers(0, v))
    w = rng.uniform(0.2, 2.0, size=n)
    depth_dist = np.zeros((n, n))
    for v in range(1, n):
        p = parents[v]
        for u in range(v):
            depth_dist[u, v] = depth_dist[v, u] = depth_dist[u, p] + w[v]
    d[:, :] = depth_dist
    return d


def _perturbed(n, eps, rng, tol):
    # perturb a planar sample until the result is again a valid metric
    for _ in range(10000):
        base = _euclidean(n, 2, rng)
        noise = rng.uniform(-eps, eps, size=(n, n))
        noise = 0.5 * (noise + noise.T)
        m = base * (1.0 + noise)
        np.fill_diagonal(m, 0.0)
        try:
            return from_matrix(_labels(n), m, tol).dist
        except Exception:
            continue
    raise BadParams("perturbed generator failed to find a valid metric")


def _complex_sample(n, rng):
    # sample points on a random fan of triangles (a CAT(0) complex) and read
    # off intrinsic distances
    from . import complexes

    k = int(rng.integers(2, 4))
    sides = rng.uniform(0.5, 2.0, size=k + 1)
    tris = []
    for i in range(k):
        a, b = sides[i], sides[i + 1]
        c = rng.uniform(abs(a - b) + 0.05, a + b - 0.05)
        tris.append((a, c, b))
    marks = []
    for i in range(n):
        piece = int(rng.integers(0, k))
        bary = rng.dirichlet(np.ones(3))
        marks.append((f"p{i}", piece, bary))
    C = complexes.random_fan(tris, marks)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = complexes.distance(C, f"p{i}", f"p{j}")
    return d


def generate(kind: str, n: int, seed: int, *, dim: int = 3, eps: float = 0.1,
             tol: float = DEFAULT_TOL) -> FiniteMetricSpace:
    """Deterministic corpus generators. kind in {euclidean, tree, perturbed, complex_sample}."""
    if n < 1:
        raise BadParams(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if kind == "euclidean":
        if dim not in (1, 2, 3):
            raise BadParams(f"dim must be 1, 2 or 3, got {dim}")
        d = _euclidean(n, dim, rng)
    elif kind == "tree":
        d = _tree(n, rng)
    elif kind == "perturbed":
        d = _perturbed(n, eps, rng, tol)
    elif kind == "complex_sample":
        d = _complex_sample(n, rng)
    else:
        raise BadParams(f"unknown generator kind {kind!r}")
    return from_matrix(_labels(n), d, tol)


def perturbed_stats(n: int, seed: int, eps: float, trials: int,
                    tol: float = DEFAULT_TOL) -> dict:
    """Rejection statistics for the perturbed generator, plus how often the
    accepted metrics satisfy the box inequalities."""
    from . import boxtimes

    rng = np.random.default_rng(seed)
    rejected = 0
    accepted = 0
    box_holds = 0
    while accepted < trials:
        base = _euclidean(n, 2, rng)
        noise = rng.uniform(-eps, eps, size=(n, n))
        noise = 0.5 * (noise + noise.T)
        m = base * (1.0 + noise)
        np.fill_diagonal(m, 0.0)
        try:
            X = from_matrix(_labels(n), m, tol)
        except Exception:
            rejected += 1
            continue
        accepted += 1
        if boxtimes.space_satisfies(X, tol).holds:
            box_holds += 1
    return {"accepted": accepted, "rejected": rejected, "box_holds": box_holds}
