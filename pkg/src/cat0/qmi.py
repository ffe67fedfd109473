"""Quadratic metric inequalities: evaluation over finite spaces, exhaustive
minimization, associated graphs, and the witness transfer bound."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ArityMismatch, BadIndex, ParamOutOfRange, PatternViolated
from .graphs import SimpleGraph
from .metric import DEFAULT_TOL


@dataclass(frozen=True)
class QuadraticMetricInequality:
    n: int
    coeffs: tuple  # sorted ((i, j), a_ij) pairs; missing pairs are zero

    def __post_init__(self):
        cs = {}
        for pair, a in dict(self.coeffs).items():
            i, j = sorted(pair)
            if not (0 <= i < j < self.n):
                raise BadIndex(f"pair {pair} out of range for arity {self.n}")
            cs[(i, j)] = float(a)
        object.__setattr__(self, "coeffs", tuple(sorted(cs.items())))

    def coeff(self, i: int, j: int) -> float:
        i, j = sorted((i, j))
        return dict(self.coeffs).get((i, j), 0.0)

    def to_json_dict(self) -> dict:
        return {"n": self.n,
                "a": {f"{i},{j}": a for (i, j), a in self.coeffs}}


def qmi_from_json_dict(obj: dict) -> QuadraticMetricInequality:
    coeffs = {tuple(int(s) for s in key.split(",")): float(a)
              for key, a in obj["a"].items()}
    return QuadraticMetricInequality(int(obj["n"]), tuple(coeffs.items()))


def quadrilateral() -> QuadraticMetricInequality:
    """d(xy)^2 + d(yz)^2 + d(zw)^2 + d(wx)^2 - d(xz)^2 - d(yw)^2 >= 0."""
    return QuadraticMetricInequality(4, (
        ((0, 1), 1.0), ((1, 2), 1.0), ((2, 3), 1.0), ((0, 3), 1.0),
        ((0, 2), -1.0), ((1, 3), -1.0)))


def boxtimes_family(s: float, t: float) -> QuadraticMetricInequality:
    """The two-parameter family whose members hold in every CAT(0) space;
    (1/2, 1/2) scaled by 4 is the quadrilateral inequality."""
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
        raise ParamOutOfRange(f"(s, t)=({s}, {t}) outside the unit square")
    return QuadraticMetricInequality(4, (
        ((0, 1), (1 - t) * (1 - s)), ((1, 2), t * (1 - s)), ((2, 3), t * s),
        ((0, 3), (1 - t) * s), ((0, 2), -t * (1 - t)), ((1, 3), -s * (1 - s))))


def evaluate(Q: QuadraticMetricInequality, X, tup) -> float:
    tup = tuple(tup)
    if len(tup) != Q.n:
        raise ArityMismatch(f"tuple length {len(tup)} for arity {Q.n}")
    for v in tup:
        if not (0 <= v < X.n):
            raise BadIndex(f"point index {v} out of range")
    return sum(a * X.d(tup[i], tup[j]) ** 2 for (i, j), a in Q.coeffs)


def min_over_tuples(Q: QuadraticMetricInequality, X):
    """Exhaustive minimum over all |X|^n tuples (repeats allowed)."""
    best = None
    for tup in itertools.product(range(X.n), repeat=Q.n):
        v = evaluate(Q, X, tup)
        if best is None or v < best[0]:
            best = (v, tup)
    return best


def associated_graph(Q: QuadraticMetricInequality) -> SimpleGraph:
    """Graph on the tuple slots whose edges are the positive-coefficient pairs."""
    return SimpleGraph(Q.n, frozenset(
        frozenset(p) for p, a in Q.coeffs if a > 0.0))


def transfer_bound(Q: QuadraticMetricInequality, X, tup, witness_distances,
                   tol: float = DEFAULT_TOL) -> float:
    """Value of Q on the tuple in X, guarded by the pattern precondition:
    the witness distances must be <= on positive-coefficient pairs and >= on
    the rest, which forces evaluate(Q, X, tup) >= the witness-side sum.

    witness_distances: map from slot pairs (i, j) to the witness distance.
    """
    tup = tuple(tup)
    if len(tup) != Q.n:
        raise ArityMismatch(f"tuple length {len(tup)} for arity {Q.n}")
    wd = {tuple(sorted(p)): float(v) for p, v in dict(witness_distances).items()}
    band = tol * X.scale
    pos = {tuple(sorted(p)) for p, a in Q.coeffs if a > 0.0}
    for i, j in itertools.combinations(range(Q.n), 2):
        if (i, j) not in wd:
            raise PatternViolated(f"missing witness distance for pair ({i}, {j})")
        dx = X.d(tup[i], tup[j])
        if (i, j) in pos:
            if wd[(i, j)] > dx + band:
                raise PatternViolated(
                    f"pair ({i}, {j}) has positive coefficient but witness "
                    f"distance {wd[(i, j)]} > {dx}")
        elif wd[(i, j)] < dx - band:
            raise PatternViolated(
                f"pair ({i}, {j}) has nonpositive coefficient but witness "
                f"distance {wd[(i, j)]} < {dx}")
    return evaluate(Q, X, tup)


def witness_side(Q: QuadraticMetricInequality, witness_distances) -> float:
    """Sum of a_ij times squared witness distances (the lower side of the
    transfer chain)."""
    wd = {tuple(sorted(p)): float(v) for p, v in dict(witness_distances).items()}
    return sum(a * wd[p] ** 2 for p, a in Q.coeffs)
