"""The two-parameter quadratic form on quadruples: evaluation, exact
minimization over the unit square, and the embeddability decision for spaces
with at most five points."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ParamOutOfRange, TooManyPoints
from .metric import DEFAULT_TOL, FiniteMetricSpace


@dataclass(frozen=True)
class QuadrupleView:
    """Six squared distances bound to the roles x,y,z,w of the form."""

    d2_xy: float
    d2_yz: float
    d2_zw: float
    d2_wx: float
    d2_xz: float
    d2_yw: float

    @staticmethod
    def from_space(X: FiniteMetricSpace, x: int, y: int, z: int, w: int) -> "QuadrupleView":
        d = X.dist
        return QuadrupleView(
            d2_xy=float(d[x, y] ** 2),
            d2_yz=float(d[y, z] ** 2),
            d2_zw=float(d[z, w] ** 2),
            d2_wx=float(d[w, x] ** 2),
            d2_xz=float(d[x, z] ** 2),
            d2_yw=float(d[y, w] ** 2),
        )


@dataclass(frozen=True)
class BoxtimesPoint:
    s: float
    t: float

    def __post_init__(self):
        if not (0.0 <= self.s <= 1.0 and 0.0 <= self.t <= 1.0):
            raise ParamOutOfRange(f"(s,t)=({self.s},{self.t}) outside the unit square")


@dataclass(frozen=True)
class BoxtimesCertificate:
    roles: tuple  # (x, y, z, w) point indices
    witness: BoxtimesPoint
    value: float

    def to_json_dict(self) -> dict:
        return {
            "roles": list(self.roles),
            "s": self.witness.s,
            "t": self.witness.t,
            "value": self.value,
        }


@dataclass(frozen=True)
class Decision:
    holds: bool
    certificate: BoxtimesCertificate | None = None

    @property
    def verdict(self) -> str:
        return "Holds" if self.holds else "Violated"


def boxtimes_form(q: QuadrupleView, s: float, t: float) -> float:
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
        raise ParamOutOfRange(f"(s,t)=({s},{t}) outside the unit square")
    return (
        (1 - t) * (1 - s) * q.d2_xy
        + t * (1 - s) * q.d2_yz
        + t * s * q.d2_zw
        + (1 - t) * s * q.d2_wx
        - t * (1 - t) * q.d2_xz
        - s * (1 - s) * q.d2_yw
    )


def _coeffs(q: QuadrupleView):
    # f(s,t) = F s^2 + E t^2 + G s t + P s + Q t + A
    A, B, C, D = q.d2_xy, q.d2_yz, q.d2_zw, q.d2_wx
    E, F = q.d2_xz, q.d2_yw
    G = A - B + C - D
    P = D - A - F
    Q = B - A - E
    return A, E, F, G, P, Q


def _edge_min(a: float, b: float, c: float):
    """Minimize a u^2 + b u + c over u in [0,1]; return (value, u)."""
    best = (c, 0.0)
    v1 = a + b + c
    if v1 < best[0]:
        best = (v1, 1.0)
    if a > 0.0:
        u = -b / (2.0 * a)
        if 0.0 < u < 1.0:
            v = (a * u + b) * u + c
            if v < best[0]:
                best = (v, u)
    return best


def minimize_boxtimes(q: QuadrupleView) -> tuple:
    """Exact global minimum of the form over the unit square.

    The form is quadratic; candidates are the interior stationary point (when
    the Hessian is positive definite and the point lies in the square), the
    four edge minimizers (1-D quadratics in closed form), and the corners.
    """
    A, E, F, G, P, Q = _coeffs(q)
    candidates = []
    det = 4.0 * E * F - G * G
    if det > 0.0:
        s = (G * Q - 2.0 * E * P) / det
        t = (G * P - 2.0 * F * Q) / det
        if 0.0 <= s <= 1.0 and 0.0 <= t <= 1.0:
            v = (F * s + G * t + P) * s + (E * t + Q) * t + A
            candidates.append((v, s, t))
    v, s = _edge_min(F, P, A)  # t = 0
    candidates.append((v, s, 0.0))
    v, s = _edge_min(F, G + P, A + Q + E)  # t = 1
    candidates.append((v, s, 1.0))
    v, t = _edge_min(E, Q, A)  # s = 0
    candidates.append((v, 0.0, t))
    v, t = _edge_min(E, G + Q, A + P + F)  # s = 1
    candidates.append((v, 1.0, t))
    best = min(candidates, key=lambda c: c[0])
    return best[0], BoxtimesPoint(s=best[1], t=best[2])


def _canonical_quadruples(n: int):
    """Ordered quadruples up to the two exact symmetries: swapping x,z
    (t -> 1-t) and swapping y,w (s -> 1-s). Canonical form: x <= z, y <= w."""
    for x, z in itertools.combinations_with_replacement(range(n), 2):
        for y, w in itertools.combinations_with_replacement(range(n), 2):
            yield (x, y, z, w)


def space_satisfies(X: FiniteMetricSpace, tol: float = DEFAULT_TOL) -> Decision:
    """Decide the box inequalities by exact minimization over all quadruples."""
    scale = X.scale
    best = None
    for roles in _canonical_quadruples(X.n):
        q = QuadrupleView.from_space(X, *roles)
        value, pt = minimize_boxtimes(q)
        if best is None or value < best[0]:
            best = (value, roles, pt)
    value, roles, pt = best
    cert = BoxtimesCertificate(roles=roles, witness=pt, value=value)
    if value < -tol * scale * scale:
        return Decision(holds=False, certificate=cert)
    return Decision(holds=True, certificate=cert)


def decide_cat0_embeddable(X: FiniteMetricSpace, tol: float = DEFAULT_TOL) -> Decision:
    """Embeddability decision for spaces with at most five points."""
    if X.n > 5:
        raise TooManyPoints(X.n)
    return space_satisfies(X, tol)


def midpoint_inequality_check(X: FiniteMetricSpace, x: int, y: int, z: int, w: int,
                              tol: float = DEFAULT_TOL):
    """For y metrically between x and z, check the convexity inequality on w.

    Returns None when not applicable (x = z or y not between), else a bool.
    """
    scale = X.scale
    dxz = X.d(x, z)
    if x == z or dxz == 0.0:
        return None
    if abs(dxz - X.d(x, y) - X.d(y, z)) > tol * scale:
        return None
    t = X.d(x, y) / dxz
    lhs = X.d(y, w) ** 2
    rhs = (1 - t) * X.d(x, w) ** 2 + t * X.d(z, w) ** 2 - t * (1 - t) * dxz * dxz
    return bool(lhs <= rhs + tol * scale * scale)
