"""Planar comparison configurations, the four-point trichotomy, explicit
three-dimensional embeddings, and the geometric predicate suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotEmbeddableError, TriangleViolation
from .metric import DEFAULT_TOL

ORIENT_EPS = 1e-12


@dataclass(frozen=True)
class PlanarConfig:
    """Named 2-D points plus the map from metric labels to names."""

    points: dict  # name -> np.ndarray shape (2,)
    label_map: dict  # metric label -> name

    def p(self, name):
        return self.points[name]


@dataclass(frozen=True)
class SpatialConfig:
    """Four named 3-D points realizing a quadruple, plus the hinge angle."""

    points: dict  # name -> np.ndarray shape (3,)
    theta0: float

    def p(self, name):
        return self.points[name]


@dataclass(frozen=True)
class Classification:
    verdict: str  # "Embeddable" | "UnderDistance" | "OverDistance"
    lo: float
    hi: float
    pivot: tuple  # role names, e.g. ("y", "w")
    config: SpatialConfig | None = None

    def to_json_dict(self) -> dict:
        out = {"verdict": self.verdict, "lo": self.lo, "hi": self.hi,
               "pivot": list(self.pivot)}
        if self.config is not None:
            out["coords"] = {k: v.tolist() for k, v in self.config.points.items()}
            out["theta0"] = self.config.theta0
        return out


def place_triangle(dab: float, dbc: float, dca: float, tol: float = DEFAULT_TOL):
    """a=(0,0), b=(dab,0), c in the closed upper half-plane."""
    scale = max(dab, dbc, dca)
    band = tol * scale
    for sides in ((dab, dbc, dca), (dbc, dca, dab), (dca, dab, dbc)):
        if sides[0] > sides[1] + sides[2] + band:
            raise TriangleViolation(0, 1, 2, sides[0] - sides[1] - sides[2])
    a = np.array([0.0, 0.0])
    b = np.array([dab, 0.0])
    if dab == 0.0:
        c = np.array([dca, 0.0])
    else:
        cx = (dab * dab + dca * dca - dbc * dbc) / (2.0 * dab)
        cy = math.sqrt(max(0.0, dca * dca - cx * cx))
        c = np.array([cx, cy])
    return a, b, c


def hinge(dxy: float, dyz: float, dzx: float, dxw: float, dwz: float,
          side: str = "same_as_y", tol: float = DEFAULT_TOL) -> PlanarConfig:
    """Two triangles sharing the segment from x' to z'; w' on the chosen side."""
    if side not in ("same_as_y", "opposite_y"):
        raise ValueError(f"bad side {side!r}")
    x, z, y = place_triangle(dzx, dyz, dxy, tol)  # x'=(0,0), z'=(dzx,0), y' upper
    if dzx == 0.0:
        w = np.array([dxw, 0.0]) if side == "same_as_y" else np.array([-dxw, 0.0])
    else:
        w1 = (dzx * dzx + dxw * dxw - dwz * dwz) / (2.0 * dzx)
        w2 = math.sqrt(max(0.0, dxw * dxw - w1 * w1))
        w = np.array([w1, w2 if side == "same_as_y" else -w2])
    pts = {"x": x, "y": y, "z": z, "w": w}
    return PlanarConfig(points=pts, label_map={k: k for k in pts})


def classify(dxy: float, dyz: float, dzx: float, dxw: float, dwz: float,
             dyw: float, tol: float = DEFAULT_TOL) -> Classification:
    """Trichotomy of the quadruple with the pair {y,w} free (pivot) and the
    five remaining distances fixed; frame pair is {x,z}."""
    scale = max(dxy, dyz, dzx, dxw, dwz, dyw)
    if scale == 0.0:
        return Classification("Embeddable", 0.0, 0.0, ("y", "w"),
                              SpatialConfig({k: np.zeros(3) for k in "xyzw"}, 0.0))
    band = tol * scale
    if dzx <= band:
        # degenerate frame: x and z coincide, the quadruple lives on a tripod
        lo, hi = abs(dxy - dxw), dxy + dxw
    else:
        c = hinge(dxy, dyz, dzx, dxw, dwz, "same_as_y", tol)
        y, w = c.p("y"), c.p("w")
        y1, y2 = y
        w1, w2 = w
        lo = math.hypot(y1 - w1, y2 - w2)
        hi = math.hypot(y1 - w1, y2 + w2)
    if dyw < lo - band:
        return Classification("UnderDistance", lo, hi, ("y", "w"))
    if dyw > hi + band:
        return Classification("OverDistance", lo, hi, ("y", "w"))
    cfg = embed_r3(dxy, dyz, dzx, dxw, dwz, dyw, tol)
    return Classification("Embeddable", lo, hi, ("y", "w"), cfg)


def embed_r3(dxy: float, dyz: float, dzx: float, dxw: float, dwz: float,
             dyw: float, tol: float = DEFAULT_TOL) -> SpatialConfig:
    """Explicit coordinates in 3-space for an embeddable quadruple."""
    scale = max(dxy, dyz, dzx, dxw, dwz, dyw)
    if scale == 0.0:
        return SpatialConfig({k: np.zeros(3) for k in "xyzw"}, 0.0)
    band = tol * scale
    if dzx <= band:
        # tripod frame: place everything on a line through x = z
        if not (abs(dxy - dxw) - band <= dyw <= dxy + dxw + band):
            raise NotEmbeddableError("tripod distances inconsistent")
        x = np.zeros(3)
        z = np.array([dzx, 0.0, 0.0])
        y = np.array([dxy, 0.0, 0.0])
        cosang = 1.0 if dxy * dxw == 0 else np.clip(
            (dxy * dxy + dxw * dxw - dyw * dyw) / (2 * dxy * dxw), -1, 1)
        ang = math.acos(cosang)
        w = np.array([dxw * math.cos(ang), dxw * math.sin(ang), 0.0])
        return SpatialConfig({"x": x, "y": y, "z": z, "w": w}, 0.0)
    c = hinge(dxy, dyz, dzx, dxw, dwz, "same_as_y", tol)
    y1, y2 = c.p("y")
    w1, w2 = c.p("w")
    lo2 = (y1 - w1) ** 2 + (y2 - w2) ** 2
    hi2 = (y1 - w1) ** 2 + (y2 + w2) ** 2
    if not (lo2 - 2 * band * scale <= dyw * dyw <= hi2 + 2 * band * scale):
        raise NotEmbeddableError(f"d(y,w)={dyw} outside [{math.sqrt(lo2)}, {math.sqrt(hi2)}]")
    if y2 * w2 <= 0.0:
        theta0 = 0.0
    else:
        cth = ((y1 - w1) ** 2 + y2 * y2 + w2 * w2 - dyw * dyw) / (2.0 * y2 * w2)
        theta0 = math.acos(float(np.clip(cth, -1.0, 1.0)))
    x = np.zeros(3)
    z = np.array([dzx, 0.0, 0.0])
    y = np.array([y1, y2, 0.0])
    w = np.array([w1, w2 * math.cos(theta0), w2 * math.sin(theta0)])
    return SpatialConfig({"x": x, "y": y, "z": z, "w": w}, theta0)


def classify_space(X, roles, pivot, tol: float = DEFAULT_TOL) -> Classification:
    """Classify the quadruple X[roles] with the given pivot pair freed.

    roles: four point indices; pivot: two of them. The frame pair is the
    complement within roles; distances are read off X.
    """
    roles = list(roles)
    pivot = set(pivot)
    if not pivot <= set(roles) or len(pivot) != 2:
        raise ValueError("pivot must be two of the four role indices")
    y, w = sorted(pivot)
    x, z = sorted(set(roles) - pivot)
    d = X.d
    return classify(d(x, y), d(y, z), d(z, x), d(x, w), d(w, z), d(y, w), tol)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def orientation(o, a, b, scale: float) -> int:
    """Sign of the signed area, with an epsilon band around zero."""
    c = _cross(o, a, b)
    eps = ORIENT_EPS * scale * scale
    if c > eps:
        return 1
    if c < -eps:
        return -1
    return 0


def _on_segment(p, a, b, scale) -> bool:
    if orientation(a, b, p, scale) != 0:
        return False
    t = max(abs(b[0] - a[0]), abs(b[1] - a[1]))
    eps = ORIENT_EPS * scale
    return (min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps)


def segments_intersect(a, b, c, d, scale: float) -> bool:
    """Closed-segment intersection test."""
    o1 = orientation(a, b, c, scale)
    o2 = orientation(a, b, d, scale)
    o3 = orientation(c, d, a, scale)
    o4 = orientation(c, d, b, scale)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return (_on_segment(c, a, b, scale) or _on_segment(d, a, b, scale)
            or _on_segment(a, c, d, scale) or _on_segment(b, c, d, scale))


def in_triangle(p, a, b, c, scale: float) -> bool:
    """Closed convex-hull membership of p in triangle abc (degenerate ok)."""
    s1 = orientation(a, b, p, scale)
    s2 = orientation(b, c, p, scale)
    s3 = orientation(c, a, p, scale)
    if orientation(a, b, c, scale) == 0:
        # degenerate triangle: hull is a segment
        lo = min((a, b, c), key=lambda q: (q[0], q[1]))
        hi = max((a, b, c), key=lambda q: (q[0], q[1]))
        return _on_segment(p, lo, hi, scale)
    return (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0)


def planar_angle(a, o, b) -> float:
    u, v = np.asarray(a) - np.asarray(o), np.asarray(b) - np.asarray(o)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.arccos(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0)))


def config_report(c: PlanarConfig) -> dict:
    """Predicate bundle over a 4-point planar configuration."""
    names = sorted(c.points)
    pts = {k: np.asarray(v, dtype=float) for k, v in c.points.items()}
    scale = max((np.linalg.norm(pts[a] - pts[b]) for a in names for b in names), default=1.0)
    scale = max(scale, 1e-300)
    seg_pairs = {}
    import itertools as it

    segs = list(it.combinations(names, 2))
    for (s1, s2) in it.combinations(segs, 2):
        if set(s1) & set(s2):
            continue
        key = f"{s1[0]}{s1[1]}|{s2[0]}{s2[1]}"
        seg_pairs[key] = segments_intersect(pts[s1[0]], pts[s1[1]],
                                            pts[s2[0]], pts[s2[1]], scale)
    hull = {}
    for p in names:
        others = [q for q in names if q != p]
        hull[p] = in_triangle(pts[p], *(pts[q] for q in others), scale)
    sides = {}
    for p in names:
        for (a, b) in segs:
            if p in (a, b):
                continue
            sides[f"{p}|{a}{b}"] = orientation(pts[a], pts[b], pts[p], scale)
    angles = {}
    for o in names:
        for (a, b) in it.combinations([q for q in names if q != o], 2):
            angles[f"{a}{o}{b}"] = planar_angle(pts[a], pts[o], pts[b])
    collinear = {f"{a}{b}{d}": orientation(pts[a], pts[b], pts[d], scale) == 0
                 for (a, b, d) in it.combinations(names, 3)}
    return {"segments_intersect": seg_pairs, "in_hull_of_others": hull,
            "side_signs": sides, "angles": angles, "collinear": collinear}
