"""Witness construction: for a metric space with at most five points that
satisfies the boxtimes inequalities and any simple graph on its points, build
an explicit model space and assignment realizing the graph pattern (edges
shortened or preserved, non-edges preserved or stretched), then verify it."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import boxtimes, complexes, graphs, metric, quadgeo
from .errors import (
    BadSplit,
    BoxtimesViolated,
    NoSuchVertex,
    NotATree,
    SearchFailed,
    TooManyPoints,
    WitnessConstructionError,
)
from .metric import DEFAULT_TOL

_G7_CANON = graphs.graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3), (2, 4)])
_G9_CANON = graphs.graph(5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 3),
                             (3, 4), (4, 1)])
_FAN35_CANON = graphs.graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 4)])
_FAN46_CANON = graphs.graph(5, [(0, 1), (1, 2), (3, 4), (4, 0), (1, 3), (2, 4)])


@dataclass(frozen=True)
class Strategy:
    tag: str  # Line | Tree | PointGlue | SegmentSpacerGlue | Cycle | Fan35 |
    #           Fan46 | CaseG7 | CaseG9 | Quotient
    data: tuple = ()


@dataclass(frozen=True)
class Witness:
    space: complexes.ComplexSpace
    assignment: dict  # vertex -> mark name
    strategy: str
    kirszbraun_required: bool = False
    special_vertex: int | None = None
    equalities: frozenset = frozenset()  # pairs promised exact
    meta: dict = field(default_factory=dict, compare=False)

    def distance(self, u: int, v: int) -> float:
        return complexes.distance(self.space, self.assignment[u], self.assignment[v])

    def to_json_dict(self) -> dict:
        return {
            "model": self.space.to_json_dict(),
            "assignment": {str(u): m for u, m in self.assignment.items()},
            "kirszbraun_required": self.kirszbraun_required,
            "special_vertex": self.special_vertex,
            "strategy": self.strategy,
        }


@dataclass(frozen=True)
class VerificationReport:
    entries: tuple  # of dicts: pair, relation, witness_d, metric_d, slack
    ok: bool
    local_cat0: bool | None = None

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"

    def to_json_dict(self) -> dict:
        return {"verdict": self.verdict, "local_cat0": self.local_cat0,
                "entries": [dict(e, pair=list(e["pair"])) for e in self.entries]}


# ------------------------------------------------------------------ verify


def verify(X, f, G: graphs.SimpleGraph, W: Witness,
           tol: float = DEFAULT_TOL) -> VerificationReport:
    """Check the pattern: edges at most the metric distance, non-edges at
    least; witnesses relying on the 1-Lipschitz extension theorem instead
    check its hypothesis (special-vertex row at most, all other pairs at
    least)."""
    band = tol * max(X.scale, 1e-300)
    entries = []
    ok = True
    for u, v in itertools.combinations(range(G.n), 2):
        dx = X.d(f[u], f[v])
        dy = W.distance(u, v)
        if W.kirszbraun_required:
            rel = "<=" if W.special_vertex in (u, v) else ">="
        elif frozenset((u, v)) in W.equalities:
            rel = "="
        elif G.has_edge(u, v):
            rel = "<="
        else:
            rel = ">="
        if rel == "<=":
            slack = dx - dy
        elif rel == ">=":
            slack = dy - dx
        else:
            slack = -abs(dy - dx)
        if slack < -band:
            ok = False
        entries.append({"pair": (u, v), "relation": rel, "witness_d": dy,
                        "metric_d": dx, "slack": slack})
    cat0 = None
    if not W.kirszbraun_required:
        # angle tolerance in radians; near-degenerate triangles lose more
        # precision in angle sums than in lengths
        cat0 = complexes.local_cat0_check(W.space, tol=1e-6)
        if not cat0:
            ok = False
    return VerificationReport(entries=tuple(entries), ok=ok, local_cat0=cat0)


# -------------------------------------------------------------- primitives


def _names(n):
    return [f"v{u}" for u in range(n)]


def _one_piece_complex(dim, points, names):
    pts = np.asarray(points, dtype=float).reshape(len(names), dim)
    piece = complexes.Piece(0, dim, pts)
    marks = []
    for i, nm in enumerate(names):
        bary = np.zeros(len(names))
        bary[i] = 1.0
        marks.append(complexes.MarkedPoint(nm, 0, bary))
    return complexes.assemble([piece], [], marks)


def _bary_in(pt, gens, slack=1e-7):
    """Convex coefficients of pt over the generator rows, or None."""
    gens = np.asarray(gens, dtype=float)
    k = len(gens)
    A = np.vstack([(gens[1:] - gens[0]).T])
    try:
        uv, *_ = np.linalg.lstsq(A, np.asarray(pt, float) - gens[0], rcond=None)
    except np.linalg.LinAlgError:
        return None
    bary = np.concatenate([[1.0 - uv.sum()], uv])
    resid = np.linalg.norm(bary @ gens - pt)
    scale = max(1.0, float(np.abs(gens).max()))
    if resid > 1e-7 * scale or bary.min() < -slack:
        return None
    bary = np.clip(bary, 0.0, None)
    return bary / bary.sum()


def _third_point(a, b, da, db, side_ref=None):
    """Planar point at distances da from a and db from b; side_ref picks the
    half-plane (same side as side_ref of line ab; default upper)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ab = np.linalg.norm(b - a)
    if ab == 0.0:
        return a + np.array([da, 0.0])
    e1 = (b - a) / ab
    e2 = np.array([-e1[1], e1[0]])
    t1 = (ab * ab + da * da - db * db) / (2 * ab)
    t2 = math.sqrt(max(0.0, da * da - t1 * t1))
    if side_ref is not None and np.dot(np.asarray(side_ref, float) - a, e2) < 0:
        t2 = -t2
    return a + t1 * e1 + t2 * e2


def _place_r3_base(dxy, dyz, dzx):
    """Triangle x, y, z in the plane t3 = 0 of 3-space."""
    x2, y2, z2 = quadgeo.place_triangle(dxy, dyz, dzx)
    to3 = lambda p: np.array([p[0], p[1], 0.0])
    return to3(x2), to3(y2), to3(z2)


def _trilaterate(x3, y3, z3, dx, dy, dz, sign):
    """Point in 3-space at the given distances from x3, y3, z3; sign picks
    the half-space."""
    dxy = np.linalg.norm(y3 - x3)
    p1 = (dxy * dxy + dx * dx - dy * dy) / (2 * dxy) if dxy > 0 else 0.0
    z1, z2 = z3[0], z3[1]
    if abs(z2) > 1e-14 * max(1.0, dxy):
        p2 = (dx * dx - dz * dz + z1 * z1 + z2 * z2 - 2 * z1 * p1) / (2 * z2)
    else:
        p2 = 0.0
    p3 = math.sqrt(max(0.0, dx * dx - p1 * p1 - p2 * p2))
    return np.array([p1, p2, sign * p3])


def _classify_quad(dd, frame, pivot, tol=DEFAULT_TOL):
    a, b = frame
    u, v = pivot
    return quadgeo.classify(dd(a, u), dd(u, b), dd(b, a),
                            dd(a, v), dd(v, b), dd(u, v), tol)


def _quad_embeddable(dd, quad, tol=DEFAULT_TOL):
    quad = list(quad)
    pivot = (quad[0], quad[1])
    frame = (quad[2], quad[3])
    return _classify_quad(dd, frame, pivot, tol).verdict == "Embeddable"


def _append(C: complexes.ComplexSpace, pieces, gluings, marks):
    all_pieces = list(C.pieces.values()) + list(pieces)
    all_gluings = list(C.gluings) + list(gluings)
    all_marks = list(C.marked.values()) + list(marks)
    return complexes.assemble(all_pieces, all_gluings, all_marks)


def _disc_for_over(dd, apex, ring, tol=DEFAULT_TOL):
    """Three-triangle disc with the given apex and ring order (r1, r2, r3)."""
    r1, r2, r3 = ring
    C = complexes.build_disc(dd(apex, r1), dd(apex, r2), dd(apex, r3),
                             dd(r1, r2), dd(r2, r3), dd(r3, r1), tol)
    return complexes.rename_marks(C, {"x": f"v{apex}", "y": f"v{r1}",
                                      "z": f"v{r2}", "w": f"v{r3}"})


# ------------------------------------------------------------ exact models


def exact_embedding(X, names, tol: float = DEFAULT_TOL) -> complexes.ComplexSpace:
    """A complex realizing every pairwise distance of X exactly (at most four
    points): a point, segment, planar triangle, spatial quadruple, or a
    three-triangle disc for quadruples with a stretched pair."""
    n = X.n
    if n == 1:
        piece = complexes.Piece(0, 1, np.array([[0.0], [0.0]]))
        mark = complexes.MarkedPoint(names[0], 0, np.array([1.0, 0.0]))
        return complexes.assemble([piece], [], [mark])
    if n == 2:
        return _one_piece_complex(1, [[0.0], [X.d(0, 1)]], names)
    if n == 3:
        a, b, c = quadgeo.place_triangle(X.d(0, 1), X.d(1, 2), X.d(2, 0), tol)
        return _one_piece_complex(2, [a, b, c], names)
    if n != 4:
        raise TooManyPoints(n)
    dd = X.d
    band = tol * max(X.scale, 1e-300)
    for y, w in itertools.combinations(range(4), 2):
        x, z = sorted(set(range(4)) - {y, w})
        cl = _classify_quad(dd, (x, z), (y, w), tol)
        if cl.verdict == "Embeddable":
            pts = [cl.config.p(r) for r in "xyzw"]
            order = [x, y, z, w]
            coords = [None] * 4
            for i, r in enumerate(order):
                coords[r] = pts[i]
            return _one_piece_complex(3, coords, names)
    # no spatial embedding: use a stretched-pair disc
    for y, w in itertools.combinations(range(4), 2):
        x, z = sorted(set(range(4)) - {y, w})
        cl = _classify_quad(dd, (x, z), (y, w), tol)
        if cl.verdict != "OverDistance":
            continue
        for apex, other in ((x, z), (z, x)):
            try:
                ddl = lambda i, j: dd(i, j)
                C = _disc_for_over(ddl, apex, (y, other, w), tol)
            except Exception:
                continue
            if C.meta.get("apex_angle_sum", 0.0) < 2 * math.pi - 1e-9:
                continue
            C = complexes.rename_marks(C, {f"v{i}": names[i] for i in range(4)})
            if all(abs(complexes.distance(C, names[i], names[j]) - dd(i, j))
                   <= max(band, 1e-7 * X.scale)
                   for i, j in itertools.combinations(range(4), 2)):
                return C
    raise WitnessConstructionError("no exact model for the quadruple")


# ----------------------------------------------------------- the dispatch


def strategy_for(G: graphs.SimpleGraph, X, f=None,
                 tol: float = DEFAULT_TOL) -> Strategy:
    if G.n > 5:
        raise TooManyPoints(G.n)
    f = tuple(range(G.n)) if f is None else tuple(f)
    band = tol * max(X.scale, 1e-300)
    if any(X.d(f[u], f[v]) <= band
           for u, v in itertools.combinations(range(G.n), 2)):
        return Strategy("Quotient")
    v0 = graphs.is_semicomplete(G)
    if v0 is not None:
        return Strategy("Line", (v0,))
    if G.is_connected() and len(G.edges) == G.n - 1:
        return Strategy("Tree")
    if not G.is_connected():
        return Strategy("SegmentSpacerGlue", tuple(tuple(c) for c in G.components()))
    arts = G.articulation_vertices()
    if arts:
        return Strategy("PointGlue", (arts[0],))
    for k, name in ((4, "C4"), (5, "C5")):
        if G.n == k and graphs.find_isomorphism(G, graphs.by_name(name)):
            return Strategy("Cycle", (k,))
    for tag, target in (("Fan35", _FAN35_CANON), ("Fan46", _FAN46_CANON),
                        ("CaseG7", _G7_CANON), ("CaseG9", _G9_CANON)):
        perm = graphs.find_isomorphism(G, target)
        if perm:
            return Strategy(tag, (perm,))
    for tag, name in (("Fan35", "G5_5"), ("Fan46", "G5_6")):
        # the chord variants share the fan construction
        perm = graphs.find_isomorphism(G, graphs.by_name(name))
        if perm:
            return Strategy(tag, (perm,))
    raise WitnessConstructionError(f"no strategy for {G.to_json_dict()}")


# ------------------------------------------------------- simple strategies


def witness_line(X, f, G: graphs.SimpleGraph, tol: float = DEFAULT_TOL) -> Witness:
    v0 = graphs.is_semicomplete(G)
    if v0 is None:
        raise NoSuchVertex("no vertex whose removal leaves a complete graph")
    vals = [X.d(f[v0], f[u]) for u in range(G.n)]
    top = max(vals) or 1.0
    piece = complexes.Piece(0, 1, np.array([[0.0], [top]]))
    marks = [complexes.MarkedPoint(f"v{u}", 0,
                                   np.array([1.0 - vals[u] / top, vals[u] / top]))
             for u in range(G.n)]
    C = complexes.assemble([piece], [], marks)
    eqs = frozenset(frozenset((u, v))
                    for u, v in itertools.combinations(range(G.n), 2)
                    if not G.has_edge(u, v))
    return Witness(C, {u: f"v{u}" for u in range(G.n)}, "Line", equalities=eqs,
                   meta={"model": "line", "values": vals})


def witness_tree(X, f, G: graphs.SimpleGraph, tol: float = DEFAULT_TOL) -> Witness:
    if not (G.is_connected() and len(G.edges) == G.n - 1):
        raise NotATree("graph is not a tree")
    root = 0
    seen = {root}
    order = []
    queue = [root]
    while queue:
        u = queue.pop(0)
        for w in sorted(G.neighbors(u)):
            if w not in seen:
                seen.add(w)
                order.append((u, w))
                queue.append(w)
    X1 = metric.FiniteMetricSpace(("o",), np.zeros((1, 1)))
    C = exact_embedding(X1, [f"v{root}"], tol)
    for u, w in order:
        C = complexes.attach_segment(C, f"v{u}", X.d(f[u], f[w]), f"v{w}")
    eqs = frozenset(frozenset(tuple(e)) for e in G.edges)
    return Witness(C, {u: f"v{u}" for u in range(G.n)}, "Tree", equalities=eqs,
                   meta={"model": "complex"})


def witness_glue(X, f, G: graphs.SimpleGraph, split=None, tol: float = DEFAULT_TOL,
                 seed: int = 0, multistarts: int = 64) -> Witness:
    if not G.is_connected():
        comps = G.components()
        if len(comps) < 2:
            raise BadSplit("graph is connected")
        spacer = max((X.d(f[u], f[v]) for u, v in
                      itertools.combinations(range(G.n), 2)), default=1.0)
        subs = []
        for comp in comps:
            Xi = metric.restrict(X, [f[u] for u in comp])
            Gi = G.induced(comp)
            Wi = _construct(Xi, tuple(range(len(comp))), Gi, tol, seed,
                            multistarts, check=False)
            Ci = complexes.rename_marks(
                Wi.space, {f"v{k}": f"v{comp[k]}" for k in range(len(comp))})
            subs.append((comp, Ci, Wi))
        comp, C, _ = subs[0]
        for k, (compk, Ck, _wk) in enumerate(subs[1:], start=1):
            C = complexes.attach_segment(C, f"v{subs[k - 1][0][0]}",
                                         spacer, f"sp{k}")
            C = complexes.glue_at_point(C, f"sp{k}", Ck, f"v{compk[0]}")
        eqs = frozenset(frozenset(c[i] for i in e)
                        for c, _x, w in subs for e in w.equalities)
        kb = any(w.kirszbraun_required for *_x, w in subs)
        return Witness(C, {u: f"v{u}" for u in range(G.n)}, "SegmentSpacerGlue",
                       kirszbraun_required=kb, equalities=eqs,
                       meta={"model": "composite", "spacer": spacer})
    arts = G.articulation_vertices() if split is None else [split]
    if not arts:
        raise BadSplit("no articulation vertex")
    v0 = arts[0]
    rest = [u for u in range(G.n) if u != v0]
    comps = G.induced(rest).components()
    part1 = sorted([v0] + [rest[i] for i in comps[0]])
    part2 = sorted([v0] + [rest[i] for c in comps[1:] for i in c])
    sides = []
    for part in (part1, part2):
        Xi = metric.restrict(X, [f[u] for u in part])
        Ci = exact_embedding(Xi, [f"v{u}" for u in part], tol)
        sides.append(Ci)
    C = complexes.glue_at_point(sides[0], f"v{v0}", sides[1], f"v{v0}")
    eqs = frozenset(frozenset((u, v)) for part in (part1, part2)
                    for u, v in itertools.combinations(part, 2))
    return Witness(C, {u: f"v{u}" for u in range(G.n)}, "PointGlue",
                   equalities=eqs, meta={"model": "composite", "split": v0})


def witness_cycle(X, f, G: graphs.SimpleGraph, k: int, seed: int = 0,
                  multistarts: int = 64, tol: float = DEFAULT_TOL) -> Witness:
    n = G.n
    D = np.array([[X.d(f[u], f[v]) for v in range(n)] for u in range(n)])
    scale = max(float(D.max()), 1e-300)
    edges = [tuple(sorted(e)) for e in (tuple(e) for e in G.edges)]
    nonedges = [tuple(p) for p in itertools.combinations(range(n), 2)
                if not G.has_edge(*p)]
    edges_set = set(edges)

    def pg(flat):
        P = flat.reshape(n, 2)
        val = 0.0
        grad = np.zeros_like(P)
        for (i, j) in edges + nonedges:
            diff = P[i] - P[j]
            r = float(np.linalg.norm(diff))
            if (i, j) in edges_set:
                t = r - D[i, j]
            else:
                t = D[i, j] - r
            if t <= 0.0:
                continue
            val += t * t
            if r > 0.0:
                g = 2.0 * t * (1.0 if (i, j) in edges_set else -1.0) * diff / r
                grad[i] += g
                grad[j] -= g
        return val, grad.ravel()

    # classical multidimensional scaling start
    D2 = D ** 2
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ D2 @ J
    evals, evecs = np.linalg.eigh(B)
    idx = np.argsort(evals)[::-1][:2]
    mds = evecs[:, idx] * np.sqrt(np.clip(evals[idx], 0.0, None))
    rng = np.random.default_rng(seed)
    best_val = math.inf
    best = None
    target = (tol * scale) ** 2
    for trial in range(multistarts):
        if trial == 0:
            start = mds
        else:
            start = mds + rng.normal(scale=0.3 * scale * (trial / multistarts + 0.2),
                                     size=(n, 2))
        res = optimize.minimize(pg, start.ravel(), jac=True, method="L-BFGS-B",
                                options={"maxiter": 2000, "ftol": 1e-18,
                                         "gtol": 1e-14})
        if res.fun < best_val:
            best_val = float(res.fun)
            best = res.x.reshape(n, 2)
        if best_val <= target:
            break
    if best_val > target:
        raise SearchFailed(best_val)
    C = _one_piece_complex(2, best, _names(n))
    return Witness(C, {u: f"v{u}" for u in range(n)}, f"Cycle{k}",
                   meta={"model": "plane", "penalty": best_val})


def witness_fan(X, f, G: graphs.SimpleGraph, variant: str,
                tol: float = DEFAULT_TOL) -> Witness:
    target = _FAN35_CANON if variant == "Fan35" else _FAN46_CANON
    # the chord variant adds the shared fan side, which the fan realizes
    # exactly, so the same construction covers it
    chord_pair = (2, 4) if variant == "Fan35" else (1, 4)
    chord = graphs.graph(5, [tuple(e) for e in
                             (sorted(e) for e in target.edges)] + [chord_pair])
    perm = graphs.find_isomorphism(G, target) or graphs.find_isomorphism(G, chord)
    if perm is None:
        raise WitnessConstructionError(f"graph does not match {variant}")
    role = {perm[u]: u for u in range(5)}  # canonical role -> vertex

    def dd(i, j):
        return X.d(f[role[i]], f[role[j]])

    if variant == "Fan35":
        tris = [((0, 1, 4), (dd(0, 1), dd(1, 4), dd(4, 0))),
                ((1, 2, 4), (dd(1, 2), dd(2, 4), dd(4, 1))),
                ((2, 3, 4), (dd(2, 3), dd(3, 4), dd(4, 2)))]
        shares = [(1, 4), (2, 4)]
        mark_at = [(0, 0), (1, 0), (2, 1), (3, 2), (4, 0)]
    else:
        tris = [((0, 1, 4), (dd(0, 1), dd(1, 4), dd(4, 0))),
                ((1, 2, 4), (dd(1, 2), dd(2, 4), dd(4, 1))),
                ((1, 3, 4), (dd(1, 3), dd(3, 4), dd(4, 1)))]
        shares = [(1, 4), (1, 4)]
        mark_at = [(0, 0), (1, 0), (2, 1), (3, 2), (4, 0)]
    marks = [(f"v{role[i]}", ti, i) for i, ti in mark_at]
    C = complexes.build_fan(tris, shares, marks)
    return Witness(C, {u: f"v{u}" for u in range(5)}, variant,
                   meta={"model": "complex", "roles": role})


# ---------------------------------------------------------------- CaseG7


def _g7_attach_base(dd, core, core_feature, tol):
    """Glue the triangle on canonical vertices (1, 2, 5) to the core complex
    along the core's segment between the images of 2 and 5."""
    a, b, c = quadgeo.place_triangle(dd(0, 1), dd(1, 4), dd(4, 0), tol)
    pid = max(core.pieces) + 1
    P = complexes.Piece(pid, 2, np.array([a, b, c]))
    piece_id, feat = core_feature  # feat rows are the core coords of 1 and 4
    gl = complexes.Gluing("segment", piece_id, np.asarray(feat), pid,
                          np.array([b, c]))
    mark1 = complexes.MarkedPoint("v0", pid, np.array([1.0, 0, 0]))
    return _append(core, [P], [gl], [mark1])


def _g7_candidates(dd, tol):
    cl = _classify_quad(dd, (2, 3), (1, 4), tol)
    out = []
    if cl.verdict == "Embeddable":
        def build_emb():
            cfg = cl.config
            coords = {1: cfg.p("y"), 2: cfg.p("x"), 3: cfg.p("z"), 4: cfg.p("w")}
            gens = np.array([coords[i] for i in (1, 2, 3, 4)])
            piece = complexes.Piece(0, 3, gens)
            marks = []
            for k, i in enumerate((1, 2, 3, 4)):
                bary = np.zeros(4)
                bary[k] = 1.0
                marks.append(complexes.MarkedPoint(f"v{i}", 0, bary))
            core = complexes.assemble([piece], [], marks)
            feat = np.array([coords[1], coords[4]])
            return _g7_attach_base(dd, core, (0, feat), tol), "CaseG7/spatial", False
        out.append(build_emb)
    if cl.verdict == "UnderDistance":
        for side in (1.0, -1.0):
            def build_under(side=side):
                A = np.array([0.0, 0.0])          # canonical vertex 2
                B = np.array([dd(1, 4), 0.0])     # canonical vertex 5
                Cpt = _third_point(A, B, dd(1, 2), dd(2, 4))  # canonical vertex 3
                Dpt = _third_point(A, B, dd(1, 3), dd(3, 4))  # canonical vertex 4
                if side < 0:
                    Dpt = np.array([Dpt[0], -Dpt[1]])
                if np.linalg.norm(Cpt - Dpt) > dd(2, 3) + 10 * tol * dd(1, 4):
                    raise WitnessConstructionError("rebuilt side too long")
                core = _one_piece_complex(2, [A, B, Cpt, Dpt],
                                          ["v1", "v4", "v2", "v3"])
                feat = np.array([A, B])
                return _g7_attach_base(dd, core, (0, feat), tol), \
                    "CaseG7/planar", False
            out.append(build_under)
    if cl.verdict == "OverDistance":
        for apex, other in ((2, 3), (3, 2)):
            def build_over(apex=apex, other=other):
                disc = _disc_for_over(dd, apex, (1, other, 4), tol)
                g3 = disc.pieces[2].generators
                feat = np.array([g3[1], g3[2]])  # ring side [4, 1]
                pid = max(disc.pieces) + 1
                a, b, c = quadgeo.place_triangle(dd(0, 1), dd(1, 4), dd(4, 0), tol)
                P = complexes.Piece(pid, 2, np.array([a, b, c]))
                gl = complexes.Gluing("segment", 2, feat, pid, np.array([c, b]))
                mark1 = complexes.MarkedPoint("v0", pid, np.array([1.0, 0, 0]))
                return _append(disc, [P], [gl], [mark1]), "CaseG7/disc", False
            out.append(build_over)
    return out


def witness_g7(X, f, G: graphs.SimpleGraph, tol: float = DEFAULT_TOL) -> Witness:
    perm = graphs.find_isomorphism(G, _G7_CANON)
    if perm is None:
        raise WitnessConstructionError("graph does not match the seven-edge case")
    autos = [(0, 1, 2, 3, 4), (0, 4, 2, 3, 1), (0, 1, 3, 2, 4), (0, 4, 3, 2, 1)]
    attempts = []
    for sigma in autos:
        role = {sigma[perm[u]]: u for u in range(5)}  # canonical role -> vertex

        def dd(i, j, role=role):
            return X.d(f[role[i]], f[role[j]])

        for build in _g7_candidates(dd, tol):
            try:
                C, strat, kb = build()
            except Exception as exc:
                attempts.append(str(exc))
                continue
            C = complexes.rename_marks(C, {f"v{i}": f"m{role[i]}" for i in range(5)})
            C = complexes.rename_marks(C, {f"m{u}": f"v{u}" for u in range(5)})
            W = Witness(C, {u: f"v{u}" for u in range(5)}, strat,
                        kirszbraun_required=kb,
                        meta={"model": "complex", "attempts": list(attempts)})
            if verify(X, f, G, W, max(tol, 1e-8)).ok:
                return W
            attempts.append(strat)
    raise WitnessConstructionError(f"no verifying branch; tried {attempts}")


# ---------------------------------------------------------------- CaseG9


def _g9_both_embed(dd, p, q, x, y, z, tol):
    """Both quadruples spatial: two tetrahedra over the shared triangle, the
    boundary surface of their union, or the doubled triangle."""
    x3, y3, z3 = _place_r3_base(dd(x, y), dd(y, z), dd(z, x))
    p3 = _trilaterate(x3, y3, z3, dd(x, p), dd(y, p), dd(z, p), +1.0)
    q3 = _trilaterate(x3, y3, z3, dd(x, q), dd(y, q), dd(z, q), -1.0)
    builds = []

    def tetras():
        base = np.array([x3, y3, z3])
        A = complexes.Piece(0, 3, np.vstack([base, p3]))
        B = complexes.Piece(1, 3, np.vstack([base, q3]))
        gl = complexes.Gluing("face", 0, base, 1, base)
        marks = [complexes.MarkedPoint(f"v{p}", 0, np.array([0, 0, 0, 1.0])),
                 complexes.MarkedPoint(f"v{q}", 1, np.array([0, 0, 0, 1.0]))]
        for k, r in enumerate((x, y, z)):
            bary = np.zeros(4)
            bary[k] = 1.0
            marks.append(complexes.MarkedPoint(f"v{r}", 0, bary))
        return complexes.assemble([A, B], [gl], marks), "CaseG9/tetra-pair", False

    def surface():
        pts = np.array([x3, y3, z3, p3, q3])
        C = complexes.polytope_surface(pts, [f"v{r}" for r in (x, y, z, p, q)])
        return C, "CaseG9/hull-surface", True

    def double():
        C = complexes.build_surface("double", (dd(x, y), dd(y, z), dd(z, x)))
        gens = C.pieces[0].generators
        C = complexes.rename_marks(C, {"v0": f"v{x}", "v1": f"v{y}", "v2": f"v{z}"})
        for name, pt, pid in ((f"v{p}", p3, 0), (f"v{q}", q3, 1)):
            bary = _bary_in(pt[:2], gens)
            if bary is None or abs(pt[2]) > 1e-7 * max(1.0, dd(x, y)):
                raise WitnessConstructionError("point outside the doubled triangle")
            C = complexes.add_mark(C, name, pid, bary)
        return C, "CaseG9/double", True

    # order by the segment test: crossing inside the triangle favors the
    # surface model, outside favors the glued tetrahedra
    if p3[2] - q3[2] > 0:
        t = p3[2] / (p3[2] - q3[2])
        mid = p3 + t * (q3 - p3)
        inside = _bary_in(mid[:2], np.array([x3, y3, z3])[:, :2], slack=-1e-9)
        if inside is not None:
            builds = [surface, tetras, double]
        else:
            builds = [tetras, surface, double]
    else:
        builds = [double, tetras, surface]
    return builds


def _g9_twin_disc(dd, p, q, x, y, z, tol):
    """Both quadruples stretched: two three-triangle discs sharing the
    triangle on x, y, z."""
    builds = []
    tri = (x, y, z)
    overs_p = [c for c in tri
               if _classify_quad(dd, tuple(sorted(set(tri) - {c})), (p, c),
                                 tol).verdict == "OverDistance"]
    overs_q = [c for c in tri
               if _classify_quad(dd, tuple(sorted(set(tri) - {c})), (q, c),
                                 tol).verdict == "OverDistance"]

    def angle_ok(apex, cp, beta, pp):
        ang1 = _comparison_angle(dd, cp, apex, beta)
        ang2 = _comparison_angle(dd, beta, apex, pp)
        return ang1 + ang2 > math.pi - 1e-12

    combos = []
    for cp in overs_p:
        for cq in overs_q:
            fa = sorted(set(tri) - {cp})
            fb = sorted(set(tri) - {cq})
            for ap in fa:
                for aq in fb:
                    pref = (0 if angle_ok(ap, cp, next(iter(set(fa) - {ap})), p)
                            else 1)
                    pref += (0 if angle_ok(aq, cq, next(iter(set(fb) - {aq})), q)
                             else 1)
                    combos.append((pref, cp, cq, ap, aq))
    combos.sort(key=lambda c: c[0])
    for _pref, cp, cq, ap, aq in combos:
        def build(cp=cp, cq=cq, ap=ap, aq=aq):
            corners = {}
            a, b, c = quadgeo.place_triangle(dd(x, y), dd(y, z), dd(z, x), tol)
            corners[x], corners[y], corners[z] = a, b, c
            shared = complexes.Piece(0, 2, np.array([a, b, c]))
            pieces = [shared]
            gluings = []
            marks = [complexes.MarkedPoint(f"v{x}", 0, np.array([1.0, 0, 0])),
                     complexes.MarkedPoint(f"v{y}", 0, np.array([0, 1.0, 0])),
                     complexes.MarkedPoint(f"v{z}", 0, np.array([0, 0, 1.0]))]
            for side, (pv, cv, apex) in enumerate(((p, cp, ap), (q, cq, aq))):
                beta = next(iter(set(tri) - {cv, apex}))
                t2 = complexes.Piece(1 + 2 * side, 2, np.array(
                    quadgeo.place_triangle(dd(apex, beta), dd(beta, pv),
                                           dd(pv, apex), tol)))
                t3 = complexes.Piece(2 + 2 * side, 2, np.array(
                    quadgeo.place_triangle(dd(apex, pv), dd(pv, cv),
                                           dd(cv, apex), tol)))
                pieces += [t2, t3]
                g2, g3 = t2.generators, t3.generators
                gluings += [
                    complexes.Gluing("segment", 0,
                                     np.array([corners[apex], corners[beta]]),
                                     t2.id, np.array([g2[0], g2[1]])),
                    complexes.Gluing("segment", t2.id, np.array([g2[0], g2[2]]),
                                     t3.id, np.array([g3[0], g3[1]])),
                    complexes.Gluing("segment", t3.id, np.array([g3[0], g3[2]]),
                                     0, np.array([corners[apex], corners[cv]])),
                ]
                marks.append(complexes.MarkedPoint(f"v{pv}", t2.id,
                                                   np.array([0, 0, 1.0])))
            C = complexes.assemble(pieces, gluings, marks)
            return C, "CaseG9/twin-disc", False
        builds.append(build)
    return builds


def _comparison_angle(dd, a, o, b):
    da, db, dab = dd(o, a), dd(o, b), dd(a, b)
    if da == 0.0 or db == 0.0:
        return 0.0
    return math.acos(float(np.clip((da * da + db * db - dab * dab)
                                   / (2 * da * db), -1.0, 1.0)))


def _g9_planar_points(dd, p, q, x, y, z, q_frame, tol):
    """x, y, z triangle with p placed in the (x, z) frame beside y and q in
    the chosen frame; all in one plane."""
    xy, yz, zx = dd(x, y), dd(y, z), dd(z, x)
    X2, Z2, Y2 = quadgeo.place_triangle(zx, yz, xy, tol)  # x, z, y corners
    P2 = _third_point(X2, Z2, dd(x, p), dd(p, z), side_ref=Y2)
    if q_frame == "xz":
        Q2 = _third_point(X2, Z2, dd(x, q), dd(q, z), side_ref=Y2)
    else:
        Q2 = _third_point(X2, Y2, dd(x, q), dd(q, y), side_ref=Z2)
    return {x: X2, y: Y2, z: Z2, p: P2, q: Q2}


def _g9_neither_embed(dd, p, q, x, y, z, tol):
    """Both quadruples shortened: doubled triangle or planar configuration,
    depending on which points land inside the comparison triangle."""
    builds = []
    for ylab, zlab in ((y, z), (z, y)):
        clp = _classify_quad(dd, (x, zlab), (p, ylab), tol)
        if clp.verdict != "UnderDistance":
            continue
        for q_frame, cq in (("xz", ylab), ("xy_", zlab)):
            clq = _classify_quad(dd, (x, zlab) if q_frame == "xz" else (x, ylab),
                                 (q, cq), tol)
            if clq.verdict != "UnderDistance":
                continue
            pts = _g9_planar_points(dd, p, q, x, ylab, zlab,
                                    "xz" if q_frame == "xz" else "xy", tol)

            def build_double(pts=pts, ylab=ylab, zlab=zlab):
                C = complexes.build_surface(
                    "double", (dd(x, ylab), dd(ylab, zlab), dd(zlab, x)))
                tri2 = np.array([pts[x], pts[ylab], pts[zlab]])
                bp = _bary_in(pts[p], tri2)
                bq = _bary_in(pts[q], tri2)
                if bp is None or bq is None:
                    raise WitnessConstructionError("point outside the triangle")
                C = complexes.rename_marks(C, {"v0": f"v{x}", "v1": f"v{ylab}",
                                               "v2": f"v{zlab}"})
                C = complexes.add_mark(C, f"v{p}", 0, bp)
                C = complexes.add_mark(C, f"v{q}", 1, bq)
                return C, "CaseG9/short-double", True

            def build_planar(pts=pts, ylab=ylab, zlab=zlab):
                names = [f"v{r}" for r in (x, ylab, zlab, p, q)]
                C = _one_piece_complex(
                    2, [pts[x], pts[ylab], pts[zlab], pts[p], pts[q]], names)
                return C, "CaseG9/short-planar", True

            builds += [build_double, build_planar]
    return builds


def _g9_mixed(dd, p, q, x, y, z, tol):
    """One quadruple spatial, the other not: disc glued to the spatial piece,
    or a nonnegatively curved surface/planar model when both free pairs are
    shortened."""
    builds = []
    x3, y3, z3 = _place_r3_base(dd(x, y), dd(y, z), dd(z, x))
    p3 = _trilaterate(x3, y3, z3, dd(x, p), dd(y, p), dd(z, p), +1.0)
    base = np.array([x3, y3, z3])
    for ylab, zlab in ((y, z), (z, y)):
        clq = _classify_quad(dd, (x, zlab), (q, ylab), tol)
        if clq.verdict == "OverDistance":
            for apex, beta in ((x, zlab), (zlab, x)):
                def build_disc_glue(apex=apex, beta=beta, ylab=ylab):
                    disc = _disc_for_over(dd, apex, (ylab, beta, q), tol)
                    tet = complexes.Piece(3, 3, np.vstack([base, p3]))
                    t1 = disc.pieces[0].generators  # apex, ylab, beta corners
                    coord3 = {x: x3, y: y3, z: z3}
                    feat3 = np.array([coord3[apex], coord3[ylab], coord3[beta]])
                    gl = complexes.Gluing("face", 0, t1, 3, feat3)
                    mp = complexes.MarkedPoint(f"v{p}", 3, np.array([0, 0, 0, 1.0]))
                    return _append(disc, [tet], [gl], [mp]), \
                        "CaseG9/disc-spatial", False
                builds.append(build_disc_glue)
    cly = _classify_quad(dd, (x, z), (q, y), tol)
    clz = _classify_quad(dd, (x, y), (q, z), tol)
    if cly.verdict == "UnderDistance" and clz.verdict == "UnderDistance":
        tri2 = np.array([x3[:2], y3[:2], z3[:2]])
        Q2 = _third_point(x3[:2], z3[:2], dd(x, q), dd(q, z), side_ref=y3[:2])
        coplanar = abs(p3[2]) <= 1e-7 * max(1.0, dd(x, y) + dd(y, z))
        bq = _bary_in(Q2, tri2)

        def build_tetra_surface():
            C = complexes.build_surface("tetra_boundary", np.vstack([base, p3]))
            fv = C.meta["face_vertices"]
            C = complexes.rename_marks(C, {"v0": f"v{x}", "v1": f"v{y}",
                                           "v2": f"v{z}", "v3": f"v{p}"})
            for fid, verts in enumerate(fv):
                if set(verts) == {0, 1, 2}:
                    order = [list(verts).index(i) for i in (0, 1, 2)]
                    b = np.zeros(3)
                    if bq is None:
                        raise WitnessConstructionError("free point outside base")
                    for k in range(3):
                        b[order[k]] = bq[k]
                    C = complexes.add_mark(C, f"v{q}", fid, b)
                    break
            else:
                raise WitnessConstructionError("base face not on the hull")
            return C, "CaseG9/tetra-surface", True

        def build_double_pq():
            C = complexes.build_surface("double", (dd(x, y), dd(y, z), dd(z, x)))
            bp = _bary_in(p3[:2], tri2)
            if bp is None or bq is None:
                raise WitnessConstructionError("point outside the triangle")
            C = complexes.rename_marks(C, {"v0": f"v{x}", "v1": f"v{y}",
                                           "v2": f"v{z}"})
            C = complexes.add_mark(C, f"v{p}", 0, bp)
            C = complexes.add_mark(C, f"v{q}", 1, bq)
            return C, "CaseG9/mixed-double", True

        def build_planar():
            names = [f"v{r}" for r in (x, y, z, p, q)]
            C = _one_piece_complex(2, [x3[:2], y3[:2], z3[:2], p3[:2], Q2], names)
            return C, "CaseG9/mixed-planar", True

        if not coplanar:
            builds += [build_tetra_surface, build_double_pq, build_planar]
        else:
            builds += [build_double_pq, build_planar, build_tetra_surface]
    return builds


def witness_g9(X, f, G: graphs.SimpleGraph, tol: float = DEFAULT_TOL) -> Witness:
    perm = graphs.find_isomorphism(G, _G9_CANON)
    if perm is None:
        raise WitnessConstructionError("graph does not match the eight-edge case")
    role = {perm[u]: u for u in range(5)}  # canonical role -> vertex

    def dd(i, j):
        return X.d(f[role[i]], f[role[j]])

    attempts = []
    axes = [(1, 3, 0, 2, 4), (2, 4, 0, 1, 3)]
    for p, q, x, y, z in axes:
        emb_p = _quad_embeddable(dd, (p, x, y, z), tol)
        emb_q = _quad_embeddable(dd, (q, x, y, z), tol)
        if emb_p and emb_q:
            builds = _g9_both_embed(dd, p, q, x, y, z, tol)
        elif emb_p or emb_q:
            pp, qq = (p, q) if emb_p else (q, p)
            builds = _g9_mixed(dd, pp, qq, x, y, z, tol)
        else:
            builds = (_g9_twin_disc(dd, p, q, x, y, z, tol)
                      + _g9_neither_embed(dd, p, q, x, y, z, tol))
        for build in builds:
            try:
                C, strat, kb = build()
            except Exception as exc:
                attempts.append(f"{type(exc).__name__}: {exc}")
                continue
            C = complexes.rename_marks(C, {f"v{i}": f"m{role[i]}" for i in range(5)})
            C = complexes.rename_marks(C, {f"m{u}": f"v{u}" for u in range(5)})
            W = Witness(C, {u: f"v{u}" for u in range(5)}, strat,
                        kirszbraun_required=kb, special_vertex=role[0],
                        meta={"model": "complex", "attempts": list(attempts)})
            if verify(X, f, G, W, max(tol, 1e-8)).ok:
                return W
            attempts.append(strat)
    raise WitnessConstructionError(f"no verifying branch; tried {attempts}")


# ------------------------------------------------------------- dispatcher


def _quotient(X, f, G, tol, seed, multistarts):
    band = tol * max(X.scale, 1e-300)
    uf = complexes._UnionFind()
    for u in range(G.n):
        uf.find(u)
    for u, v in itertools.combinations(range(G.n), 2):
        if X.d(f[u], f[v]) <= band:
            uf.union(u, v)
    reps = []
    rep_of = {}
    for u in range(G.n):
        r = uf.find(u)
        if r not in rep_of:
            rep_of[r] = len(reps)
            reps.append(u)
    Xr = metric.restrict(X, [f[u] for u in reps])
    C = exact_embedding(Xr, [f"v{reps[k]}" for k in range(len(reps))], tol)
    assignment = {u: f"v{reps[rep_of[uf.find(u)]]}" for u in range(G.n)}
    eqs = frozenset(frozenset((u, v))
                    for u, v in itertools.combinations(range(G.n), 2))
    return Witness(C, assignment, "Quotient", equalities=eqs,
                   meta={"model": "complex", "classes": len(reps)})


def _construct(X, f, G, tol, seed, multistarts, check=True):
    if check:
        dec = boxtimes.space_satisfies(X, tol)
        if not dec.holds:
            raise BoxtimesViolated(dec.certificate)
    st = strategy_for(G, X, f, tol)
    if st.tag == "Quotient":
        return _quotient(X, f, G, tol, seed, multistarts)
    if st.tag == "Line":
        return witness_line(X, f, G, tol)
    if st.tag == "Tree":
        return witness_tree(X, f, G, tol)
    if st.tag in ("SegmentSpacerGlue", "PointGlue"):
        return witness_glue(X, f, G, tol=tol, seed=seed, multistarts=multistarts)
    if st.tag == "Cycle":
        return witness_cycle(X, f, G, st.data[0], seed, multistarts, tol)
    if st.tag in ("Fan35", "Fan46"):
        return witness_fan(X, f, G, st.tag, tol)
    if st.tag == "CaseG7":
        return witness_g7(X, f, G, tol)
    if st.tag == "CaseG9":
        return witness_g9(X, f, G, tol)
    raise WitnessConstructionError(f"unhandled strategy {st.tag}")


def construct(X, f=None, G: graphs.SimpleGraph = None, tol: float = DEFAULT_TOL,
              seed: int = 0, multistarts: int = 64) -> Witness:
    """Build a witness for the G-pattern on (X, f); verification-arbitrated
    branch selection inside the case strategies."""
    if G is None:
        raise ValueError("a graph is required")
    if G.n > 5:
        raise TooManyPoints(G.n)
    f = tuple(range(G.n)) if f is None else tuple(f)
    return _construct(X, f, G, tol, seed, multistarts, check=True)
