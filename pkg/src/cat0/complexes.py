"""Piecewise-Euclidean complexes: convex pieces of dimension 1-3 glued along
points, segments and triangular faces, with marked points, vertex angle sums,
and intrinsic distance computation (exact and mesh oracle)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as _dijkstra

from .errors import (
    BadBarycentric,
    DegenerateInput,
    DisconnectedComplex,
    LengthMismatch,
    NegativeLength,
    NotInteriorVertex,
    TriangleViolation,
)
from .quadgeo import place_triangle, planar_angle

MERGE_EPS = 1e-9
WALK_CAP = 6
FEATURE_VISIT_CAP = 2


@dataclass(frozen=True)
class Piece:
    id: int
    dim: int
    generators: np.ndarray  # (k, dim)
    unbounded: bool = False

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=float).reshape(-1, self.dim)
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)


@dataclass(frozen=True)
class Gluing:
    kind: str  # "point" | "segment" | "face"
    piece_a: int
    feature_a: np.ndarray  # (1|2|3, dim_a) coordinates in piece a
    piece_b: int
    feature_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "feature_a", np.asarray(self.feature_a, dtype=float))
        object.__setattr__(self, "feature_b", np.asarray(self.feature_b, dtype=float))

    def nparams(self) -> int:
        return {"point": 0, "segment": 1, "face": 2}[self.kind]

    def point_at(self, params, side: str) -> np.ndarray:
        f = self.feature_a if side == "a" else self.feature_b
        if self.kind == "point":
            return f[0]
        if self.kind == "segment":
            (lam,) = params
            return f[0] + lam * (f[1] - f[0])
        u, v = params
        return f[0] + u * (f[1] - f[0]) + v * (f[2] - f[0])


@dataclass(frozen=True)
class MarkedPoint:
    name: str
    piece: int
    bary: np.ndarray  # coefficients over the piece's generators

    def __post_init__(self):
        object.__setattr__(self, "bary", np.asarray(self.bary, dtype=float))


@dataclass(frozen=True)
class ComplexSpace:
    pieces: dict  # id -> Piece
    gluings: tuple
    marked: dict  # name -> MarkedPoint
    meta: dict = field(default_factory=dict, compare=False)

    def mark_coords(self, name: str) -> tuple:
        m = self.marked[name]
        p = self.pieces[m.piece]
        return m.piece, m.bary @ p.generators

    @property
    def scale(self) -> float:
        best = 0.0
        for p in self.pieces.values():
            g = p.generators
            if len(g) >= 2:
                diff = g[:, None, :] - g[None, :, :]
                best = max(best, float(np.sqrt((diff * diff).sum(-1)).max()))
        return best or 1.0

    def to_json_dict(self) -> dict:
        return {
            "pieces": [{"id": p.id, "dim": p.dim, "generators": p.generators.tolist(),
                        "unbounded": p.unbounded} for p in self.pieces.values()],
            "gluings": [{"kind": g.kind, "piece_a": g.piece_a,
                         "feature_a": g.feature_a.tolist(), "piece_b": g.piece_b,
                         "feature_b": g.feature_b.tolist()} for g in self.gluings],
            "marked": [{"name": m.name, "piece": m.piece, "bary": m.bary.tolist()}
                       for m in self.marked.values()],
        }


def complex_from_json_dict(obj: dict) -> ComplexSpace:
    pieces = [Piece(p["id"], p["dim"], np.asarray(p["generators"]),
                    p.get("unbounded", False)) for p in obj["pieces"]]
    gluings = [Gluing(g["kind"], g["piece_a"], np.asarray(g["feature_a"]),
                      g["piece_b"], np.asarray(g["feature_b"])) for g in obj["gluings"]]
    marked = [MarkedPoint(m["name"], m["piece"], np.asarray(m["bary"]))
              for m in obj["marked"]]
    return assemble(pieces, gluings, marked)


def _feature_lengths(g: Gluing):
    def side(f):
        if len(f) == 1:
            return ()
        if len(f) == 2:
            return (float(np.linalg.norm(f[1] - f[0])),)
        return tuple(sorted(float(np.linalg.norm(f[i] - f[j]))
                            for i, j in ((0, 1), (1, 2), (0, 2))))

    return side(g.feature_a), side(g.feature_b)


def assemble(pieces, gluings, marked) -> ComplexSpace:
    """Validate and index a complex."""
    pieces = {p.id: p for p in pieces}
    scale = 1.0
    for p in pieces.values():
        g = p.generators
        if len(g) >= 2:
            diff = g[:, None, :] - g[None, :, :]
            scale = max(scale, float(np.sqrt((diff * diff).sum(-1)).max()))
    for g in gluings:
        la, lb = _feature_lengths(g)
        if any(abs(a - b) > MERGE_EPS * scale for a, b in zip(la, lb)):
            raise LengthMismatch(f"glued features differ in length: {la} vs {lb}")
    # connectivity
    if len(pieces) > 1:
        adj = {pid: set() for pid in pieces}
        for g in gluings:
            adj[g.piece_a].add(g.piece_b)
            adj[g.piece_b].add(g.piece_a)
        seen = set()
        stack = [next(iter(pieces))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v] - seen)
        if seen != set(pieces):
            raise DisconnectedComplex(f"pieces {set(pieces) - seen} unreachable")
    marks = {}
    for m in marked:
        if m.piece not in pieces:
            raise BadBarycentric(f"mark {m.name} references missing piece {m.piece}")
        b = m.bary
        if len(b) != len(pieces[m.piece].generators):
            raise BadBarycentric(f"mark {m.name}: {len(b)} coefficients for "
                                 f"{len(pieces[m.piece].generators)} generators")
        if np.any(b < -1e-9) or abs(b.sum() - 1.0) > 1e-9:
            raise BadBarycentric(f"mark {m.name}: coefficients {b} not a convex combination")
        marks[m.name] = m
    return ComplexSpace(pieces=pieces, gluings=tuple(gluings), marked=marks)


def rename_marks(C: ComplexSpace, mapping: dict) -> ComplexSpace:
    """New complex with marks renamed per mapping (missing names kept)."""
    marks = [MarkedPoint(mapping.get(m.name, m.name), m.piece, m.bary)
             for m in C.marked.values()]
    out = assemble(list(C.pieces.values()), list(C.gluings), marks)
    out.meta.update(C.meta)
    return out


def add_mark(C: ComplexSpace, name: str, piece: int, bary) -> ComplexSpace:
    marks = list(C.marked.values()) + [MarkedPoint(name, piece, np.asarray(bary, float))]
    out = assemble(list(C.pieces.values()), list(C.gluings), marks)
    out.meta.update(C.meta)
    return out


# ---------------------------------------------------------------- builders


def _triangle_piece(pid: int, lengths, tol=1e-9) -> Piece:
    a, b, c = place_triangle(lengths[0], lengths[1], lengths[2], tol)
    return Piece(pid, 2, np.array([a, b, c]))


def build_disc(d_xy, d_xz, d_xw, d_yz, d_zw, d_wy, tol: float = 1e-9) -> ComplexSpace:
    """Three triangles with common apex x glued pairwise along the apex
    segments: T(x,y,z) ~ T(x,z,w) along [x,z], T(x,z,w) ~ T(x,w,y) along
    [x,w], T(x,w,y) ~ T(x,y,z) along [x,y]."""
    t1 = _triangle_piece(0, (d_xy, d_yz, d_xz), tol)  # corners x, y, z
    t2 = _triangle_piece(1, (d_xz, d_zw, d_xw), tol)  # corners x, z, w
    t3 = _triangle_piece(2, (d_xw, d_wy, d_xy), tol)  # corners x, w, y
    g1, g2, g3 = t1.generators, t2.generators, t3.generators
    gluings = [
        Gluing("segment", 0, np.array([g1[0], g1[2]]), 1, np.array([g2[0], g2[1]])),
        Gluing("segment", 1, np.array([g2[0], g2[2]]), 2, np.array([g3[0], g3[1]])),
        Gluing("segment", 2, np.array([g3[0], g3[2]]), 0, np.array([g1[0], g1[1]])),
    ]
    marks = [
        MarkedPoint("x", 0, np.array([1.0, 0, 0])),
        MarkedPoint("y", 0, np.array([0, 1.0, 0])),
        MarkedPoint("z", 0, np.array([0, 0, 1.0])),
        MarkedPoint("w", 1, np.array([0, 0, 1.0])),
    ]
    C = assemble([t1, t2, t3], gluings, marks)
    apex = (planar_angle(g1[1], g1[0], g1[2]) + planar_angle(g2[1], g2[0], g2[2])
            + planar_angle(g3[1], g3[0], g3[2]))
    C.meta["apex_angle_sum"] = apex
    C.meta["cat0"] = apex >= 2 * math.pi - 1e-9
    return C


def build_fan(tris, shares, marks) -> ComplexSpace:
    """Chain of triangles glued along full sides.

    tris: list of ((n0,n1,n2), (d01,d12,d20)) corner names and side lengths.
    shares: list of ((name_i, name_j), ...) of length len(tris)-1; entry k is
        the pair of corner names shared by triangle k and triangle k+1.
    marks: list of (mark_name, tri_index, corner_name).
    """
    pieces = []
    corner_idx = []
    for pid, (names, lengths) in enumerate(tris):
        pieces.append(_triangle_piece(pid, lengths))
        corner_idx.append({nm: i for i, nm in enumerate(names)})
    gluings = []
    for k, (na, nb) in enumerate(shares):
        ga = pieces[k].generators
        gb = pieces[k + 1].generators
        ia, ja = corner_idx[k][na], corner_idx[k][nb]
        ib, jb = corner_idx[k + 1][na], corner_idx[k + 1][nb]
        gluings.append(Gluing("segment", k, np.array([ga[ia], ga[ja]]),
                              k + 1, np.array([gb[ib], gb[jb]])))
    mps = []
    for name, ti, corner in marks:
        bary = np.zeros(3)
        bary[corner_idx[ti][corner]] = 1.0
        mps.append(MarkedPoint(name, ti, bary))
    return assemble(pieces, gluings, mps)


def _plane_frame(p0, p1, p2):
    """Isometric map of the plane through three 3-D points onto R^2."""
    e1 = p1 - p0
    n1 = np.linalg.norm(e1)
    e1 = e1 / n1 if n1 > 0 else np.array([1.0, 0, 0])
    v = p2 - p0
    v2 = v - np.dot(v, e1) * e1
    n2 = np.linalg.norm(v2)
    if n2 > 0:
        e2 = v2 / n2
    else:
        e2 = np.zeros(3)
        e2[np.argmin(np.abs(e1))] = 1.0
        e2 -= np.dot(e2, e1) * e1
        e2 /= np.linalg.norm(e2)

    def to2(q):
        return np.array([np.dot(q - p0, e1), np.dot(q - p0, e2)])

    return to2


def build_surface(kind: str, data) -> ComplexSpace:
    """Closed nonnegatively curved surfaces.

    kind "double": data = (d01, d12, d20) side lengths of a nondegenerate
        triangle; two copies glued along all three sides.
    kind "tetra_boundary": data = array of four non-coplanar points in R^3;
        the four faces glued along the six shared edges.
    """
    if kind == "double":
        d01, d12, d20 = data
        a, b, c = place_triangle(d01, d12, d20)
        if planar_angle(b, a, c) in (0.0, math.pi) or np.linalg.norm(np.cross(
                np.append(b - a, 0), np.append(c - a, 0))) < 1e-12 * max(d01, d12, d20) ** 2:
            raise DegenerateInput("double of a degenerate triangle")
        gens = np.array([a, b, c])
        p0 = Piece(0, 2, gens)
        p1 = Piece(1, 2, gens)
        gluings = [Gluing("segment", 0, np.array([gens[i], gens[j]]),
                          1, np.array([gens[i], gens[j]]))
                   for i, j in ((0, 1), (1, 2), (2, 0))]
        marks = [MarkedPoint("v0", 0, np.array([1.0, 0, 0])),
                 MarkedPoint("v1", 0, np.array([0, 1.0, 0])),
                 MarkedPoint("v2", 0, np.array([0, 0, 1.0]))]
        C = assemble([p0, p1], gluings, marks)
        C.meta["nonneg_curved"] = True
        return C
    if kind == "tetra_boundary":
        pts = np.asarray(data, dtype=float).reshape(4, 3)
        vol = abs(np.linalg.det(pts[1:] - pts[0]))
        if vol < 1e-12 * max(1.0, np.abs(pts).max()) ** 3:
            raise DegenerateInput("coplanar points")
        return polytope_surface(pts, [f"v{i}" for i in range(4)])
    raise DegenerateInput(f"unknown surface kind {kind!r}")


def polytope_surface(pts3, names) -> ComplexSpace:
    """Boundary surface of the convex hull of 3-D points, as a complex of
    planar faces glued along shared edges, with a mark at each named point."""
    from scipy.spatial import ConvexHull

    pts3 = np.asarray(pts3, dtype=float)
    hull = ConvexHull(pts3)
    pieces = []
    face_vertices = []  # per face: list of point indices
    frames = []
    for pid, simplex in enumerate(hull.simplices):
        p0, p1, p2 = pts3[simplex]
        to2 = _plane_frame(p0, p1, p2)
        gens = np.array([to2(pts3[i]) for i in simplex])
        pieces.append(Piece(pid, 2, gens))
        face_vertices.append(list(simplex))
        frames.append(to2)
    gluings = []
    for fa, fb in itertools.combinations(range(len(pieces)), 2):
        common = [v for v in face_vertices[fa] if v in face_vertices[fb]]
        if len(common) == 2:
            i, j = common
            ga = np.array([frames[fa](pts3[i]), frames[fa](pts3[j])])
            gb = np.array([frames[fb](pts3[i]), frames[fb](pts3[j])])
            gluings.append(Gluing("segment", fa, ga, fb, gb))
    marks = []
    for idx, name in enumerate(names):
        if name is None:
            continue
        for fid, fv in enumerate(face_vertices):
            if idx in fv:
                bary = np.zeros(3)
                bary[fv.index(idx)] = 1.0
                marks.append(MarkedPoint(name, fid, bary))
                break
        else:
            raise DegenerateInput(f"point {idx} is not a hull vertex")
    C = assemble(pieces, gluings, marks)
    C.meta["nonneg_curved"] = True
    C.meta["face_vertices"] = face_vertices
    return C


def _renumber(C: ComplexSpace, offset: int):
    pieces = [Piece(p.id + offset, p.dim, p.generators, p.unbounded)
              for p in C.pieces.values()]
    gluings = [Gluing(g.kind, g.piece_a + offset, g.feature_a,
                      g.piece_b + offset, g.feature_b) for g in C.gluings]
    marks = [MarkedPoint(m.name, m.piece + offset, m.bary) for m in C.marked.values()]
    return pieces, gluings, marks


def glue_at_point(A: ComplexSpace, a: str, B: ComplexSpace, b: str) -> ComplexSpace:
    """Wedge sum identifying mark a of A with mark b of B."""
    off = max(A.pieces) + 1
    pa, ga, ma = _renumber(A, 0)
    pb, gb, mb = _renumber(B, off)
    pid_a, coord_a = A.mark_coords(a)
    pid_b, coord_b = B.mark_coords(b)
    joint = Gluing("point", pid_a, coord_a.reshape(1, -1),
                   pid_b + off, coord_b.reshape(1, -1))
    names = {m.name for m in ma}
    mb = [m for m in mb if m.name not in names]
    return assemble(pa + pb, ga + gb + [joint], ma + mb)


def attach_segment(A: ComplexSpace, a: str, length: float, far_name: str) -> ComplexSpace:
    """Attach a fresh interval of the given length at mark a."""
    if length < 0:
        raise NegativeLength(f"negative spacer length {length}")
    pid = max(A.pieces) + 1
    seg = Piece(pid, 1, np.array([[0.0], [float(length)]]))
    pid_a, coord_a = A.mark_coords(a)
    joint = Gluing("point", pid_a, coord_a.reshape(1, -1), pid, np.array([[0.0]]))
    pieces = list(A.pieces.values()) + [seg]
    marks = list(A.marked.values()) + [MarkedPoint(far_name, pid, np.array([0.0, 1.0]))]
    return assemble(pieces, list(A.gluings) + [joint], marks)


def random_fan(tris, marks) -> ComplexSpace:
    """Fan of triangles around a hub vertex; tris[i] = (|Q P_i|, |P_i P_{i+1}|,
    |Q P_{i+1}|); marks = list of (name, piece index, barycentric coords)."""
    pieces = [_triangle_piece(i, t) for i, t in enumerate(tris)]
    gluings = []
    for i in range(len(tris) - 1):
        ga, gb = pieces[i].generators, pieces[i + 1].generators
        gluings.append(Gluing("segment", i, np.array([ga[0], ga[2]]),
                              i + 1, np.array([gb[0], gb[1]])))
    mps = [MarkedPoint(nm, pid, np.asarray(bary, float)) for nm, pid, bary in marks]
    return assemble(pieces, gluings, mps)


# ------------------------------------------------------- vertex angle sums


def _corner_list(C: ComplexSpace):
    """(piece, vertex coord, the two hull-edge neighbor coords, angle) for
    every corner of every 2-D piece (hull corners; collinear pieces skipped)."""
    corners = []
    for p in C.pieces.values():
        if p.dim != 2:
            continue
        g = p.generators
        uniq = []
        for q in g:
            if not any(np.linalg.norm(q - r) <= MERGE_EPS * C.scale for r in uniq):
                uniq.append(q)
        if len(uniq) < 3:
            continue
        pts = np.array(uniq)
        try:
            from scipy.spatial import ConvexHull

            hull = ConvexHull(pts)
            ring = [pts[i] for i in hull.vertices]
        except Exception:
            continue  # degenerate (collinear) piece: no corners with area
        k = len(ring)
        for i in range(k):
            v = ring[i]
            prev_, next_ = ring[(i - 1) % k], ring[(i + 1) % k]
            corners.append((p.id, v, prev_, next_, planar_angle(prev_, v, next_)))
    return corners


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        p = self.parent.setdefault(x, x)
        if p != x:
            self.parent[x] = p = self.find(p)
        return p

    def union(self, x, y):
        self.parent[self.find(x)] = self.find(y)


def _vertex_classes(C: ComplexSpace, corners):
    """Group corner vertices identified by the gluings."""
    eps = MERGE_EPS * C.scale
    keys = [(pid, i) for i, (pid, v, *_rest) in enumerate(corners)]
    by_piece = {}
    for i, (pid, v, *_rest) in enumerate(corners):
        by_piece.setdefault(pid, []).append((i, v))
    uf = _UnionFind()
    for i, _ in enumerate(corners):
        uf.find(i)
    # merge coincident corners within a piece
    for pid, lst in by_piece.items():
        for (i, v), (j, w) in itertools.combinations(lst, 2):
            if np.linalg.norm(v - w) <= eps:
                uf.union(i, j)
    # merge across gluings: every feature point that is a corner on both sides
    for g in C.gluings:
        pts_a = g.feature_a
        pts_b = g.feature_b
        for qa, qb in zip(pts_a, pts_b):
            ia = [i for i, v in by_piece.get(g.piece_a, []) if np.linalg.norm(v - qa) <= eps]
            ib = [i for i, v in by_piece.get(g.piece_b, []) if np.linalg.norm(v - qb) <= eps]
            for i in ia:
                for j in ib:
                    uf.union(i, j)
    classes = {}
    for i, _ in enumerate(corners):
        classes.setdefault(uf.find(i), []).append(i)
    del keys
    return list(classes.values())


def _slot_glued(C: ComplexSpace, pid, v, u) -> bool:
    """Is the hull edge from corner v towards u part of a glued feature of
    this piece? (Features built by this package are full hull edges.)"""
    eps = MERGE_EPS * C.scale
    for g in C.gluings:
        if g.kind != "segment":
            continue
        for side_pid, f in ((g.piece_a, g.feature_a), (g.piece_b, g.feature_b)):
            if side_pid != pid:
                continue
            a, b = f
            if ((np.linalg.norm(a - v) <= eps and np.linalg.norm(b - u) <= eps)
                    or (np.linalg.norm(b - v) <= eps and np.linalg.norm(a - u) <= eps)):
                return True
    return False


def _has_degenerate_2d(C: ComplexSpace) -> bool:
    """True if some 2-D piece is collinear or nearly so (tiny hull height);
    such complexes are collapsed limits where angle sums are unreliable."""
    for p in C.pieces.values():
        if p.dim != 2:
            continue
        g = p.generators
        best = 0.0
        for i, j in itertools.combinations(range(len(g)), 2):
            side = np.linalg.norm(g[j] - g[i])
            if side <= 0:
                continue
            for k in range(len(g)):
                if k in (i, j):
                    continue
                u, v = g[j] - g[i], g[k] - g[i]
                height = abs(float(u[0] * v[1] - u[1] * v[0])) / side
                best = max(best, height)
        if best <= 1e-6 * max(C.scale, 1e-300):
            return True
    return False


def vertex_report(C: ComplexSpace):
    """Interior/boundary classification and angle sums of 2-D vertex classes."""
    corners = _corner_list(C)
    out = []
    has_3d = (any(p.dim == 3 for p in C.pieces.values())
              or _has_degenerate_2d(C))
    for cls in _vertex_classes(C, corners):
        total = sum(corners[i][4] for i in cls)
        interior = all(
            _slot_glued(C, corners[i][0], corners[i][1], corners[i][2])
            and _slot_glued(C, corners[i][0], corners[i][1], corners[i][3])
            for i in cls
        ) and not has_3d
        rep = corners[cls[0]]
        out.append({"piece": rep[0], "coord": rep[1], "angle_sum": total,
                    "interior": interior})
    return out


def angle_sum(C: ComplexSpace, piece: int, coord) -> float:
    coord = np.asarray(coord, dtype=float)
    eps = MERGE_EPS * C.scale
    corners = _corner_list(C)
    for cls in _vertex_classes(C, corners):
        for i in cls:
            if corners[i][0] == piece and np.linalg.norm(corners[i][1] - coord) <= eps:
                rep = sum(corners[j][4] for j in cls)
                interior = all(
                    _slot_glued(C, corners[j][0], corners[j][1], corners[j][2])
                    and _slot_glued(C, corners[j][0], corners[j][1], corners[j][3])
                    for j in cls)
                if not interior:
                    raise NotInteriorVertex(f"vertex at {coord} on piece {piece} "
                                            f"has an unglued edge slot")
                return float(rep)
    raise NotInteriorVertex(f"no vertex at {coord} on piece {piece}")


def local_cat0_check(C: ComplexSpace, tol: float = 1e-9) -> bool:
    """Every interior 2-D vertex has angle sum at least 2 pi (within tol)."""
    for entry in vertex_report(C):
        if entry["interior"] and entry["angle_sum"] < 2 * math.pi - tol:
            return False
    return True


# ------------------------------------------------------------- distances


def _walks(C: ComplexSpace, start: int, goal: int):
    """Gluing sequences from the start piece to the goal piece."""
    incident = {pid: [] for pid in C.pieces}
    for gi, g in enumerate(C.gluings):
        incident[g.piece_a].append((gi, g.piece_b))
        if g.piece_b != g.piece_a:
            incident[g.piece_b].append((gi, g.piece_a))
    results = []

    def rec(piece, seq, counts, last):
        if piece == goal:
            results.append(tuple(seq))
        if len(seq) >= WALK_CAP:
            return
        for gi, other in incident[piece]:
            if gi == last:
                continue
            if counts.get(gi, 0) >= FEATURE_VISIT_CAP:
                continue
            counts[gi] = counts.get(gi, 0) + 1
            seq.append(gi)
            rec(other, seq, counts, gi)
            seq.pop()
            counts[gi] -= 1

    rec(start, [], {}, None)
    return results


def _walk_pieces(C: ComplexSpace, start: int, seq):
    pieces = [start]
    for gi in seq:
        g = C.gluings[gi]
        pieces.append(g.piece_b if pieces[-1] == g.piece_a else g.piece_a)
    return pieces


def _crossing_data(C: ComplexSpace, start, seq):
    """Affine parameterization of each crossing: entry/exit base points and
    direction rows in the frames of the pieces before/after the crossing."""
    pieces = _walk_pieces(C, start, seq)
    out = []
    off = 0
    for step, gi in enumerate(seq):
        g = C.gluings[gi]
        side_in = "a" if pieces[step] == g.piece_a else "b"
        fin = g.feature_a if side_in == "a" else g.feature_b
        fout = g.feature_b if side_in == "a" else g.feature_a
        npar = g.nparams()
        din = np.array([fin[k + 1] - fin[0] for k in range(npar)])
        dout = np.array([fout[k + 1] - fout[0] for k in range(npar)])
        out.append((fin[0], din, fout[0], dout, off, npar, g.kind))
        off += npar
    return out, off


def _walk_value_grad(crossings, m, p_coord, q_coord, x):
    """Path length and its gradient with respect to the crossing parameters."""
    grad = np.zeros(m)
    pts_in = []
    pts_out = []
    for base_in, din, base_out, dout, off, npar, _k in crossings:
        pars = x[off:off + npar]
        pts_in.append(base_in + pars @ din if npar else base_in)
        pts_out.append(base_out + pars @ dout if npar else base_out)
    total = 0.0
    k = len(crossings)
    for j in range(k + 1):
        u = p_coord if j == 0 else pts_out[j - 1]
        v = q_coord if j == k else pts_in[j]
        diff = u - v
        norm = math.sqrt(float(diff @ diff))
        total += norm
        if norm <= 0.0:
            continue
        unit = diff / norm
        if j > 0:
            _bi, _di, _bo, dout, off, npar, _kind = crossings[j - 1]
            if npar:
                grad[off:off + npar] += dout @ unit
        if j < k:
            base_in, din, _bo, _do, off, npar, _kind = crossings[j]
            if npar:
                grad[off:off + npar] -= din @ unit
    return total, grad


def _make_walk_fg(crossings, m, p_coord, q_coord):
    """Value-and-gradient callable for a walk; all-segment walks use a
    stacked vectorized evaluation, mixed walks fall back to the generic loop."""
    dims = {len(c[0]) for c in crossings} | {len(c[2]) for c in crossings} | \
        {len(p_coord), len(q_coord)}
    if crossings and len(dims) == 1 and all(c[5] == 1 for c in crossings):
        bi = np.vstack([c[0] for c in crossings])
        din = np.vstack([c[1][0] for c in crossings])
        bo = np.vstack([c[2] for c in crossings])
        dout = np.vstack([c[3][0] for c in crossings])
        p_row = np.asarray(p_coord, dtype=float)[None, :]
        q_row = np.asarray(q_coord, dtype=float)[None, :]

        def fg(x):
            xc = np.asarray(x, dtype=float)[:, None]
            u = np.concatenate([p_row, bo + xc * dout])
            v = np.concatenate([bi + xc * din, q_row])
            diff = u - v
            norms = np.sqrt((diff * diff).sum(axis=1))
            safe = np.where(norms > 0.0, norms, 1.0)
            units = diff / safe[:, None]
            grad = (dout * units[1:]).sum(axis=1) - \
                (din * units[:-1]).sum(axis=1)
            return float(norms.sum()), grad

        return fg
    return lambda x: _walk_value_grad(crossings, m, p_coord, q_coord, x)


def _point_feature_dist(pt, f):
    """Distance from a point to a gluing feature (for faces: distance to the
    feature plane, a valid lower bound)."""
    if len(f) == 1:
        return float(np.linalg.norm(pt - f[0]))
    if len(f) == 2:
        return _point_segment_dist(pt, f[0], f[1])
    e1, e2 = f[1] - f[0], f[2] - f[0]
    n = None
    if f.shape[1] == 3:
        n = np.cross(e1, e2)
        nn = np.linalg.norm(n)
        if nn > 0:
            return abs(float(np.dot(pt - f[0], n / nn)))
    return 0.0


def _point_segment_dist(pt, a, b):
    v = b - a
    vv = float(np.dot(v, v))
    t = 0.0 if vv == 0 else float(np.clip(np.dot(pt - a, v) / vv, 0.0, 1.0))
    return float(np.linalg.norm(pt - (a + t * v)))


def _feature_feature_dist(fa, fb):
    """Minimum distance between two features in a common frame (faces give 0,
    a valid lower bound)."""
    if len(fa) > 2 or len(fb) > 2:
        return 0.0
    if len(fa) == 1:
        return _point_feature_dist(fa[0], fb)
    if len(fb) == 1:
        return _point_feature_dist(fb[0], fa)
    # segment-segment: sample-free clamped quadratic (Eberly)
    p0, p1 = fa
    q0, q1 = fb
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = float(np.dot(d1, d1))
    e = float(np.dot(d2, d2))
    fr = float(np.dot(d2, r))
    if a <= 1e-30 and e <= 1e-30:
        return float(np.linalg.norm(r))
    if a <= 1e-30:
        t = np.clip(fr / e, 0.0, 1.0)
        return float(np.linalg.norm(p0 - (q0 + t * d2)))
    c = float(np.dot(d1, r))
    if e <= 1e-30:
        s = np.clip(-c / a, 0.0, 1.0)
        return float(np.linalg.norm(p0 + s * d1 - q0))
    b = float(np.dot(d1, d2))
    denom = a * e - b * b
    s = float(np.clip((b * fr - c * e) / denom, 0.0, 1.0)) if denom > 1e-30 else 0.0
    t = (b * s + fr) / e
    if t < 0.0:
        t = 0.0
        s = float(np.clip(-c / a, 0.0, 1.0))
    elif t > 1.0:
        t = 1.0
        s = float(np.clip((b - c) / a, 0.0, 1.0))
    return float(np.linalg.norm(p0 + s * d1 - (q0 + t * d2)))


def _walk_lower_bound(C: ComplexSpace, start, seq, p_coord, q_coord):
    """Sum of per-leg lower bounds: point-to-feature for the first and last
    legs, feature-to-feature within the traversed piece for middle legs."""
    pieces = _walk_pieces(C, start, seq)
    feats_in = []
    feats_out = []
    for step, gi in enumerate(seq):
        g = C.gluings[gi]
        side_in = "a" if pieces[step] == g.piece_a else "b"
        feats_in.append(g.feature_a if side_in == "a" else g.feature_b)
        feats_out.append(g.feature_b if side_in == "a" else g.feature_a)
    total = _point_feature_dist(p_coord, feats_in[0])
    for j in range(1, len(seq)):
        total += _feature_feature_dist(feats_out[j - 1], feats_in[j])
    total += _point_feature_dist(q_coord, feats_out[-1])
    return total


def _minimize_walk(C: ComplexSpace, start, seq, p_coord, q_coord, polish=False):
    crossings, m = _crossing_data(C, start, seq)
    if m == 0:
        return _walk_value_grad(crossings, 0, p_coord, q_coord, np.zeros(0))[0]

    fg = _make_walk_fg(crossings, m, p_coord, q_coord)

    x0 = []
    bounds = []
    cons = []
    for _bi, _di, _bo, _do, off, npar, kind in crossings:
        if kind == "segment":
            x0.append(0.5)
            bounds.append((0.0, 1.0))
        elif kind == "face":
            x0.extend([1 / 3, 1 / 3])
            bounds.extend([(0.0, 1.0), (0.0, 1.0)])
            cons.append({"type": "ineq",
                         "fun": lambda x, o=off: 1.0 - x[o] - x[o + 1],
                         "jac": lambda x, o=off, m=m: _face_con_jac(m, o)})
    x0 = np.array(x0)
    if cons:
        res = optimize.minimize(fg, x0, jac=True, method="SLSQP", bounds=bounds,
                                constraints=cons,
                                options={"maxiter": 200, "ftol": 1e-14})
    else:
        res = optimize.minimize(fg, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": 300, "ftol": 1e-16,
                                         "gtol": 1e-13})
    x = res.x
    val = fg(x)[0]
    if not cons:
        # the objective is nonsmooth wherever a crossing point meets a shared
        # corner or a leg degenerates to a line; L-BFGS-B can stall on such a
        # seam, Powell's line searches slide along it.  During walk selection
        # only refine on the cheap stall signature (a coordinate pinned at a
        # bound with an inward-pointing gradient); the final polish always
        # refines at full precision.
        g = fg(x)[1]
        stalled = np.any((x <= 1e-12) & (g < -1e-9)) or \
            np.any((x >= 1.0 - 1e-12) & (g > 1e-9))
        if polish or stalled:
            opts = ({"xtol": 1e-10, "ftol": 1e-12, "maxiter": 200 * m}
                    if polish else
                    {"xtol": 1e-6, "ftol": 1e-9, "maxiter": 3})
            pw = optimize.minimize(lambda y: fg(y)[0], x,
                                   method="Powell", bounds=bounds,
                                   options=opts)
            if pw.fun < val:
                val = float(pw.fun)
                x = np.asarray(pw.x, dtype=float)
    if polish and not cons:
        # golden-section coordinate sweeps; each section is convex in one
        # parameter, so this tightens the L-BFGS result at kinks
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        for _sweep in range(3):
            for i in range(m):

                def f1(t, i=i):
                    y = x.copy()
                    y[i] = t
                    return fg(y)[0]

                a_, b_ = 0.0, 1.0
                c_ = b_ - gr * (b_ - a_)
                d_ = a_ + gr * (b_ - a_)
                fc, fd = f1(c_), f1(d_)
                for _k in range(50):
                    if fc < fd:
                        b_, d_, fd = d_, c_, fc
                        c_ = b_ - gr * (b_ - a_)
                        fc = f1(c_)
                    else:
                        a_, c_, fc = c_, d_, fd
                        d_ = a_ + gr * (b_ - a_)
                        fd = f1(d_)
                x[i] = 0.5 * (a_ + b_)
            # tied sweeps handle valleys where consecutive crossings share a
            # feature and the middle leg is proportional to the tie gap
            for group in itertools.combinations(range(m), 2):

                def ftie(t, group=group):
                    y = x.copy()
                    y[list(group)] = t
                    return fg(y)[0]

                a_, b_ = 0.0, 1.0
                c_ = b_ - gr * (b_ - a_)
                d_ = a_ + gr * (b_ - a_)
                fc, fd = ftie(c_), ftie(d_)
                for _k in range(50):
                    if fc < fd:
                        b_, d_, fd = d_, c_, fc
                        c_ = b_ - gr * (b_ - a_)
                        fc = ftie(c_)
                    else:
                        a_, c_, fc = c_, d_, fd
                        d_ = a_ + gr * (b_ - a_)
                        fd = ftie(d_)
                t_ = 0.5 * (a_ + b_)
                if ftie(t_) < fg(x)[0]:
                    x[list(group)] = t_
            val = min(val, fg(x)[0])
    return val


def _face_con_jac(m, o):
    j = np.zeros(m)
    j[o] = -1.0
    j[o + 1] = -1.0
    return j


def distance(C: ComplexSpace, p: str, q: str) -> float:
    """Intrinsic distance between two marked points: minimum over admissible
    gluing-crossing sequences of the convex per-sequence path length."""
    pid, p_coord = C.mark_coords(p)
    qid, q_coord = C.mark_coords(q)
    best = math.inf
    best_seq = None
    if pid == qid:
        # pieces are convex, so the straight segment stays inside
        best = float(np.linalg.norm(p_coord - q_coord))
    walks = _walks(C, pid, qid)
    scored = []
    for seq in walks:
        if not seq:
            continue
        scored.append((_walk_lower_bound(C, pid, seq, p_coord, q_coord), seq))
    scored.sort(key=lambda sb: (sb[0], len(sb[1])))
    for bound, seq in scored:
        if bound >= best - 1e-12:
            continue
        val = _minimize_walk(C, pid, seq, p_coord, q_coord)
        if val < best:
            best = val
            best_seq = seq
    if best_seq is not None:
        best = min(best, _minimize_walk(C, pid, best_seq, p_coord, q_coord,
                                        polish=True))
    # corner-routed paths: exact for geodesics through identified piece
    # vertices, which the smooth crossing optimization can miss at kinks
    best = min(best, distance_oracle(C, p, q, mesh_n=1))
    return best


def distance_matrix(C: ComplexSpace) -> dict:
    names = sorted(C.marked)
    out = {}
    for a, b in itertools.combinations(names, 2):
        out[(a, b)] = distance(C, a, b)
    return out


def distance_oracle(C: ComplexSpace, p: str, q: str, mesh_n: int = 64) -> float:
    """Upper bound via Dijkstra on a graph sampling all gluing features densely
    (pieces are convex, so within-piece legs are exact and interior mesh nodes
    are unnecessary)."""
    if mesh_n < 1:
        raise ValueError("mesh_n must be >= 1")
    eps = MERGE_EPS * C.scale
    uf = _UnionFind()
    nodes = []  # (piece, coord)

    def new_node(piece, coord):
        nodes.append((piece, np.asarray(coord, dtype=float)))
        i = len(nodes) - 1
        uf.find(i)
        return i

    mark_ids = {}
    for name, m in C.marked.items():
        pid, coord = C.mark_coords(name)
        mark_ids[name] = new_node(pid, coord)
    for piece in C.pieces.values():
        if not piece.unbounded:
            for gcoord in piece.generators:
                new_node(piece.id, gcoord)
    face_cap = 32
    for g in C.gluings:
        if g.kind == "point":
            params_list = [()]
        elif g.kind == "segment":
            params_list = [(i / mesh_n,) for i in range(mesh_n + 1)]
        else:
            mfc = min(mesh_n, face_cap)
            params_list = [(i / mfc, j / mfc) for i in range(mfc + 1)
                           for j in range(mfc + 1 - i)]
        for pars in params_list:
            ia = new_node(g.piece_a, g.point_at(pars, "a"))
            ib = new_node(g.piece_b, g.point_at(pars, "b"))
            uf.union(ia, ib)
    # merge coincident nodes within a piece
    by_piece = {}
    for i, (pid, coord) in enumerate(nodes):
        by_piece.setdefault(pid, []).append(i)
    for pid, idxs in by_piece.items():
        coords = np.array([nodes[i][1] for i in idxs])
        diff = coords[:, None, :] - coords[None, :, :]
        near = np.triu((diff * diff).sum(-1) <= eps * eps, k=1)
        for x, y in np.argwhere(near):
            uf.union(idxs[x], idxs[y])
    reps = {}
    rep_of = []
    for i in range(len(nodes)):
        r = uf.find(i)
        if r not in reps:
            reps[r] = len(reps)
        rep_of.append(reps[r])
    n = len(reps)
    all_r, all_c, all_w = [], [], []
    for pid, idxs in by_piece.items():
        coords = np.array([nodes[i][1] for i in idxs])
        rid = np.array([rep_of[i] for i in idxs])
        diff = coords[:, None, :] - coords[None, :, :]
        dmat = np.sqrt((diff * diff).sum(-1))
        iu, ju = np.triu_indices(len(idxs), k=1)
        all_r.append(rid[iu])
        all_c.append(rid[ju])
        all_w.append(dmat[iu, ju])
    r = np.concatenate(all_r)
    c = np.concatenate(all_c)
    w = np.concatenate(all_w)
    keep = r != c
    r, c, w = r[keep], c[keep], w[keep]
    lo, hi = np.minimum(r, c), np.maximum(r, c)
    # coo duplicates would sum, not min: group by (lo, hi) and take the min
    key = lo * n + hi
    order = np.argsort(key, kind="stable")
    key, lo, hi, w = key[order], lo[order], hi[order], w[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    wmin = np.minimum.reduceat(w, starts)
    graph = coo_matrix((wmin, (lo[starts], hi[starts])), shape=(n, n))
    src = rep_of[mark_ids[p]]
    dst = rep_of[mark_ids[q]]
    dist = _dijkstra(graph, directed=False, indices=[src])[0]
    return float(dist[dst])
