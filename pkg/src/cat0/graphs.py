"""Simple graphs on small vertex sets: the named catalogue of all four- and
five-vertex shapes used by the witness builder, plus brute-force isomorphism."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BadIndex


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: frozenset  # of frozenset pairs

    def __post_init__(self):
        es = frozenset(frozenset(e) for e in self.edges)
        for e in es:
            if len(e) != 2 or not all(isinstance(v, int) and 0 <= v < self.n for v in e):
                raise BadIndex(f"bad edge {set(e)} for n={self.n}")
        object.__setattr__(self, "edges", es)

    def has_edge(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self.edges

    def neighbors(self, v: int) -> set:
        return {next(iter(e - {v})) for e in self.edges if v in e}

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def non_edges(self) -> list:
        return [frozenset((i, j)) for i, j in itertools.combinations(range(self.n), 2)
                if not self.has_edge(i, j)]

    def complement(self) -> "SimpleGraph":
        return SimpleGraph(self.n, frozenset(self.non_edges()))

    def induced(self, vertices) -> "SimpleGraph":
        vertices = list(vertices)
        idx = {v: i for i, v in enumerate(vertices)}
        es = [frozenset((idx[a], idx[b])) for a, b in
              (tuple(e) for e in self.edges) if a in idx and b in idx]
        return SimpleGraph(len(vertices), frozenset(es))

    def relabel(self, perm) -> "SimpleGraph":
        """perm[v] = new label of v."""
        return SimpleGraph(self.n, frozenset(
            frozenset((perm[a], perm[b])) for a, b in (tuple(e) for e in self.edges)))

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in self.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.n

    def components(self) -> list:
        seen = set()
        out = []
        for s in range(self.n):
            if s in seen:
                continue
            comp = {s}
            stack = [s]
            while stack:
                v = stack.pop()
                for u in self.neighbors(v):
                    if u not in comp:
                        comp.add(u)
                        stack.append(u)
            seen |= comp
            out.append(sorted(comp))
        return out

    def articulation_vertices(self) -> list:
        if not self.is_connected():
            return []
        out = []
        for v in range(self.n):
            rest = [u for u in range(self.n) if u != v]
            if len(rest) > 1 and not self.induced(rest).is_connected():
                out.append(v)
        return out

    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": sorted(sorted(e) for e in self.edges)}


def graph(n: int, pairs) -> SimpleGraph:
    return SimpleGraph(n, frozenset(frozenset(p) for p in pairs))


def find_isomorphism(A: SimpleGraph, B: SimpleGraph):
    """Permutation p with A.relabel(p) == B, or None. Brute force (n <= 5)."""
    if A.n != B.n or len(A.edges) != len(B.edges):
        return None
    degs_a = sorted(A.degree(v) for v in range(A.n))
    degs_b = sorted(B.degree(v) for v in range(B.n))
    if degs_a != degs_b:
        return None
    for perm in itertools.permutations(range(A.n)):
        if A.relabel(perm) == B:
            return perm
    return None


def is_semicomplete(G: SimpleGraph):
    """A vertex whose removal leaves a complete graph, or None."""
    for v0 in range(G.n):
        rest = [u for u in range(G.n) if u != v0]
        if all(G.has_edge(a, b) for a, b in itertools.combinations(rest, 2)):
            return v0
    return None


# Named catalogue. Vertex layout of the four-vertex family:
#   0 bottom-left, 1 bottom-right, 2 top-right, 3 top-left.
CATALOGUE = {
    "G4_1": graph(4, []),
    "G4_2": graph(4, [(0, 1)]),
    "G4_3": graph(4, [(0, 1), (1, 2)]),
    "G4_4": graph(4, [(0, 1), (2, 3)]),
    "G4_5": graph(4, [(0, 1), (0, 2), (0, 3)]),
    "G4_6": graph(4, [(0, 1), (0, 2), (2, 3)]),
    "G4_7": graph(4, [(1, 2), (2, 3), (1, 3)]),
    "G4_8": graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    "G4_9": graph(4, [(1, 2), (2, 3), (1, 3), (0, 1)]),
    "G4_10": graph(4, [(1, 2), (2, 3), (1, 3), (0, 1), (0, 3)]),
    "G4_11": graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
}
# Five-vertex family (minimum degree 2): 0 bottom-left, 1 bottom-right,
# 2 middle-left, 3 middle-right, 4 top.
CATALOGUE.update({
    "G5_1": graph(5, [(0, 1), (0, 2), (1, 3), (3, 4), (2, 4)]),
    "G5_2": graph(5, [(0, 1), (0, 3), (1, 3), (3, 4), (2, 3), (2, 4)]),
    "G5_3": graph(5, [(0, 1), (0, 2), (1, 3), (3, 4), (2, 3), (2, 4)]),
    "G5_4": graph(5, [(0, 3), (0, 2), (1, 2), (1, 3), (3, 4), (2, 4)]),
    "G5_5": graph(5, [(0, 1), (0, 2), (0, 3), (1, 3), (3, 4), (2, 3), (2, 4)]),
    "G5_6": graph(5, [(0, 3), (0, 2), (1, 2), (1, 3), (3, 4), (2, 3), (2, 4)]),
    "G5_7": graph(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (3, 4), (2, 4)]),
    "G5_8": graph(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (2, 4)]),
    "G5_9": graph(5, [(0, 1), (0, 2), (0, 4), (1, 4), (1, 3), (3, 4), (2, 3), (2, 4)]),
    "G5_10": graph(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (1, 4), (2, 3),
                       (2, 4), (3, 4)]),
    "G5_11": graph(5, list(itertools.combinations(range(5), 2))),
})
CATALOGUE.update({
    "K5": CATALOGUE["G5_11"],
    "C4": CATALOGUE["G4_8"],
    "C5": CATALOGUE["G5_1"],
    "P5": graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)]),
})


def by_name(name: str) -> SimpleGraph:
    try:
        return CATALOGUE[name]
    except KeyError:
        raise BadIndex(f"unknown graph name {name!r}") from None


def all_iso_classes(n: int) -> list:
    """Representatives of all isomorphism classes of graphs on n vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    reps = []
    for bits in range(1 << len(pairs)):
        G = graph(n, [p for i, p in enumerate(pairs) if bits >> i & 1])
        if not any(find_isomorphism(G, H) for H in reps):
            reps.append(G)
    return reps
