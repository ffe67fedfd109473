"""Exception types shared across the package."""


class Cat0Error(Exception):
    """Base class for all package errors."""


class AsymmetricMatrix(Cat0Error):
    pass


class NegativeDistance(Cat0Error):
    pass


class NonzeroDiagonal(Cat0Error):
    pass


class TriangleViolation(Cat0Error):
    def __init__(self, i, j, k, deficit):
        self.i, self.j, self.k, self.deficit = i, j, k, deficit
        super().__init__(f"triangle inequality violated at ({i},{j},{k}), deficit {deficit:.3e}")


class DuplicateLabel(Cat0Error):
    pass


class DegenerateVertex(Cat0Error):
    pass


class EmptySubset(Cat0Error):
    pass


class BadIndex(Cat0Error):
    pass


class BadExponent(Cat0Error):
    pass


class BadParams(Cat0Error):
    pass


class ParamOutOfRange(Cat0Error):
    pass


class TooManyPoints(Cat0Error):
    def __init__(self, n):
        self.n = n
        super().__init__(f"decision rule applies to at most 5 points, got {n}")


class PivotDegenerate(Cat0Error):
    pass


class NotEmbeddableError(Cat0Error):
    pass


class LengthMismatch(Cat0Error):
    pass


class DisconnectedComplex(Cat0Error):
    pass


class BadBarycentric(Cat0Error):
    pass


class DegenerateInput(Cat0Error):
    pass


class NegativeLength(Cat0Error):
    pass


class NotInteriorVertex(Cat0Error):
    pass


class UnreachableMark(Cat0Error):
    pass


class NoSuchVertex(Cat0Error):
    pass


class NotATree(Cat0Error):
    pass


class BadSplit(Cat0Error):
    pass


class SearchFailed(Cat0Error):
    def __init__(self, best_penalty):
        self.best_penalty = best_penalty
        super().__init__(f"witness search failed, best penalty {best_penalty:.3e}")


class BoxtimesViolated(Cat0Error):
    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__(f"space violates the box inequalities: {certificate}")


class CaseDispatchAmbiguous(Cat0Error):
    pass


class WitnessConstructionError(Cat0Error):
    pass


class ArityMismatch(Cat0Error):
    pass


class PatternViolated(Cat0Error):
    pass
