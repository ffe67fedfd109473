"""Decision-and-certificate engine for CAT(0) embeddability of small metric
spaces, four-point trichotomy classification, and piecewise-Euclidean witness
construction for graph patterns on at most five vertices."""

__all__ = ["metric", "boxtimes", "quadgeo", "complexes", "witness", "qmi", "graphs"]
