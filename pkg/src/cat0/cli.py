"""Command-line front end: reproducible batch runs with JSON input and output.

Exit codes: 0 pass/embeddable, 1 violated/not embeddable, 2 input error,
3 search failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import boxtimes, complexes, graphs, metric, qmi, quadgeo, witness
from .errors import BoxtimesViolated, Cat0Error, SearchFailed
from .metric import DEFAULT_TOL

EXIT_PASS = 0
EXIT_VIOLATED = 1
EXIT_INPUT = 2
EXIT_SEARCH = 3


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_space(path, tol):
    obj = _load_json(path)
    return metric.from_matrix(obj["labels"], obj["d"], tol)


def _parse_graph(text, n=None):
    if text in graphs.CATALOGUE:
        return graphs.by_name(text)
    pairs = []
    for part in text.split(","):
        a, b = part.split("-")
        pairs.append((int(a), int(b)))
    if n is None:
        n = max((v for p in pairs for v in p), default=-1) + 1
    return graphs.graph(n, pairs)


def _cmd_validate(args):
    X = _load_space(args.file, args.tol)
    _emit({"ok": True, "n": X.n, "scale": X.scale})
    return EXIT_PASS


def _cmd_decide(args):
    X = _load_space(args.file, args.tol)
    dec = boxtimes.decide_cat0_embeddable(X, args.tol)
    out = {"verdict": "Embeddable" if dec.holds else "NotEmbeddable"}
    if dec.certificate is not None:
        out["certificate"] = dec.certificate.to_json_dict()
    _emit(out)
    return EXIT_PASS if dec.holds else EXIT_VIOLATED


def _cmd_check_boxtimes(args):
    X = _load_space(args.file, args.tol)
    dec = boxtimes.space_satisfies(X, args.tol)
    out = {"verdict": dec.verdict}
    if dec.certificate is not None:
        out["certificate"] = dec.certificate.to_json_dict()
    _emit(out)
    return EXIT_PASS if dec.holds else EXIT_VIOLATED


def _cmd_classify_quad(args):
    X = _load_space(args.file, args.tol)
    roles = [int(s) for s in args.roles.split(",")]
    pivot = [int(s) for s in args.pivot.split(",")]
    cl = quadgeo.classify_space(X, roles, pivot, args.tol)
    _emit(cl.to_json_dict())
    return EXIT_PASS


def _cmd_witness(args):
    X = _load_space(args.file, args.tol)
    G = _parse_graph(args.graph, args.n)
    f = tuple(int(s) for s in args.map.split(",")) if args.map else None
    try:
        W = witness.construct(X, f=f, G=G, tol=args.tol, seed=args.seed,
                              multistarts=args.multistarts)
    except SearchFailed as exc:
        _emit({"error": "SearchFailed", "best_penalty": exc.best_penalty})
        return EXIT_SEARCH
    except BoxtimesViolated as exc:
        _emit({"error": "BoxtimesViolated",
               "certificate": exc.certificate.to_json_dict()})
        return EXIT_VIOLATED
    fv = tuple(range(G.n)) if f is None else f
    rep = witness.verify(X, fv, G, W, max(args.tol, 1e-8))
    out = W.to_json_dict()
    out["report"] = rep.to_json_dict()
    _emit(out)
    return EXIT_PASS if rep.ok else EXIT_VIOLATED


def _cmd_complex_dist(args):
    C = complexes.complex_from_json_dict(_load_json(args.file))
    _emit({"marks": sorted(C.marked),
           "d": {f"{a},{b}": v for (a, b), v in
                 sorted(complexes.distance_matrix(C).items())}})
    return EXIT_PASS


def _cmd_qmi_eval(args):
    Q = qmi.qmi_from_json_dict(_load_json(args.q))
    X = _load_space(args.file, args.tol)
    value, argmin = qmi.min_over_tuples(Q, X)
    _emit({"min": value, "argmin": list(argmin)})
    band = args.tol * max(X.scale, 1e-300) ** 2
    return EXIT_PASS if value >= -band else EXIT_VIOLATED


def _cmd_gen(args):
    X = metric.generate(args.kind, args.n, args.seed, dim=args.dim,
                        eps=args.eps)
    _emit(X.to_json_dict())
    return EXIT_PASS


def _cmd_selftest(args):
    checks = []

    def check(name, ok, detail=""):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    r3 = math.sqrt(3.0)
    X = metric.from_matrix(
        ["x1", "x2", "x3", "x4"],
        [[0, 1, r3, r3], [1, 0, 1, r3], [r3, 1, 0, 1], [r3, r3, 1, 0]])
    dec = boxtimes.decide_cat0_embeddable(X)
    check("example-not-embeddable", not dec.holds)
    check("example-certificate-value",
          abs(dec.certificate.value - (-0.125)) < 1e-9,
          f"value={dec.certificate.value}")
    q = boxtimes.QuadrupleView.from_space(X, 1, 2, 3, 0)
    s0 = (r3 - 1.0) / 2.0
    val = boxtimes.boxtimes_form(q, s0, s0)
    check("parameter-point", abs(val - (12 - 7 * r3)) < 1e-12, f"value={val}")
    vmin, arg = qmi.min_over_tuples(qmi.quadrilateral(), X)
    check("quadrilateral-min", abs(vmin) < 1e-9, f"min={vmin}")
    ok = True
    for seed in range(20):
        for kind in ("euclidean", "tree", "complex_sample"):
            ok = ok and boxtimes.space_satisfies(
                metric.generate(kind, 5, seed)).holds
    check("soundness-sample", ok)
    D = complexes.build_surface("double", (1.0, 1.0, 1.0))
    D = complexes.add_mark(D, "c0", 0, [1 / 3, 1 / 3, 1 / 3])
    D = complexes.add_mark(D, "c1", 1, [1 / 3, 1 / 3, 1 / 3])
    dc = complexes.distance(D, "c0", "c1")
    check("double-centroids", abs(dc - r3 / 3) < 1e-6, f"d={dc}")
    wit_ok = True
    for name in ("C5", "G5_7", "G5_9"):
        Xw = metric.generate("euclidean", 5, seed=3)
        G = graphs.by_name(name)
        try:
            W = witness.construct(Xw, G=G, seed=args.seed)
            wit_ok = wit_ok and witness.verify(
                Xw, tuple(range(5)), G, W, 1e-7).ok
        except Cat0Error:
            wit_ok = False
    check("witness-sample", wit_ok)
    passed = all(c["ok"] for c in checks)
    _emit({"checks": checks, "verdict": "pass" if passed else "fail"})
    return EXIT_PASS if passed else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cat0",
        description="Decide CAT(0) embeddability of small metric spaces, "
                    "classify quadruples, and build verified witness models.")
    ap.add_argument("--tol", type=float, default=DEFAULT_TOL)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mesh-n", type=int, default=64, dest="mesh_n")
    ap.add_argument("--multistarts", type=int, default=64)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--mesh-n", type=int, default=argparse.SUPPRESS,
                        dest="mesh_n")
    common.add_argument("--multistarts", type=int, default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True,
                            parser_class=lambda **kw: argparse.ArgumentParser(
                                parents=[common], **kw))

    p = sub.add_parser("validate", help="validate a metric-space JSON file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("decide", help="decide CAT(0) embeddability")
    p.add_argument("file")
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("check-boxtimes", help="check all boxtimes inequalities")
    p.add_argument("file")
    p.set_defaults(func=_cmd_check_boxtimes)

    p = sub.add_parser("classify-quad", help="classify a quadruple")
    p.add_argument("file")
    p.add_argument("--roles", required=True, help="i,j,k,l")
    p.add_argument("--pivot", required=True, help="a,b")
    p.set_defaults(func=_cmd_classify_quad)

    p = sub.add_parser("witness", help="construct and verify a witness model")
    p.add_argument("file")
    p.add_argument("--graph", required=True,
                   help="catalogue name (G4_1..G5_11, K5, C4, C5, P5) or "
                        "edge list like 0-1,1-2")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--map", default=None, help="vertex-to-point map u0,u1,...")
    p.set_defaults(func=_cmd_witness)

    p = sub.add_parser("complex-dist", help="marked-point distance matrix")
    p.add_argument("file")
    p.set_defaults(func=_cmd_complex_dist)

    p = sub.add_parser("qmi-eval", help="minimize a quadratic metric inequality")
    p.add_argument("q")
    p.add_argument("file")
    p.set_defaults(func=_cmd_qmi_eval)

    p = sub.add_parser("gen", help="generate a metric space")
    p.add_argument("--kind", required=True,
                   choices=["euclidean", "tree", "perturbed", "complex_sample"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.1)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("selftest", help="run the built-in acceptance checks")
    p.set_defaults(func=_cmd_selftest)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    if args.tol <= 0 or args.mesh_n < 1:
        sys.stderr.write("tol must be positive and mesh-n at least 1\n")
        return EXIT_INPUT
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except SearchFailed as exc:
        sys.stderr.write(f"search failed: best penalty {exc.best_penalty}\n")
        return EXIT_SEARCH
    except Cat0Error as exc:
        sys.stderr.write(f"input error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
