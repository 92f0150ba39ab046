"""Command-line front end: ``lipmed {solve,certify,gen,compare,bench}``.

stdout carries only JSON or CSV; diagnostics go to stderr.

Exit codes: 0 success (certified, or all gaps within tolerance), 1 certificate
or comparison failure, 2 solver failure (non-convergence and friends),
3 invalid input or arguments.
"""

import argparse
import csv
import io
import json
import logging
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import certify as cert
from . import ensemble as em
from . import hermitian as hm
from . import newton, sdp, taylor
from . import stationarity as st
from .errors import InconsistentSolution, MEDError, NotOptimalBranch, NotPositive, ParseError, ValidationError

log = logging.getLogger("lipmed")

EXIT_OK, EXIT_FAIL, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2, 3
COMPARE_TOL = 1e-6
METHODS = ("newton", "taylor", "sdp")
# method-specific flags and the method that owns them
METHOD_FLAGS = {
    "tol": "newton",
    "max_iter": "newton",
    "taylor_order": "taylor",
    "subintervals": "taylor",
    "mu": "sdp",
    "eps": "sdp",
}


class UsageError(ValidationError):
    def __init__(self, message):
        super().__init__("arguments", message)


# --- solver dispatch ------------------------------------------------------

def _solver_options(method, args):
    """Options object for ``method`` from parsed flags (None means default)."""
    for name, owner in METHOD_FLAGS.items():
        if getattr(args, name, None) is not None and owner != method:
            flag = "--" + name.replace("_", "-")
            raise UsageError(f"{flag} only applies to --method {owner}")
    if method == "newton":
        kw = {k: v for k, v in (("tol", args.tol), ("max_iter", args.max_iter)) if v is not None}
        return newton.NewtonOptions(**kw)
    if method == "taylor":
        kw = {}
        if args.taylor_order is not None:
            kw["K"] = args.taylor_order
        if args.subintervals is not None:
            kw["L_override"] = args.subintervals
        return taylor.TaylorOptions(**kw)
    kw = {k: v for k, v in (("mu", args.mu), ("eps", args.eps)) if v is not None}
    return sdp.BarrierOptions(**kw)


def run_method(ens, method, opts=None):
    """Solve ``ens`` with ``method``; return ``(result, certificate, seconds)``.

    Timing covers the solve only, not file I/O or certification.
    """
    t0 = time.perf_counter()
    if method == "newton":
        res = newton.solve_newton(em.gram(ens), opts)
    elif method == "taylor":
        res = taylor.solve_taylor(em.gram(ens), opts)
    elif method == "sdp":
        res = sdp.solve_sdp(ens, opts)
    else:
        raise UsageError(f"unknown method {method!r}")
    elapsed = time.perf_counter() - t0
    if method == "sdp":
        c = cert.certify_dual(ens, res.Z)
    else:
        c = cert.certify_solution(ens, res)
    return res, c, elapsed


def _complex_rows(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def result_dict(method, res, c, elapsed):
    if method == "sdp":
        out = {
            "method": "sdp",
            "n": int(res.n),
            "Ps": float(res.success_probability),
            "Z": _complex_rows(res.Z),
            "outer_iterations": int(res.outer_iterations),
            "inner_iterations": len(res.trace),
        }
    else:
        out = res.to_dict()
        out["start"] = res.start
        out.update(res.info)
    out["wall_time_s"] = elapsed
    out["certificate"] = c.to_dict()
    return out


def trace_csv(method, res):
    return {"newton": newton.trace_csv, "taylor": taylor.trace_csv, "sdp": sdp.trace_csv}[method](res)


# --- output helpers -------------------------------------------------------

def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _json(obj):
    return json.dumps(obj, indent=1) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g(v):
    """CSV cell for a number that may be missing."""
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


# --- commands -------------------------------------------------------------

def cmd_solve(args):
    opts = _solver_options(args.method, args)
    ens = em.load(args.input)
    res, c, elapsed = run_method(ens, args.method, opts)
    if args.format == "csv":
        _emit(trace_csv(args.method, res), args.out)
    else:
        _emit(_json(result_dict(args.method, res, c, elapsed)), args.out)
    if not c.passed:
        print(f"certificate failed: {json.dumps(c.to_dict())}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return em._loads(fh.read(), str(path))


def _complex_matrix(rows, field, n):
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected a list of [re, im] rows", field=field) from None
    if a.shape != (n, n, 2):
        raise ValidationError("dimension", f"{field} has shape {a.shape[:-1]}, ensemble has n={n}")
    return a[..., 0] + 1j * a[..., 1]


def solution_from_dict(data, g):
    """Rebuild a Solution from the JSON written by ``solve`` (keys ``X``)."""
    if "X" not in data:
        raise ParseError("missing key", field="X")
    n = g.shape[0]
    xm = hm.hermitize(_complex_matrix(data["X"], "X", n))
    try:
        x = hm.pack(xm)
    except NotPositive as exc:
        raise ValidationError("solution", f"X has a negative diagonal entry ({exc})") from None
    return st.extract_solution(g, x, residual_tol=math.inf, method=data.get("method", ""))


def cmd_certify(args):
    ens = em.load(args.input)
    data = _read_json(args.solution or args.povm)
    if args.povm:
        if "vectors" not in data:
            raise ParseError("missing key", field="vectors")
        vecs = _complex_matrix(data["vectors"], "vectors", ens.n)
        c = cert.certify(ens, em.Povm(vecs))
    elif "Z" in data and "X" not in data:
        c = cert.certify_dual(ens, _complex_matrix(data["Z"], "Z", ens.n))
    else:
        try:
            c = cert.certify_solution(ens, solution_from_dict(data, em.gram(ens)))
        except (InconsistentSolution, NotOptimalBranch) as exc:
            print(f"certificate failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
    _emit(_json(c.to_dict()), args.out)
    return EXIT_OK if c.passed else EXIT_FAIL


def cmd_gen(args):
    ens = em.random_ensemble(args.n, seed=args.seed, min_gram_eig=args.min_gram_eig, mix=args.mix)
    _emit(_json(em.to_dict(ens)), args.out)
    return EXIT_OK


def _compare_one(path):
    """One CSV row for ``compare``; solver errors leave blanks."""
    ens = em.load(path)
    ps, extra, times = {}, {}, {}
    for m in METHODS:
        try:
            res, _, elapsed = run_method(ens, m)
        except MEDError as exc:
            log.warning("%s: %s failed: %s", path, m, exc)
            ps[m] = None
            continue
        ps[m] = res.success_probability
        times[m] = elapsed
        extra[m] = res.outer_iterations if m == "sdp" else res.iterations
    vals = [v for v in ps.values() if v is not None]
    gap = max(vals) - min(vals) if len(vals) == len(METHODS) else None
    row = [str(path), ens.n, ps["newton"], ps["taylor"], ps["sdp"], gap,
           extra.get("newton"), extra.get("taylor"), extra.get("sdp"),
           times.get("newton"), times.get("taylor"), times.get("sdp")]
    return row, gap is not None and gap <= COMPARE_TOL


COMPARE_HEADER = ["file", "n", "Ps_newton", "Ps_taylor", "Ps_sdp", "max_gap", "iters_newton",
                  "nodes_taylor", "outer_sdp", "time_newton", "time_taylor", "time_sdp"]


def _pool_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_compare(args):
    for path in args.inputs:
        em.load(path)  # fail fast with exit 3 on bad input
    results = _pool_map(_compare_one, list(args.inputs), args.jobs)
    rows = [[_g(v) for v in row] for row, _ in results]
    _emit(_csv(COMPARE_HEADER, rows), args.out)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL


def _bench_one(task):
    method, n, seed = task
    ens = em.random_ensemble(n, seed=seed)
    try:
        _, _, elapsed = run_method(ens, method)
        status = "ok"
    except MEDError as exc:
        elapsed, status = math.nan, type(exc).__name__
    return method, n, seed, elapsed, status


def loglog_slope(ns, times):
    """Least-squares slope of ``log t`` against ``log n``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def bench_summary(runs):
    """Per-method medians by n and the log-log slope of those medians."""
    summary = {}
    for method in dict.fromkeys(r[0] for r in runs):
        med = {}
        for n in sorted({r[1] for r in runs if r[0] == method}):
            ts = [r[3] for r in runs if r[0] == method and r[1] == n and r[4] == "ok"]
            if ts:
                med[n] = statistics.median(ts)
        slope = loglog_slope(list(med), list(med.values())) if len(med) >= 2 else None
        summary[method] = {"median_time_s": med, "slope": slope}
    return summary


def cmd_bench(args):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r} in --methods")
    ns = list(range(args.n_min, args.n_max + 1, args.n_step))
    if not ns or args.n_min < 2:
        raise UsageError("empty or invalid n range")
    tasks = [(m, n, args.seed + k) for m in methods for n in ns for k in range(args.instances)]
    runs = _pool_map(_bench_one, tasks, args.jobs)
    summary = bench_summary(runs)
    if args.format == "json":
        out = {
            "runs": [dict(zip(("method", "n", "seed", "time_s", "status"), r)) for r in runs],
            "summary": {m: {"median_time_s": {str(k): v for k, v in s["median_time_s"].items()},
                            "slope": s["slope"]} for m, s in summary.items()},
        }
        _emit(_json(out), args.out)
    else:
        rows = [["run", m, n, seed, _g(t), status] for m, n, seed, t, status in runs]
        for m, s in summary.items():
            rows += [["median", m, n, "", repr(t), ""] for n, t in s["median_time_s"].items()]
            rows.append(["slope", m, "", "", _g(s["slope"]), ""])
        _emit(_csv(["record", "method", "n", "seed", "value", "status"], rows), args.out)
    return EXIT_OK


# --- argument parsing -----------------------------------------------------

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="lipmed", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="log to stderr (-vv for debug)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one ensemble file")
    s.add_argument("input")
    s.add_argument("--method", choices=METHODS, default="newton")
    s.add_argument("--tol", type=_positive_float, help="Newton stopping tolerance on ||gamma||_2")
    s.add_argument("--max-iter", type=_positive_int, help="Newton iteration limit")
    s.add_argument("--taylor-order", type=_positive_int, metavar="K", help="Taylor order")
    s.add_argument("--subintervals", type=_positive_int, metavar="L", help="fixed subinterval count")
    s.add_argument("--mu", type=float, help="barrier weight growth factor (> 1)")
    s.add_argument("--eps", type=_positive_float, help="barrier stop when w >= n / eps")
    s.add_argument("--format", choices=("json", "csv"), default="json",
                   help="json result, or csv iteration trace")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="certify a solution or measurement for an ensemble")
    c.add_argument("input")
    grp = c.add_mutually_exclusive_group(required=True)
    grp.add_argument("--solution", help="JSON written by 'solve'")
    grp.add_argument("--povm", help='JSON {"vectors": [[[re, im], ...], ...]}')
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    g = sub.add_parser("gen", help="write a seeded random ensemble")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--min-gram-eig", type=_positive_float, default=1e-6)
    g.add_argument("--mix", type=float, default=1.0, help="strength of the random mixing of the basis")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("compare", help="run all solvers on each file; CSV")
    m.add_argument("inputs", nargs="+")
    m.add_argument("--jobs", type=_positive_int, default=1)
    m.add_argument("--out")
    m.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="time solvers on seeded random instances")
    b.add_argument("--methods", default="newton", help="comma-separated subset of newton,taylor,sdp")
    b.add_argument("--n-min", type=int, default=4)
    b.add_argument("--n-max", type=int, default=16)
    b.add_argument("--n-step", type=_positive_int, default=4)
    b.add_argument("--instances", type=_positive_int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--jobs", type=_positive_int, default=1)
    b.add_argument("--format", choices=("json", "csv"), default="csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for solver failure here
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(
        stream=sys.stderr,
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MEDError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
