"""Command-line entry point: ``tubebound {torus,tube,verify,constants,compare-ae}``."""
from __future__ import annotations

import argparse
import contextlib
import os
import sys

from threadpoolctl import threadpool_limits

from . import cross_section as csm
from . import io
from . import torus
from . import verification as ver
from .curve import GeometryError
from .spectral import EigenSolverError
from .tube import export_field, threshold

THREADS_ENV = "TUBEBOUND_THREADS"

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2


def _cs_from_args(args, d=None):
    if getattr(args, "cs", None):
        return io.parse_cs_inline(args.cs)
    if getattr(args, "spec", None):
        doc = io.load_json(args.spec)
        return io.parse_problem(doc).cs
    if d is not None:
        return ver.circular_cross_section(d)
    raise io.SpecError("give a cross-section with --cs or --spec")


def _seed(args, default=0):
    return default if args.seed is None else args.seed


def cmd_torus(args) -> int:
    cs = _cs_from_args(args)
    seed = _seed(args)
    if args.sweep_range:
        lo, hi, n = io.parse_range(args.sweep_range)
        for k in (lo, hi):
            torus._check(k, cs)
        res = torus.sweep_lambda0(cs, torus.symmetric_grid(lo, hi, n), tol=args.tol, seed=seed)
        if args.out:
            io.write_sweep_csv(res, args.out)
            print(f"wrote {n} rows to {args.out}")
        else:
            print(",".join(io.SWEEP_COLUMNS))
            for row in res.rows():
                print(",".join([io.fmt(x) for x in row[:3]] + [row[3]]))
        return EXIT_OK
    if args.kappa is None:
        raise io.SpecError("give --kappa or --sweep-range")
    solve = torus.lambda0_potential if args.formulation == "potential" else torus.lambda0_weighted
    r = solve(args.kappa, cs, tol=args.tol, seed=seed)
    print(f"cross-section: {cs.label()}")
    print(f"kappa        = {args.kappa:.17g}")
    print(f"lambda0      = {r.value:.17g} +- {r.error:.3g}")
    print(f"mu0          = {csm.mu0(cs):.17g}")
    if args.out:
        io.write_json({"kappa": args.kappa, "cross_section": cs.to_dict(),
                       "formulation": args.formulation, **r.to_dict()}, args.out)
    return EXIT_OK


def cmd_tube(args) -> int:
    doc = io.load_json(args.spec)
    p = io.parse_problem(doc)
    if args.seed is not None:
        p = p.with_(seed=args.seed)
    r = threshold(p, keep_vectors=bool(args.field))
    for i, (v, e) in enumerate(zip(r.eigenvalues, r.error_estimate)):
        print(f"lambda[{i}] = {v:.17g} +- {e:.3g}")
    for w in r.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        io.write_json({"problem": io.problem_to_dict(p), "result": r.to_dict()}, args.out)
    if args.field:
        export_field(p, r, args.field)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite:
        if args.suite not in ver.SUITES:
            raise io.SpecError(f"unknown suite {args.suite!r}; known: {sorted(ver.SUITES)}")
        kw = {} if args.seed is None else {"seed": args.seed}
        reports = ver.run_suite(args.suite, **kw)
    elif args.spec:
        p = io.parse_problem(io.load_json(args.spec))
        if args.seed is not None:
            p = p.with_(seed=args.seed)
        reports = [ver.verify_theorem1(p)]
    else:
        raise io.SpecError("give --spec or --suite")
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        sharp = "" if r.sharp is None else f" sharp={r.sharp}"
        print(f"{status} {r.name or '<spec>':16s} lhs={r.lhs_raw:.10g} rhs={r.rhs:.10g} "
              f"+- {r.rhs_error:.2g} c={r.c:.6g}{sharp}")
    n_ok = sum(r.passed for r in reports)
    print(f"{n_ok}/{len(reports)} passed")
    if args.out:
        body = [r.to_dict() for r in reports]
        io.write_json(body[0] if args.spec else body, args.out)
    return EXIT_OK if n_ok == len(reports) else EXIT_NUMERIC


def cmd_constants(args) -> int:
    cs = _cs_from_args(args, d=args.d)
    if cs.dim != args.d - 1:
        raise io.SpecError(f"cross-section {cs.label()} does not fit d={args.d}")
    c = ver.faber_krahn_constant(args.d, cs.a, cs.area)
    m0 = csm.mu0(cs)
    print(f"cross-section: {cs.label()}  a={cs.a:.6g}  |omega|={cs.area:.6g}")
    print(f"c     = {c:.17g}")
    print(f"mu0   = {m0:.17g}")
    print(f"ratio = {c / m0:.4f}")
    return EXIT_OK


def cmd_compare_ae(args) -> int:
    cs = _cs_from_args(args, d=args.d)
    kr = None
    if args.kappa_range:
        lo, hi = (float(x) for x in args.kappa_range.split(":"))
        kr = (lo, hi)
    rows = ver.compare_bounds(args.d, args.N, cs, kr)
    print(f"d={args.d} N={args.N} cross-section {cs.label()}  (bound / mu0)")
    for name, ratio in rows:
        print(f"{name:16s} {ratio:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tubebound", description=__doc__)
    ap.add_argument("--deterministic", action="store_true",
                    help="single-threaded reference mode (bit-reproducible)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None,
                    help=f"BLAS thread cap (default ${THREADS_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("torus", help="torus reference eigenvalue lambda0(kappa)")
    t.add_argument("--kappa", type=float)
    t.add_argument("--cs", "--cs-inline", dest="cs")
    t.add_argument("--spec")
    t.add_argument("--sweep-range")
    t.add_argument("--formulation", choices=["weighted", "potential"], default="weighted")
    t.add_argument("--tol", type=float, default=1e-9)
    t.add_argument("--out")
    t.set_defaults(func=cmd_torus)

    u = sub.add_parser("tube", help="threshold of a tube from a JSON spec")
    u.add_argument("--spec", required=True)
    u.add_argument("--out")
    u.add_argument("--field", help="CSV file for the lowest eigenfunction")
    u.set_defaults(func=cmd_tube)

    v = sub.add_parser("verify", help="check the lower bound on a spec or a built-in suite")
    g = v.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec")
    g.add_argument("--suite")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("constants", help="uniform geometric constant c against mu0")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--cs", "--cs-inline", dest="cs")
    c.add_argument("--spec")
    c.set_defaults(func=cmd_constants)

    e = sub.add_parser("compare-ae", help="compare with the earlier circular-tube bound")
    e.add_argument("--d", type=int, required=True)
    e.add_argument("--N", type=int, default=1)
    e.add_argument("--cs", "--cs-inline", dest="cs")
    e.add_argument("--spec")
    e.add_argument("--kappa-range", help="inf:sup of kappa_1 for the torus-bound row")
    e.set_defaults(func=cmd_compare_ae)
    return ap


def _thread_limit(args):
    if args.deterministic:
        return 1
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else None


# flags whose values may start with '-' (negative ranges)
_RANGE_FLAGS = ("--sweep-range", "--kappa-range")


def _join_ranges(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_join_ranges(sys.argv[1:] if argv is None else argv))
    try:
        limit = _thread_limit(args)
    except ValueError:
        print(f"error: {THREADS_ENV} must be an integer", file=sys.stderr)
        return EXIT_INPUT
    ctx = threadpool_limits(limits=limit) if limit else contextlib.nullcontext()
    try:
        with ctx:
            return args.func(args)
    except EigenSolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.SpecError, GeometryError, csm.CrossSectionError,
            ver.UnsupportedCombination, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
