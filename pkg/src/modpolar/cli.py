"""Command-line front end.

Usage examples::

    modpolar polar op.json
    modpolar centered op.json --order 8 --format table
    modpolar verify --suite all --seed 42 --trials 100
    modpolar casebook --example e312 --dims 1,10,100 --eps 1e-2

Exit codes
----------
0  success (residuals within tolerance, operator centered, no violations)
1  residual failure, invariant violation, or an unexpected internal error
2  usage, parse or input error
3  operator is not centered
4  the centered conditions disagreed (equivalence violation)
5  operator is not square
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from . import invariants
from .centered import DEFAULT_ORDER, centered_report
from .document import DocumentError, dumps, op_to_document, read_operator
from .errors import EquivalenceViolation, NotSquare
from .generators_casebook import example312_diagnostic
from .polar import polar_decompose, verify_polar_identities

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NOT_CENTERED = 3
EXIT_VIOLATION = 4
EXIT_NOT_SQUARE = 5

DEFAULT_TOL = 1e-8
TOL_ENV = "MODPOLAR_TOL"


class UsageError(Exception):
    pass


def global_tolerance() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0 or tol == float("inf"):
        raise UsageError(f"{TOL_ENV} must be a positive finite number")
    return tol


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _table(rows: list[tuple[str, str]]) -> str:
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def _fmt(x: float) -> str:
    return f"{x:.3e}"


def _matrix_lines(name: str, op) -> list[tuple[str, str]]:
    rows = []
    for i, b in enumerate(op.blocks):
        for j, line in enumerate(b):
            cells = " ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in line)
            rows.append((f"{name}[{i}] row {j}", cells))
    return rows


def cmd_polar(args) -> int:
    tol = global_tolerance()
    t = read_operator(args.input)
    f = polar_decompose(t)
    rep = verify_polar_identities(t, f, tol)
    if args.format == "json":
        doc = {
            "factors": {
                "U": op_to_document(f.U),
                "absT": op_to_document(f.absT),
                "absTstar": op_to_document(f.absTstar),
                "P_rstar": op_to_document(f.P_rstar),
                "P_r": op_to_document(f.P_r),
            },
            "residuals": rep.residuals,
            "tolerance": tol,
            "ok": rep.ok,
        }
        _emit(dumps(doc))
    else:
        rows = [(k, f"{_fmt(v)}  {'ok' if v <= tol else 'FAIL'}") for k, v in rep.residuals.items()]
        rows.append(("tolerance", _fmt(tol)))
        rows += _matrix_lines("U", f.U)
        _emit(_table(rows))
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_centered(args) -> int:
    tol = global_tolerance()
    if args.order < 1:
        raise UsageError("--order must be >= 1")
    t = read_operator(args.input)
    try:
        rep = centered_report(t, args.order, tol, seed=args.seed)
        code = EXIT_OK if rep.centered else EXIT_NOT_CENTERED
    except EquivalenceViolation as exc:
        rep = exc.report
        code = EXIT_VIOLATION
    if args.format == "json":
        doc = rep.as_dict()
        doc["equivalence_violation"] = code == EXIT_VIOLATION
        _emit(dumps(doc))
    else:
        verdict = {EXIT_OK: "centered", EXIT_NOT_CENTERED: "not centered"}.get(code, "conditions disagree")
        rows = [("verdict", verdict), ("exactness", rep.exactness), ("order", str(rep.order_bound))]
        for tag, holds in rep.condition_results.items():
            rows.append((f"({tag})", f"{str(holds).ljust(5)}  {_fmt(rep.residuals[tag])}"))
        _emit(_table(rows))
    return code


def cmd_verify(args) -> int:
    tol = global_tolerance()
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    names = list(invariants.SUITES) if args.suite == "all" else [args.suite]
    summary = invariants.run_suites(names, args.seed, args.trials, tol)
    if args.format == "json":
        _emit(dumps(summary))
    else:
        rows = []
        for name, r in summary["invariants"].items():
            status = "ok" if r["violations"] == 0 else f"{r['violations']} violations"
            rows.append((name, f"max {_fmt(r['max_residual'])} / tol {_fmt(r['tolerance'])}  {status}"))
        rows.append(("total violations", str(summary["violations"])))
        _emit(_table(rows))
    return EXIT_OK if summary["violations"] == 0 else EXIT_FAIL


def _parse_dims(raw: str) -> list[int]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise UsageError("--dims needs at least one dimension")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"--dims must be comma-separated integers, got {raw!r}") from None
    if any(d < 1 for d in dims):
        raise UsageError("dimensions must be >= 1")
    return dims


def cmd_casebook(args) -> int:
    dims = _parse_dims(args.dims)
    if not args.eps > 0 or not args.eps < 1:
        raise UsageError("--eps must lie in (0, 1)")
    records = [example312_diagnostic(d, args.eps) for d in dims]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "min_singular", "n_required"])
    for r in records:
        w.writerow([r.d, repr(r.min_singular), r.n_required])
    sys.stdout.write(buf.getvalue())
    # smaller least singular value must never need fewer iterations
    ordered = sorted(records, key=lambda r: -r.min_singular)
    monotone = all(a.n_required <= b.n_required for a, b in zip(ordered, ordered[1:]))
    return EXIT_OK if monotone else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="modpolar", description="Polar decomposition and centered-operator checks over finite-dimensional C*-algebras.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(p):
        p.add_argument("--format", choices=("json", "table"), default="json", help="Output format (default json).")

    p = sub.add_parser("polar", help="Polar factors and identity residuals of an operator document.")
    p.add_argument("input", help="Operator document (JSON).")
    fmt(p)
    p.set_defaults(func=cmd_polar)

    p = sub.add_parser("centered", help="Run the centered-operator battery.")
    p.add_argument("input", help="Operator document (JSON).")
    p.add_argument("--order", type=int, default=DEFAULT_ORDER, help="Highest power n_max to test.")
    p.add_argument("--seed", type=int, default=0, help="Seed for the random restricted sequence.")
    fmt(p)
    p.set_defaults(func=cmd_centered)

    p = sub.add_parser("verify", help="Run the randomized invariant suites.")
    p.add_argument("--suite", choices=(*invariants.SUITES, "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    fmt(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("casebook", help="Truncation diagnostic as CSV.")
    p.add_argument("--example", choices=("e312",), default="e312")
    p.add_argument("--dims", default="1,10,100", help="Comma-separated dimensions.")
    p.add_argument("--eps", type=float, default=1e-2)
    p.set_defaults(func=cmd_casebook)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, DocumentError) as exc:
        print(f"modpolar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotSquare as exc:
        print(f"modpolar: {exc}", file=sys.stderr)
        return EXIT_NOT_SQUARE
    except Exception as exc:  # anything else is a defect, not a verdict
        print(f"modpolar: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
