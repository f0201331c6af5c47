"""Command-line front end.

Exit codes: 0 pass, 1 numeric failure, 2 usage error, 3 domain error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import crtransform as crt
from . import subelliptic_grid as grd
from .fields import Field, FieldDomainError, ParseError, parse_field, print_expr
from .core_group import Point, SingularPointError, UnitaryRotation
from .jets import JetDomainError, sublaplacian
from .schouten import SchoutenMatrix, schouten_from_horizontal, trace_identity_rhs, trace_identity_scale
from .numerics import rel_err
from .suites import SUITES, UnknownSuiteError, run_suites

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def parse_point(text: str, n: int) -> Point:
    """``"x;y;t"`` where ``x`` and ``y`` are comma-separated n-vectors."""
    parts = text.split(";")
    if len(parts) != 3:
        raise UsageError(f"point must look like 'x;y;t', got {text!r}")
    try:
        x = [float(v) for v in parts[0].split(",")]
        y = [float(v) for v in parts[1].split(",")]
        t = float(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad number in point {text!r}: {exc}") from None
    if len(x) != n or len(y) != n:
        raise UsageError(f"point {text!r} needs {n} x- and {n} y-coordinates")
    if not all(math.isfinite(v) for v in x + y + [t]):
        raise UsageError(f"point {text!r} has non-finite coordinates")
    return Point(x, y, t)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    try:
        report = run_suites(args.suite, args.dim, args.seed, args.tol_scale)
    except UnknownSuiteError as exc:
        raise UsageError(str(exc)) from None
    _emit(report.to_json(), args.out)
    for r in report.records:
        if not r.passed:
            print(f"FAIL {r.check_id}: residual {r.max_residual:.3e} > {r.tolerance:.1e}",
                  file=sys.stderr)
    return EXIT_OK if report.verdict else EXIT_FAIL


# -- tensor ------------------------------------------------------------------

def cmd_tensor(args) -> int:
    n = args.dim
    try:
        expr = parse_field(args.field, n)
    except ParseError as exc:
        raise UsageError(f"cannot parse field: {exc}") from None
    p = parse_point(args.point, n)
    u = Field.from_expr(expr, n)
    try:
        h = u.horizontal(p)
    except (FieldDomainError, JetDomainError) as exc:
        raise DomainError(str(exc)) from None
    if not h.val > 0:
        raise DomainError(f"field value {h.val!r} at the point is not positive")
    Q = p.Q
    S = SchoutenMatrix.from_matrix(schouten_from_horizontal(h, Q))
    trace_res = rel_err(np.trace(S.A), trace_identity_rhs(h, Q), trace_identity_scale(h, Q))
    out = {"field": print_expr(expr), "n": n, "point": p.as_array().tolist(),
           "value": h.val, "sublaplacian": sublaplacian(h),
           "A": S.A.tolist(), "spectrum": S.spectrum.tolist(),
           "sigma": [S.sigma(k) for k in range(1, 2 * n + 1)],
           "trace_identity_residual": trace_res}
    _emit(_dump(out), args.out)
    return EXIT_OK


# -- solve -------------------------------------------------------------------

def cmd_solve(args) -> int:
    if args.grid < 3 or args.grid % 2 == 0:
        raise UsageError(f"--grid must be odd and >= 3, got {args.grid}")
    if not (args.eps >= 0 and math.isfinite(args.eps)):
        raise UsageError(f"--eps must be >= 0, got {args.eps}")
    spec = grd.GridSpec(args.grid)
    mask = grd.barrier_mask(spec)
    try:
        g = grd.dirichlet_solve(mask, args.eps, grd.C0)
    except grd.SolverError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        sidecar = {"converged": False, "residual": exc.residual}
        _write_solve(args.out, None, sidecar)
        return EXIT_FAIL
    rep = grd.solve_report(g, args.eps, grd.C0)
    sidecar = {"converged": True, "residual": rep.residual, "origin_value": rep.origin_value,
               "interior_min": rep.interior_min, "interior_max": rep.interior_max,
               "flagged": rep.flagged, "interior_nodes": rep.interior_count,
               "pole_residual": rep.pole_residual, "grid": list(spec.shape),
               "hz": spec.hz, "ht": spec.ht, "eps": args.eps, "c0": grd.C0}
    _write_solve(args.out, grd.to_csv(g), sidecar)
    return EXIT_OK


def _write_solve(out: str | None, csv_text: str | None, sidecar: dict) -> None:
    if out is None:
        sys.stdout.write(_dump(sidecar))
        return
    path = Path(out)
    if csv_text is not None:
        path.write_text(csv_text)
    path.with_suffix(".json").write_text(_dump(sidecar))


# -- map ---------------------------------------------------------------------

def parse_word(text: str, n: int) -> crt.CRMap:
    """Comma-free word syntax, generators separated by ``/``:
    ``translate(x;y;t)``, ``dilate(lam)``, ``rotate(a1,..,an)`` (diagonal phases),
    ``iota``, ``check``."""
    gens = []
    for tok in filter(None, (s.strip() for s in text.split("/"))):
        name, _, rest = tok.partition("(")
        arg = rest[:-1] if rest.endswith(")") else rest
        name = name.strip().lower()
        try:
            if name == "translate":
                gens.append(crt.Translate(parse_point(arg, n)))
            elif name == "dilate":
                gens.append(crt.Dilate(float(arg)))
            elif name == "rotate":
                phases = [float(v) for v in arg.split(",")]
                if len(phases) != n:
                    raise UsageError(f"rotate needs {n} phases, got {len(phases)}")
                gens.append(crt.Rotate(UnitaryRotation.from_complex(np.diag(np.exp(1j * np.array(phases))))))
            elif name == "iota" and not arg:
                gens.append(crt.Iota())
            elif name == "check" and not arg:
                gens.append(crt.CheckInvert())
            else:
                raise UsageError(f"unknown generator {tok!r}")
        except ValueError as exc:
            raise UsageError(f"bad generator {tok!r}: {exc}") from None
    if not gens:
        raise UsageError("empty CR word")
    return crt.CRMap(gens)


def cmd_map(args) -> int:
    n = args.dim
    word = parse_word(args.word, n)
    p = parse_point(args.point, n)
    try:
        img = word.apply(p)
        det = word.jacobian_det(p)
    except SingularPointError as exc:
        raise DomainError(str(exc)) from None
    _emit(_dump({"point": p.as_array().tolist(), "image": img.as_array().tolist(),
                 "jacobian_det": det}), args.out)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heisenberg-cr",
                                 description="Heisenberg-group CR calculus checks and tools.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites and write a JSON report")
    v.add_argument("--dim", type=_positive_int, default=1)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}, all")
    v.add_argument("--out")
    v.add_argument("--tol-scale", type=_positive_float, default=1.0,
                   help="multiply every tolerance (marks the report non-canonical)")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tensor", help="evaluate the conformal tensor of a field at a point")
    t.add_argument("--dim", type=_positive_int, default=1)
    t.add_argument("--field", required=True)
    t.add_argument("--point", required=True, help="'x;y;t', vectors comma-separated")
    t.add_argument("--out")
    t.set_defaults(func=cmd_tensor)

    s = sub.add_parser("solve", help="solve the two-sphere barrier problem on an n=1 grid")
    s.add_argument("--grid", type=int, required=True, help="odd node count per horizontal axis")
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--out", help="CSV path; the JSON summary goes next to it")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("map", help="apply a CR word to a point")
    m.add_argument("--dim", type=_positive_int, default=1)
    m.add_argument("--word", required=True,
                   help="generators joined by '/', e.g. 'translate(1;0;0)/dilate(2)/check'")
    m.add_argument("--point", required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_map)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
