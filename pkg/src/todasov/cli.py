"""Command-line interface: ``toda-sov {eval,verify,scan,bench}``.

stdout carries JSON/CSV only; diagnostics go to stderr.  Exit codes: 0 ok,
1 failed identity checks, 2 bad arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from .errors import BudgetExceeded, NonConvergence, PreconditionViolated, TodaSovError
from .kernels import ChainParams
from .quadrature import ContourPlan
from .whittaker import MAX_N, Positions, Rapidities, phi_gg, phi_gg_recursive, phi_mb

METHODS = {"mb": phi_mb, "gg": phi_gg, "gg_recursive": phi_gg_recursive}
VALUE_FLAGS = {"--range", "--y", "--x"}
CSV_HEADER = ["n", "hbar", "method", "axis", "value", "value_re", "value_im", "abs_err_est"]


class UsageError(Exception):
    pass


def default_tol(n: int) -> float:
    return 1e-8 if n <= 2 else 1e-5


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _point(args):
    n = args.n
    if n < 1:
        raise UsageError("N must be at least 1")
    if n > MAX_N:
        raise UsageError(f"N exceeds supported maximum {MAX_N}")
    y = args.y if args.y is not None else [0.0] * n
    x = args.x if args.x is not None else [0.0] * n
    if len(y) != n or len(x) != n:
        raise UsageError(f"--y and --x need {n} values each, got {len(y)} and {len(x)}")
    if not args.hbar > 0:
        raise UsageError("--hbar must be positive")
    return y, x


def evaluate_phi(n, y, x, hbar, method, tol):
    """One phi evaluation; shared by ``eval`` and ``scan``."""
    plan = ContourPlan(tol=tol if tol is not None else default_tol(n))
    t0 = time.perf_counter()
    res = METHODS[method](Rapidities(tuple(y), ChainParams(hbar)), Positions(tuple(x)), plan)
    return {
        "n": n, "y": list(y), "x": list(x), "hbar": hbar, "method": method,
        "value_re": res.value.real, "value_im": res.value.imag,
        "abs_err_est": res.abs_err_est, "nodes": res.nodes_used,
        "seconds": time.perf_counter() - t0,
    }


def cmd_eval(args) -> int:
    y, x = _point(args)
    rec = evaluate_phi(args.n, y, x, args.hbar, args.method, args.tol)
    print(json.dumps(rec))
    return 0


def cmd_verify(args) -> int:
    from .identities import CaseSpec, run_suite

    try:
        spec = CaseSpec(seed=args.seed, n_cases=args.cases, box=args.box, tol=args.tol)
    except PreconditionViolated as exc:
        raise UsageError(str(exc))
    names = None if args.identity == "all" else [args.identity]
    reports = run_suite(spec, names, workers=args.workers)
    for rep in reports:
        print(json.dumps(rep.as_dict(), default=str))
    failed = [r.name for r in reports if not r.passed]
    for name in failed:
        print(f"FAILED {name}", file=sys.stderr)
    return 1 if failed else 0


def parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be a:b:steps, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError:
        raise UsageError(f"range must be a:b:steps, got {text!r}")
    if steps < 1:
        raise UsageError("range needs at least one step")
    if steps == 1:
        return [a]
    return [a + (b - a) * k / (steps - 1) for k in range(steps)]


def _axis(text: str, n: int):
    if len(text) < 2 or text[0] not in "xy" or not text[1:].isdigit():
        raise UsageError(f"axis must look like x2 or y1, got {text!r}")
    idx = int(text[1:])
    if not 1 <= idx <= n:
        raise UsageError(f"axis index {idx} outside 1..{n}")
    return text[0], idx - 1


def cmd_scan(args) -> int:
    y, x = _point(args)
    kind, idx = _axis(args.axis, args.n)
    grid = parse_range(args.range)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for v in grid:
            yy, xx = list(y), list(x)
            (yy if kind == "y" else xx)[idx] = v
            rec = evaluate_phi(args.n, yy, xx, args.hbar, args.method, args.tol)
            writer.writerow([args.n, args.hbar, args.method, args.axis, repr(float(v)),
                             repr(float(rec["value_re"])), repr(float(rec["value_im"])),
                             repr(float(rec["abs_err_est"]))])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_bench(args) -> int:
    from .bench import run

    for row in run(repeat=args.repeat, size=args.size):
        print(json.dumps(row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .identities import IDENTITIES

    p = argparse.ArgumentParser(prog="toda-sov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def point_flags(q):
        q.add_argument("--n", type=int, required=True)
        q.add_argument("--y", type=_floats)
        q.add_argument("--x", type=_floats)
        q.add_argument("--hbar", type=float, default=1.0)
        q.add_argument("--method", choices=sorted(METHODS), default="gg")
        q.add_argument("--tol", type=float)

    q = sub.add_parser("eval", help="evaluate phi_y(x), print one JSON object")
    point_flags(q)
    q.set_defaults(func=cmd_eval)

    q = sub.add_parser("verify", help="run identity checks, one JSON object per case")
    q.add_argument("--identity", choices=list(IDENTITIES) + ["all"], default="all")
    q.add_argument("--seed", type=int, default=42)
    q.add_argument("--cases", type=int, default=3)
    q.add_argument("--box", type=float, default=1.0)
    q.add_argument("--tol", type=float)
    q.add_argument("--workers", type=int, default=1)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("scan", help="phi along one coordinate axis, CSV output")
    point_flags(q)
    q.add_argument("--axis", required=True)
    q.add_argument("--range", required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_scan)

    q = sub.add_parser("bench", help="compiled vs numpy backend timings")
    q.add_argument("--repeat", type=int, default=3)
    q.add_argument("--size", type=int, default=200_000)
    q.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # values such as "-4:4:33" or "-0.5,1" would otherwise be read as flags
    for i in range(len(argv) - 2, -1, -1):
        if argv[i] in VALUE_FLAGS and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"{argv[i]}={argv[i + 1]}"]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, BudgetExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except TodaSovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 3


if __name__ == "__main__":
    sys.exit(main())
