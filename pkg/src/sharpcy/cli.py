"""Command-line front end: ``sharpcy <subcommand> [options]``.

Exit status is 0 when the check passes, 1 on a violation and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import DomainError
from .verify import Geometry, Sampling, TaskKind, VerificationTask, emit_report, run_task, write_report

EXIT_PASS, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path} is not valid JSON: {exc}") from exc


def _load_boundary(path):
    """Boundary data: a list of [m, re, im] triples, bare or under a "modes" key."""
    data = _load_json(path)
    if isinstance(data, dict):
        data = data.get("modes")
    if not isinstance(data, list) or not all(isinstance(t, list) and len(t) == 3 for t in data):
        raise DomainError(f"{path}: expected a list of [m, re, im] triples")
    return data


def build_parser():
    parser = argparse.ArgumentParser(prog="sharpcy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="dimension")
    common.add_argument("--K", type=float, default=0.0, help="curvature (lower bound for warps)")
    common.add_argument("--R", type=float, default=1.0, help="geodesic ball radius")
    common.add_argument("--bound", choices=["euclid", "conformal", "surface2d", "manifold"])
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="report path (stdout JSON when omitted)")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--workers", type=int, default=1)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--mixture", metavar="FILE", help="Poisson mixture JSON")
    src.add_argument("--warp", metavar="NAME", help="flat, sphere, hyperbolic or poly:3=b3,5=b5")
    src.add_argument("--kernel", action="store_true", help="single Poisson kernel toward e_1")
    src.add_argument("--poles", type=int, default=5, help="pole count of the seeded random mixture")
    common.add_argument("--boundary", metavar="FILE", help="[m, re, im] boundary modes for --warp")

    for kind in TaskKind:
        sub.add_parser(kind.value, parents=[common], help=f"run the {kind.value} check")

    acc = sub.add_parser("acceptance", help="run the acceptance suite")
    acc.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


def task_from_args(args) -> VerificationTask:
    if args.mixture:
        function = {"type": "mixture", "mixture": _load_json(args.mixture)}
    elif args.warp:
        if not args.boundary:
            raise DomainError("--warp needs --boundary")
        function = {"type": "warp", "warp": args.warp, "boundary": _load_boundary(args.boundary)}
    elif args.kernel:
        function = {"type": "kernel"}
    else:
        function = {"type": "random_mixture", "poles": args.poles}
    if args.samples <= 0:
        raise DomainError("--samples must be positive")
    return VerificationTask(
        kind=args.command,
        geometry=Geometry(args.K, args.n, args.R),
        function=function,
        sampling=Sampling(seed=args.seed, count=args.samples),
        bound=args.bound,
        tol=args.tol,
        workers=max(1, args.workers),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "acceptance":
        from .acceptance import run_all

        results = run_all(set(args.only) if args.only else None)
        return EXIT_PASS if all(r.passed for r in results) else EXIT_VIOLATION
    try:
        report = run_task(task_from_args(args))
        if args.out:
            emit_report(report, args.format, args.out)
        else:
            write_report(report, args.format, sys.stdout)
    except (ValueError, KeyError, OSError) as exc:
        print(f"sharpcy: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_PASS if report.passed else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
