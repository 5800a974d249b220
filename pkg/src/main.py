#!/usr/bin/env python3
"""covham: command-line entry point.

    covham verify <file> [--samples N] [--tol T] [--seed S] [--workers K]
    covham simulate <file> [--t-end T] [--dt D] [--observables e1,e2] --out PATH [--format csv|json]
    covham bracket <file> --f EXPR --g EXPR --at x1,..,xm
    covham equilibrium <file> --guess x1,..,xm [--tol T] [--max-iter K]
    covham roots <file> --at x1,..,xm

JSON results go to stdout, logs to stderr. Exit codes: 0 success, 1 verification or
convergence failure, 2 input error, 3 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import LOGGING_SETTINGS  # noqa: E402
from cli.commands import (  # noqa: E402
    cmd_bracket,
    cmd_equilibrium,
    cmd_roots,
    cmd_simulate,
    cmd_verify,
    exit_code_for,
)
from cli.export import FORMATS  # noqa: E402
from cli.scenario import load_scenario  # noqa: E402

logger = logging.getLogger("covham")

# Options whose values may start with "-" (negative coordinates, negated expressions).
FREE_VALUE_OPTIONS = ("--at", "--guess", "--f", "--g", "--observables")


def parse_point(text: str) -> List[float]:
    """Comma-separated floats, e.g. `1,2.5,-3`."""
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def parse_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def join_free_values(argv: Sequence[str]) -> List[str]:
    """Rewrite `--at -1,2` as `--at=-1,2` so argparse does not read the value as an option."""
    joined: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token in FREE_VALUE_OPTIONS:
            value = next(tokens, None)
            joined.append(token if value is None else f"{token}={value}")
        else:
            joined.append(token)
    return joined


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covham", description="Covariant Hamiltonian bracket toolkit")
    parser.add_argument("--log-level", default=LOGGING_SETTINGS["level"],
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], help="Log level on stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="Check the bracket identities at seeded sample points")
    verify.add_argument("scenario", help="Path to scenario JSON file")
    verify.add_argument("--samples", type=int, help="Number of sample points")
    verify.add_argument("--tol", type=float, help="Tolerance override for every check")
    verify.add_argument("--seed", type=int, help="Sampling seed")
    verify.add_argument("--workers", type=int, help="Worker threads for point evaluation")

    simulate = commands.add_parser("simulate", help="Integrate the flow and export the trajectory")
    simulate.add_argument("scenario", help="Path to scenario JSON file")
    simulate.add_argument("--t-end", type=float, help="Integration horizon")
    simulate.add_argument("--dt", type=float, help="Requested step")
    simulate.add_argument("--observables", type=parse_list, default=[], help="Comma-separated expressions")
    simulate.add_argument("--out", required=True, help="Output file")
    simulate.add_argument("--format", choices=FORMATS, default="csv", help="Output format")

    bracket = commands.add_parser("bracket", help="Evaluate the brackets of two functions at a point")
    bracket.add_argument("scenario", help="Path to scenario JSON file")
    bracket.add_argument("--f", required=True, help="First function")
    bracket.add_argument("--g", required=True, help="Second function")
    bracket.add_argument("--at", type=parse_point, required=True, help="Point x1,..,xm")

    equilibrium = commands.add_parser("equilibrium", help="Solve DH = 0 by damped Newton")
    equilibrium.add_argument("scenario", help="Path to scenario JSON file")
    equilibrium.add_argument("--guess", type=parse_point, required=True, help="Initial guess x1,..,xm")
    equilibrium.add_argument("--tol", type=float, help="Residual tolerance")
    equilibrium.add_argument("--max-iter", type=int, help="Iteration limit")

    roots = commands.add_parser("roots", help="Characteristic data of the acceleration flow at a point")
    roots.add_argument("scenario", help="Path to scenario JSON file")
    roots.add_argument("--at", type=parse_point, required=True, help="Point x1,..,xm")
    return parser


def run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.command == "verify":
        report = cmd_verify(scenario, samples=args.samples, seed=args.seed, tol=args.tol, workers=args.workers)
        print(report.to_json())
        return report.exit_code()
    if args.command == "simulate":
        summary, code = cmd_simulate(scenario, args.out, t_end=args.t_end, dt=args.dt,
                                     observables=args.observables, fmt=args.format)
        if code:
            print(f"covham: blow-up at t={summary['blow_up_time']!r}", file=sys.stderr)
        print(json.dumps(summary, indent=2))
        return code
    if args.command == "bracket":
        print(json.dumps(cmd_bracket(scenario, args.f, args.g, args.at), indent=2))
        return 0
    if args.command == "equilibrium":
        data, code = cmd_equilibrium(scenario, args.guess, tol=args.tol, max_iter=args.max_iter)
        print(json.dumps(data, indent=2))
        return code
    print(json.dumps(cmd_roots(scenario, args.at), indent=2))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(join_free_values(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=args.log_level, format=LOGGING_SETTINGS["format"], stream=sys.stderr)
    try:
        return run(args)
    except Exception as exc:
        code = exit_code_for(exc)
        logger.debug("command failed", exc_info=True)
        print(f"covham: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
