"""
pmi-inner command line.

Exit codes: 0 ok, 2 parse or usage, 3 degree, 4 solver, 5 verification.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from common.config import get_settings
from common.errors import PmiError
from common.logging_setup import configure_logging
from cli.commands import cmd_export, cmd_gap, cmd_grid, cmd_moments, cmd_solve, cmd_sweep, parse_range
from cli.registry import example_names, write_examples

logger = logging.getLogger(__name__)

VARIANTS = ["plain", "nested", "convex"]


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", choices=VARIANTS, help="certificate variant (default: file option, else plain)")
    parser.add_argument("--tol", type=float, help="interior-point tolerance")
    parser.add_argument("--seed", type=int, help="seed for every sampled report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmi-inner",
        description="Polynomial inner approximations of parametrized PMI feasible sets",
    )
    parser.add_argument("--log-level", default=None, help="logging level (default: PMI_LOG_LEVEL)")
    parser.add_argument("-v", "--verbose", action="store_true", help="print the solver iteration log")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one relaxation order and write an artifact")
    solve.add_argument("file", type=Path)
    solve.add_argument("--degree", type=int, help="relaxation order d (g has degree 2d)")
    _add_solver_flags(solve)
    solve.add_argument("--grid-res", type=int, help="soundness grid resolution per axis")
    solve.add_argument("--max-iter", type=int)
    solve.add_argument("--no-verify", action="store_true", help="skip the soundness grid")
    solve.add_argument("--out", type=Path, help="artifact path")

    sweep = sub.add_parser("sweep", help="solve a range of orders and tabulate gap and volume estimates")
    sweep.add_argument("file", type=Path)
    sweep.add_argument("--range", dest="range_", required=True, metavar="LO..HI")
    _add_solver_flags(sweep)
    sweep.add_argument("--samples", type=int, help="Monte-Carlo samples per estimate")
    sweep.add_argument("--grid-res", type=int)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    grid = sub.add_parser("grid", help="evaluate a stored solution on a 2-D grid")
    grid.add_argument("artifact", type=Path)
    grid.add_argument("--grid-res", type=int)
    grid.add_argument("--section", help="fix coordinates for n != 2, e.g. x3=0")
    grid.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    moments = sub.add_parser("moments", help="dump the moments of the bounding set")
    moments.add_argument("file", type=Path)
    moments.add_argument("--degree", type=int, help="largest moment degree |alpha| (default: 2d for the first listed order)")
    moments.add_argument("--out", type=Path)

    examples = sub.add_parser("examples", help="list or write the built-in problems")
    examples.add_argument("--out", type=Path, help="directory to write the .pmi files into")

    export = sub.add_parser("export", help="write the certificate program in sparse text format")
    export.add_argument("file", type=Path)
    export.add_argument("--degree", type=int)
    export.add_argument("--variant", choices=VARIANTS)
    export.add_argument("--out", type=Path)

    gap = sub.add_parser("gap", help="compare the certificate program with its moment form")
    gap.add_argument("file", type=Path)
    gap.add_argument("--degree", type=int)
    gap.add_argument("--tol", type=float)
    return parser


def _emit(frame, out: Optional[Path]) -> None:
    if out is None:
        frame.to_csv(sys.stdout, index=False)


def run(args: argparse.Namespace) -> int:
    if args.command == "solve":
        artifact, path = cmd_solve(
            args.file,
            degree=args.degree,
            variant=args.variant,
            tol=args.tol,
            seed=args.seed,
            out=args.out,
            grid_res=args.grid_res,
            max_iter=args.max_iter,
            verify=not args.no_verify,
            verbose=args.verbose,
        )
        print(f"artifact = {path}")
        print(f"objective = {artifact.objective!r}")
        for key in ("identity_residual", "soundness_samples", "soundness_violations", "hessian_max"):
            if key in artifact.fields:
                print(f"{key} = {artifact.fields[key]}")
    elif args.command == "sweep":
        frame = cmd_sweep(
            args.file,
            parse_range(args.range_),
            variant=args.variant,
            tol=args.tol,
            seed=args.seed,
            samples=args.samples,
            grid_res=args.grid_res,
            workers=args.workers,
            out=args.out,
        )
        _emit(frame, args.out)
    elif args.command == "grid":
        _emit(cmd_grid(args.artifact, grid_res=args.grid_res, section=args.section, out=args.out), args.out)
    elif args.command == "moments":
        _emit(cmd_moments(args.file, degree=args.degree, out=args.out), args.out)
    elif args.command == "examples":
        if args.out:
            for path in write_examples(args.out):
                print(path)
        else:
            for name in example_names():
                print(name)
    elif args.command == "export":
        print(cmd_export(args.file, degree=args.degree, variant=args.variant, out=args.out))
    elif args.command == "gap":
        report = cmd_gap(args.file, degree=args.degree, tol=args.tol)
        for key, value in report.model_dump(mode="json").items():
            print(f"{key} = {value}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return run(args)
    except PmiError as exc:
        logger.error(f"{type(exc).__name__}: {exc.detail}", exc_info=get_settings().debug)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
