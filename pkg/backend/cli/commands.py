"""
Sub-command implementations behind the pmi-inner command line
"""

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from common.config import get_settings
from common.errors import DegreeError, ParseError, PmiError, SolverError, VerificationError
from common.schemas import GapReport, ProblemSpec, SweepRow, Variant
from cli.artifacts import Artifact, default_artifact_path, read_artifact, write_artifact
from cli.problem_file import build_problem, load_problem
from moments import moment_vector
from sdpcore import export_sdp
from sosbuild import InnerApprox, PmiProblem, build_inner_sdp, duality_gap, minimal_order, solve_chain, solve_inner
from verify import (
    GridPlan,
    grid_points,
    grid_report,
    hessian_extreme,
    l1_gap,
    mc_volume,
    nested_gap,
    sample_points,
    soundness_report,
    u_sampling_plan,
)

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1e-5
SWEEP_COLUMNS = ["d", "status", "objective", "rho_hat", "rho_se", "volume_hat", "volume_se", "violations"]

_SECTION_RE = re.compile(r"^\s*x(\d+)\s*=\s*(\S+)\s*$")
_RANGE_RE = re.compile(r"^\s*(-?\d+)\s*(?:\.\.|-|:)\s*(-?\d+)\s*$")


def resolve_variant(spec: ProblemSpec, variant: Optional[str]) -> Variant:
    return Variant(variant) if variant else spec.options.variant


def resolve_tol(spec: ProblemSpec, tol: Optional[float]) -> float:
    if tol is not None:
        return tol
    return spec.options.tol if spec.options.tol is not None else get_settings().solver_tol


def resolve_seed(spec: ProblemSpec, seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    return spec.options.seed if spec.options.seed is not None else get_settings().default_seed


def resolve_degree(spec: ProblemSpec, degree: Optional[int]) -> int:
    if degree is not None:
        return degree
    if spec.options.degrees:
        return spec.options.degrees[0]
    raise ParseError(f"problem {spec.name} lists no degrees; pass --degree")


def parse_range(text: str) -> List[int]:
    """'2..4' (also '2-4', '2:4') to [2, 3, 4]; an empty range is a usage error."""
    match = _RANGE_RE.match(text or "")
    if not match:
        raise ParseError(f"degree range must look like 'lo..hi', got {text!r}")
    lo, hi = int(match.group(1)), int(match.group(2))
    if lo > hi:
        raise ParseError(f"degree range {text!r} is empty")
    return list(range(lo, hi + 1))


def parse_section(text: Optional[str]) -> Dict[int, float]:
    """'x3=0,x4=0.5' to {2: 0.0, 3: 0.5}."""
    section: Dict[int, float] = {}
    if not text:
        return section
    for part in text.split(","):
        match = _SECTION_RE.match(part)
        if not match:
            raise ParseError(f"section entries must look like 'x3=0', got {part!r}")
        try:
            section[int(match.group(1)) - 1] = float(match.group(2))
        except ValueError as exc:
            raise ParseError(f"section value in {part!r} is not a number") from exc
    return section


def verification_plan(problem: PmiProblem, resolution: int, seed: int) -> GridPlan:
    """Grid over B for 2-D problems, the same number of uniform samples otherwise."""
    if problem.n == 2:
        return grid_points(problem.moment_source, resolution)
    return sample_points(problem.moment_source, resolution * resolution, seed=seed)


def _u_samples(spec: ProblemSpec, problem: PmiProblem, seed: int):
    return u_sampling_plan(problem, grid_points=spec.options.u_grid, seed=seed)


def solve_at(
    problem: PmiProblem,
    d: int,
    variant: Variant,
    tol: float,
    seed: int,
    max_iter: Optional[int] = None,
    verbose: bool = False,
) -> InnerApprox:
    """One order; the nested variant first solves the chain from the minimal order up to d."""
    if variant == Variant.NESTED:
        d0 = minimal_order(problem)
        if d < d0:
            raise DegreeError(f"relaxation order {d} is below the minimum {d0} for problem {problem.name}")
        return solve_chain(problem, range(d0, d + 1), variant, tol=tol, max_iter=max_iter, seed=seed)[-1]
    return solve_inner(problem, d, variant, tol=tol, max_iter=max_iter, seed=seed, verbose=verbose)


def cmd_solve(
    path,
    degree: Optional[int] = None,
    variant: Optional[str] = None,
    tol: Optional[float] = None,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    grid_res: Optional[int] = None,
    max_iter: Optional[int] = None,
    verify: bool = True,
    verbose: bool = False,
) -> Tuple[Artifact, Path]:
    """Solve one order, check soundness on a grid, write the artifact; violations raise after writing."""
    settings = get_settings()
    spec, problem = load_problem(path)
    d = resolve_degree(spec, degree)
    variant = resolve_variant(spec, variant)
    tol = resolve_tol(spec, tol)
    seed = resolve_seed(spec, seed)
    approx = solve_at(problem, d, variant, tol, seed, max_iter=max_iter, verbose=verbose)

    soundness = None
    extra = {"seed": seed}
    if verify:
        plan = verification_plan(problem, grid_res or settings.grid_resolution, seed)
        soundness = soundness_report(approx, problem, plan, u_samples=_u_samples(spec, problem, seed), seed=seed)
        if variant == Variant.CONVEX:
            h_min, h_max = hessian_extreme(approx.g, plan)
            extra.update({"hessian_min": h_min, "hessian_max": h_max})
    artifact = Artifact.from_solution(spec, approx, soundness=soundness, extra=extra)
    target = Path(out) if out else default_artifact_path(spec.name, d, variant)
    write_artifact(artifact, target)

    if soundness is not None and not soundness.passed:
        raise VerificationError(
            f"{spec.name} d={d}: {soundness.violations} of {soundness.samples} grid points with g > 0 violate the PMI"
        )
    if verify and variant == Variant.CONVEX and extra["hessian_max"] > settings.soundness_tolerance:
        raise VerificationError(f"{spec.name} d={d}: Hessian of g has eigenvalue {extra['hessian_max']:.3e} > 0")
    return artifact, target


def _failure_status(exc: PmiError) -> str:
    if isinstance(exc, SolverError) and exc.status:
        return exc.status
    if isinstance(exc, DegreeError):
        return "degree_error"
    return "error"


def cmd_sweep(
    path,
    degrees: List[int],
    variant: Optional[str] = None,
    tol: Optional[float] = None,
    seed: Optional[int] = None,
    samples: Optional[int] = None,
    grid_res: Optional[int] = None,
    workers: Optional[int] = None,
    out: Optional[Path] = None,
) -> pd.DataFrame:
    """One row per order with objective, L1-gap and volume estimates; failures are recorded, not raised."""
    settings = get_settings()
    if not degrees:
        raise ParseError("sweep needs a nonempty degree range")
    spec, problem = load_problem(path)
    variant = resolve_variant(spec, variant)
    tol = resolve_tol(spec, tol)
    seed = resolve_seed(spec, seed)
    samples = settings.mc_samples if samples is None else samples
    workers = settings.sweep_workers if workers is None else workers
    u_samples = _u_samples(spec, problem, seed)
    degrees = sorted(degrees)

    def estimate(d: int, approx: InnerApprox) -> SweepRow:
        rho = l1_gap(approx.g, problem, samples=samples, seed=seed, u_samples=u_samples, workers=1)
        volume = mc_volume(approx.g, problem.moment_source, samples=samples, seed=seed, workers=1)
        return SweepRow(
            d=d,
            status=str(approx.diagnostics.get("status", "optimal")),
            objective=approx.objective_value,
            rho_hat=rho.estimate,
            rho_se=rho.std_error,
            volume_hat=volume.estimate,
            volume_se=volume.std_error,
            violations=rho.violations,
        )

    def run_one(d: int) -> SweepRow:
        try:
            return estimate(d, solve_inner(problem, d, variant, tol=tol, seed=seed))
        except PmiError as exc:
            logger.warning(f"sweep {spec.name} d={d} failed: {exc.detail}")
            return SweepRow(d=d, status=_failure_status(exc), error=exc.detail)

    rows: List[SweepRow] = []
    if variant == Variant.NESTED:
        plan = verification_plan(problem, grid_res or settings.grid_resolution, seed)
        prev: Optional[InnerApprox] = None
        for d in degrees:
            try:
                if prev is None:
                    approx = solve_inner(problem, d, Variant.PLAIN, tol=tol, seed=seed)
                else:
                    approx = solve_inner(problem, d, Variant.NESTED, prev=prev.g, tol=tol, seed=seed)
            except PmiError as exc:
                logger.warning(f"sweep {spec.name} d={d} failed: {exc.detail}")
                rows.append(SweepRow(d=d, status=_failure_status(exc), error=exc.detail))
                continue
            row = estimate(d, approx)
            if prev is not None:
                row.nested_min_gap = nested_gap(approx.g, prev.g, plan)
            rows.append(row)
            prev = approx
    elif workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, degrees))
    else:
        rows = [run_one(d) for d in degrees]

    columns = SWEEP_COLUMNS + (["nested_min_gap"] if variant == Variant.NESTED else [])
    frame = pd.DataFrame([row.model_dump() for row in rows])[columns]
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False)
        logger.info(f"Wrote sweep table {out}")
    return frame


def cmd_grid(
    artifact_path,
    grid_res: Optional[int] = None,
    section: Optional[str] = None,
    out: Optional[Path] = None,
) -> pd.DataFrame:
    """Grid CSV rows (free coordinates, g, lambda, inside) of a stored solution."""
    artifact = read_artifact(artifact_path)
    spec = artifact.spec()
    problem = build_problem(spec)
    seed = int(artifact.fields.get("seed", resolve_seed(spec, None)))
    plan = grid_points(problem.moment_source, grid_res, parse_section(section))
    frame = grid_report(artifact.polynomial(), problem, plan, u_samples=_u_samples(spec, problem, seed))
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False)
        logger.info(f"Wrote {len(frame)} grid rows to {out}")
    return frame


def cmd_moments(path, degree: Optional[int] = None, out: Optional[Path] = None) -> pd.DataFrame:
    """Moments of B for all |alpha| <= degree in graded-lex order.

    Without a degree the dump covers |alpha| <= 2d for the first listed relaxation order d,
    which is every moment that order's objective uses.
    """
    spec, problem = load_problem(path)
    if degree is None:
        max_degree = 2 * resolve_degree(spec, None)
    elif degree < 0:
        raise DegreeError(f"moment degree must be nonnegative, got {degree}")
    else:
        max_degree = degree
    monos, values = moment_vector(problem.moment_source, max_degree)
    frame = pd.DataFrame({"alpha": [" ".join(str(e) for e in mono) for mono in monos], "moment": values})
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False)
    return frame


def cmd_export(path, degree: Optional[int] = None, variant: Optional[str] = None, out: Optional[Path] = None) -> Path:
    """Write the certificate program in the sparse text format."""
    spec, problem = load_problem(path)
    d = resolve_degree(spec, degree)
    variant = resolve_variant(spec, variant)
    if variant == Variant.NESTED:
        raise ParseError("export of the nested variant needs a previous solution; solve it instead")
    program = build_inner_sdp(problem, d, variant=variant)
    logger.info(program.summary())
    target = Path(out) if out else Path(get_settings().artifact_dir) / f"{spec.name}-d{d}-{variant.value}.sdp"
    return export_sdp(program.sdp, target)


def cmd_gap(path, degree: Optional[int] = None, tol: Optional[float] = None) -> GapReport:
    """Solve the certificate program and its moment form; a relative gap above 1e-5 is a violation."""
    spec, problem = load_problem(path)
    d = resolve_degree(spec, degree)
    report = duality_gap(problem, d, tol=resolve_tol(spec, tol))
    if report.relative > GAP_TOLERANCE:
        raise VerificationError(f"{spec.name} d={d}: relative duality gap {report.relative:.3e}")
    return report
