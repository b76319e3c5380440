"""
Build, solve and extract in one call
"""

import logging
from typing import List, Optional, Sequence

from common.schemas import Variant
from polyalg import Polynomial
from sdpcore import solve
from sosbuild.assembly import build_inner_sdp
from sosbuild.extract import InnerApprox, extract_solution
from sosbuild.problem import PmiProblem

logger = logging.getLogger(__name__)


def solve_inner(
    problem: PmiProblem,
    d: int,
    variant: Variant = Variant.PLAIN,
    prev: Optional[Polynomial] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    extra_degree: int = 0,
    seed: Optional[int] = None,
    verbose: bool = False,
) -> InnerApprox:
    program = build_inner_sdp(problem, d, variant=variant, prev=prev, extra_degree=extra_degree)
    solution = solve(program.sdp, tol=tol, max_iter=max_iter, verbose=verbose)
    return extract_solution(program, solution, seed=seed)


def solve_chain(
    problem: PmiProblem,
    degrees: Sequence[int],
    variant: Variant = Variant.PLAIN,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: Optional[int] = None,
) -> List[InnerApprox]:
    """Solve a run of orders; the nested variant feeds each g into the next order, starting plain."""
    variant = Variant(variant)
    results: List[InnerApprox] = []
    prev: Optional[Polynomial] = None
    for d in sorted(degrees):
        if variant == Variant.NESTED and prev is None:
            approx = solve_inner(problem, d, Variant.PLAIN, tol=tol, max_iter=max_iter, seed=seed)
        else:
            approx = solve_inner(problem, d, variant, prev=prev, tol=tol, max_iter=max_iter, seed=seed)
        logger.info(f"{problem.name}: order {d} ({variant.value}) objective {approx.objective_value:.8g}")
        results.append(approx)
        prev = approx.g
    return results
