"""
Read certificates back out of solved programs
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from common.config import get_settings
from common.errors import InfeasibleProblemError, SolverError
from common.schemas import SolverStatus, Variant
from polyalg import Polynomial, hessian, quad_form
from sdpcore import SdpSolution
from sosbuild.assembly import InnerProgram
from sosbuild.sphere import sphere_divide

logger = logging.getLogger(__name__)


class InnerApprox(BaseModel):
    """Polynomial g_d with {x in B : g_d(x) >= 0} inside the PMI feasible set, plus its certificate."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    g: Polynomial
    d: int
    variant: Variant
    objective_value: float
    multipliers: Dict[str, Any] = Field(default_factory=dict)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    program: Optional[Any] = Field(default=None, exclude=True)

    @property
    def identity_residual(self) -> float:
        return float(self.diagnostics.get("identity_residual", np.nan))

    def absorbed_multiplier(self) -> Polynomial:
        """Reconstruct the sphere multiplier r of the main identity as a division quotient."""
        program: InnerProgram = self.program
        universe = program.universes["main"]
        residual = quad_form(program.problem.P) - self.g.embed(universe, {s: s for s in range(universe.n)})
        for gram in program.blocks:
            if gram.group != "main":
                continue
            residual = residual - gram.weight * gram.sos_polynomial(self.multipliers[gram.label])
        quotient, _ = sphere_divide(residual)
        return quotient


def _sphere_points(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    pts = rng.standard_normal((count, dim))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def identity_residuals(program: InnerProgram, g: Polynomial, grams: Dict[str, np.ndarray], seed: int = 0) -> Dict[str, float]:
    """Max |LHS - RHS| of each certificate identity at random samples, scaled by 1 + max coefficient."""
    settings = get_settings()
    count = settings.identity_samples
    rng = np.random.default_rng(seed)
    problem = program.problem
    U = program.universes["main"]
    scale = 1.0 + max(g.max_abs_coefficient(), max((np.abs(G).max() for G in grams.values()), default=0.0))
    x = problem.moment_source.sample(count, rng)
    u = problem.sample_u(count, rng)
    v = _sphere_points(count, U.m, rng)
    g_vals = g.evaluate(x)
    out: Dict[str, float] = {}

    pts = U.pack(x=x, u=u if U.p else None, v=v)
    lhs = quad_form(problem.P).evaluate(pts) - g_vals
    rhs = np.zeros(count)
    for gram in program.blocks:
        if gram.group == "main":
            rhs += gram.term_values(grams[gram.label], pts)
    out["main"] = float(np.max(np.abs(lhs - rhs))) / scale

    if "nested" in program.targets:
        lhs = g_vals - program.prev.evaluate(x)
        rhs = np.zeros(count)
        for gram in program.blocks:
            if gram.group == "nested":
                rhs += gram.term_values(grams[gram.label], x)
        out["nested"] = float(np.max(np.abs(lhs - rhs))) / scale

    if "convex" in program.targets:
        Uc = program.universes["convex"]
        vc = _sphere_points(count, Uc.m, rng)
        pts_c = Uc.pack(x=x, v=vc)
        hess = quad_form(_hessian_in(g, Uc)).evaluate(pts_c)
        rhs = np.zeros(count)
        for gram in program.blocks:
            if gram.group == "convex":
                rhs += gram.term_values(grams[gram.label], pts_c)
        out["convex"] = float(np.max(np.abs(-hess - rhs))) / scale
    return out


def _hessian_in(g: Polynomial, target):
    return hessian(g.embed(target, {s: s for s in range(g.universe.n)}))


def extract_solution(program: InnerProgram, solution: SdpSolution, seed: Optional[int] = None) -> InnerApprox:
    """Turn an optimal SDP solution into an InnerApprox; other statuses raise typed errors."""
    problem = program.problem
    if solution.status == SolverStatus.INFEASIBLE:
        raise InfeasibleProblemError(
            f"{problem.name} d={program.d}: certificate program is infeasible", status=solution.status.value
        )
    if solution.status != SolverStatus.OPTIMAL:
        raise SolverError(
            f"{problem.name} d={program.d}: solver stopped with status {solution.status.value} "
            f"after {solution.iterations} iterations",
            status=solution.status.value,
        )
    g_values = np.asarray(solution.free_values[program.g_block], dtype=float)
    g = program.g_from_values(g_values)
    grams: Dict[str, np.ndarray] = {
        gram.label: np.asarray(X, dtype=float) for gram, X in zip(program.blocks, solution.primal_blocks)
    }
    seed = get_settings().default_seed if seed is None else seed
    residuals = identity_residuals(program, g, grams, seed=seed)
    min_eigs = {label: float(np.linalg.eigvalsh(G)[0]) for label, G in grams.items()}
    diagnostics = {
        "status": solution.status.value,
        "iterations": int(solution.iterations),
        "primal_objective": float(solution.primal_objective),
        "dual_objective": float(solution.dual_objective),
        "primal_feasibility": float(solution.primal_feasibility),
        "dual_feasibility": float(solution.dual_feasibility),
        "gap": float(solution.gap),
        "identity_residual": float(max(residuals.values())),
        "identity_residuals": {key: float(value) for key, value in residuals.items()},
        "gram_min_eigenvalue": min(min_eigs.values()) if min_eigs else 0.0,
        "rows": len(program.row_keys),
        "block_sizes": [gram.size for gram in program.blocks],
    }
    objective = float(program.moments @ g_values)
    logger.info(
        f"Extracted g_{program.d} for {problem.name}: objective={objective:.8g} "
        f"identity_residual={diagnostics['identity_residual']:.2e}"
    )
    return InnerApprox(
        g=g,
        d=program.d,
        variant=program.variant,
        objective_value=objective,
        multipliers=grams,
        diagnostics=diagnostics,
        program=program,
    )
