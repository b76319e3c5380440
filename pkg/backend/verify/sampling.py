"""
Sampled robust minimum eigenvalue and set membership.

lambda(x) = min over u in U of the smallest eigenvalue of P(x, u). U is only
sampled: a tensor grid over the uncertainty box plus seeded uniform points,
both filtered by the user constraints a_i(u) >= 0. The sampled value is an
upper bound on the true lambda(x).
"""

import logging
from typing import Optional

import numpy as np

from common.config import get_settings
from common.errors import EmptySampleError
from common.schemas import MembershipResult
from sosbuild.problem import PmiProblem
from verify.eigen import eig_sym_batch

logger = logging.getLogger(__name__)

# matrices evaluated per eigenvalue batch
_BATCH = 200_000


def u_sampling_plan(
    problem: PmiProblem,
    grid_points: Optional[int] = None,
    random_points: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """Points of U used for every lambda evaluation, shape (k, p); one empty row when p = 0."""
    settings = get_settings()
    p = problem.universe.p
    if p == 0:
        return np.zeros((1, 0))
    if not problem.u_bounds:
        raise EmptySampleError(f"problem {problem.name} has uncertain parameters but no bounds to sample")
    grid_points = settings.u_grid_points if grid_points is None else grid_points
    random_points = settings.u_random_points if random_points is None else random_points
    seed = settings.default_seed if seed is None else seed

    lo = np.array([l for l, _ in problem.u_bounds], dtype=float)
    hi = np.array([h for _, h in problem.u_bounds], dtype=float)
    axes = [np.linspace(l, h, grid_points) if grid_points > 1 else np.array([(l + h) / 2]) for l, h in zip(lo, hi)]
    grid = np.stack([axis.ravel() for axis in np.meshgrid(*axes, indexing="ij")], axis=1)
    rng = np.random.default_rng(seed)
    random = rng.uniform(lo, hi, size=(random_points, p))
    candidates = np.vstack([grid, random])
    kept = candidates[problem.u_feasible(candidates, tol=1e-12)]
    if kept.shape[0] == 0:
        raise EmptySampleError(
            f"no sampled uncertainty point of {problem.name} satisfies the constraints a_i(u) >= 0"
        )
    logger.debug(f"U sampling plan for {problem.name}: {kept.shape[0]} of {candidates.shape[0]} points kept")
    return kept


def lambda_min_batch(problem: PmiProblem, points, u_samples: np.ndarray) -> np.ndarray:
    """Sampled lambda at each row of points (N x n)."""
    xs = np.atleast_2d(np.asarray(points, dtype=float))
    us = np.atleast_2d(np.asarray(u_samples, dtype=float))
    if us.shape[0] == 0:
        raise EmptySampleError("empty uncertainty sample")
    universe = problem.universe
    if xs.shape[1] != universe.n:
        raise ValueError(f"points have {xs.shape[1]} coordinates, problem has n={universe.n}")
    n_u = us.shape[0]
    step = max(1, _BATCH // n_u)
    out = np.empty(xs.shape[0])
    for start in range(0, xs.shape[0], step):
        block = xs[start:start + step]
        count = block.shape[0]
        pts = universe.pack(
            x=np.repeat(block, n_u, axis=0),
            u=np.tile(us, (count, 1)) if universe.p else None,
        )
        eigs = eig_sym_batch(problem.P.evaluate_batch(pts))[:, 0]
        out[start:start + count] = eigs.reshape(count, n_u).min(axis=1)
    return out


def lambda_min(problem: PmiProblem, x, u_samples: np.ndarray) -> float:
    return float(lambda_min_batch(problem, np.asarray(x, dtype=float)[None], u_samples)[0])


def membership(problem: PmiProblem, x, u_samples: np.ndarray, tol: Optional[float] = None) -> MembershipResult:
    """x is in the sampled PMI set when lambda(x) >= -tol."""
    tol = get_settings().membership_tolerance if tol is None else tol
    margin = lambda_min(problem, x, u_samples)
    return MembershipResult(inside=margin >= -tol, margin=margin)
