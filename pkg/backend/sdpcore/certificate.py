"""
Independent residual checks and free-variable elimination
"""

import logging
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from common.schemas import ResidualReport
from sdpcore.problem import SdpProblem, pack
from sdpcore.solver import SdpSolution

logger = logging.getLogger(__name__)


def check_certificate(problem: SdpProblem, solution: SdpSolution) -> ResidualReport:
    """Recompute primal, dual and gap residuals from the problem data alone."""
    X = [np.asarray(Xb, dtype=float) for Xb in solution.primal_blocks]
    xf = [np.asarray(x, dtype=float) for x in solution.free_values]
    y = np.asarray(solution.dual_vector, dtype=float)
    Z = [np.asarray(Zb, dtype=float) for Zb in solution.dual_blocks]
    b = np.asarray(problem.rhs, dtype=float)

    primal = float(np.linalg.norm(b - problem.apply(X, xf)))

    C = problem.cost_matrices()
    ATy, FTy = problem.adjoint(y)
    dual_sq = sum(float(np.sum((Cb - A - Zb) ** 2)) for Cb, A, Zb in zip(C, ATy, Z))
    dual_sq += sum(float(np.sum((np.asarray(c) - f) ** 2)) for c, f in zip(problem.free_objective, FTy))
    dual = float(np.sqrt(dual_sq))
    norm_C = float(np.sqrt(sum(np.sum(Cb * Cb) for Cb in C) + sum(np.sum(np.asarray(c) ** 2) for c in problem.free_objective)))

    pobj = problem.objective(X, xf)
    dobj = float(b @ y) + problem.objective_offset
    gap = abs(pobj - dobj)

    def min_eig(blocks):
        return min((float(np.linalg.eigvalsh((B + B.T) / 2.0)[0]) for B in blocks), default=np.inf)

    return ResidualReport(
        primal_abs=primal,
        primal_rel=primal / (1.0 + float(np.linalg.norm(b))),
        dual_abs=dual,
        dual_rel=dual / (1.0 + norm_C),
        gap_abs=gap,
        gap_rel=gap / (1.0 + abs(pobj) + abs(dobj)),
        min_eig_primal=min_eig(X),
        min_eig_dual=min_eig(Z),
    )


def eliminate_free(problem: SdpProblem, rank_tol: float = 1e-10) -> Tuple[SdpProblem, np.ndarray]:
    """
    Remove free blocks by projecting the equalities onto the left nullspace of F.

    With F = U S V^T, the reduced equalities are U_2^T A(X) = U_2^T b and the free
    cost c_f^T x_f becomes <C - A^T(w), X> + w^T b with w = U_1 S^-1 V_1^T c_f.
    Returns the reduced problem and w.
    """
    if not problem.free_blocks:
        return problem, np.zeros(problem.num_rows)
    F = problem.free_matrix().toarray()
    c_free = problem.free_cost()
    b = np.asarray(problem.rhs, dtype=float)
    U, S, Vt = np.linalg.svd(F, full_matrices=True)
    rank = int(np.sum(S > rank_tol * max(1.0, S[0] if S.size else 1.0)))
    U1, U2 = U[:, :rank], U[:, rank:]
    w = U1 @ ((Vt[:rank] @ c_free) / S[:rank])
    residual = c_free - F.T @ w
    if np.linalg.norm(residual) > 1e-8 * (1.0 + np.linalg.norm(c_free)):
        logger.warning("Free cost is not in the row space of F; the original problem is unbounded below")

    psd_constraints = [sp.csr_matrix(U2.T @ A.toarray()) for A in problem.psd_constraints]
    psd_objective = [np.asarray(c, dtype=float) - A.T @ w for c, A in zip(problem.psd_objective, problem.psd_constraints)]
    reduced = SdpProblem(
        psd_blocks=list(problem.psd_blocks),
        psd_constraints=psd_constraints,
        rhs=U2.T @ b,
        psd_objective=psd_objective,
        objective_offset=problem.objective_offset + float(w @ b),
    )
    logger.debug(f"Eliminated {F.shape[1]} free variables (rank {rank}): {reduced.describe()}")
    return reduced, w


def recover_free(problem: SdpProblem, X_blocks, rank_tol: float = 1e-10):
    """Least-squares free values for given PSD blocks: F x_f = b - A(X)."""
    F = problem.free_matrix().toarray()
    b = np.asarray(problem.rhs, dtype=float)
    residual = b - sum((A @ pack(Xb) for A, Xb in zip(problem.psd_constraints, X_blocks)), np.zeros_like(b))
    xf, *_ = np.linalg.lstsq(F, residual, rcond=rank_tol)
    return xf
