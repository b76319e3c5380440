"""
Primal-dual interior-point solver for block SDPs with free variables.

Infeasible path following with Nesterov-Todd scaling and Mehrotra
predictor-corrector steps. Each iteration assembles the dense Schur
complement M_ij = sum_b <A_i, W_b A_j W_b> and solves the augmented system

    [ M     F  ] [dy ]   [ h   ]
    [ F^T  -dI ] [dxf] = [ r_f ]

where F holds the free-variable columns and d is a small regularization.
When the system fails to factor, d is raised by a factor 100 and M gets a
small relative diagonal shift, up to `factor_retries` times. A step that
leaves the cone is halved up to `step_backtracks` times.

Iterates are infeasible in general, so pobj >= dobj is only guaranteed once
both residuals vanish; the recorded history satisfies it up to the residual
size at every primal and dual feasible iterate.

Initial point: X_b = xi_b I and Z_b = eta_b I with
    xi_b  = max(10, sqrt(s_b), s_b * max_i (1 + |rhs_i|) / (1 + |A_i^b|_F))
    eta_b = max(10, sqrt(s_b), |C_b|_F, max_i |A_i^b|_F)
and y = 0, x_f = 0.
"""

import logging
from typing import Any, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from common.config import get_settings
from common.schemas import IterationRecord, SolverStatus
from sdpcore.problem import SdpProblem, pack

logger = logging.getLogger(__name__)
iteration_logger = logging.getLogger("sdpcore.iterations")

# Upper bound on the number of dense entries materialized per Schur chunk.
_SCHUR_CHUNK = 2_000_000


class SdpSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: SolverStatus
    primal_blocks: List[Any]
    free_values: List[Any]
    dual_vector: Any
    dual_blocks: List[Any]
    primal_objective: float
    dual_objective: float
    primal_feasibility: float
    dual_feasibility: float
    gap: float
    iterations: int
    history: List[IterationRecord] = Field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status == SolverStatus.OPTIMAL

    @property
    def residuals(self) -> Tuple[float, float, float]:
        return self.primal_feasibility, self.dual_feasibility, self.gap


class _FullBlock:
    """Constraint block in full symmetric vec form: entries (k, l) and (l, k) share half the packed weight."""

    def __init__(self, packed: sp.csr_matrix, size: int):
        self.size = size
        rows, cols = np.triu_indices(size)
        coo = packed.tocoo()
        i, j = rows[coo.col], cols[coo.col]
        diag = i == j
        values = np.where(diag, coo.data, coo.data / 2.0)
        full_rows = np.concatenate([coo.row, coo.row[~diag]])
        full_cols = np.concatenate([i * size + j, (j * size + i)[~diag]])
        full_vals = np.concatenate([values, values[~diag]])
        self.full = sp.csr_matrix((full_vals, (full_rows, full_cols)), shape=(packed.shape[0], size * size))
        self.active_rows = np.unique(coo.row)
        self.row_norms = np.sqrt(np.asarray(self.full.multiply(self.full).sum(axis=1)).ravel())

    def schur(self, W: np.ndarray, M: np.ndarray) -> None:
        """Accumulate <A_i, W A_j W> into M over the rows this block touches."""
        s = self.size
        if self.active_rows.size == 0:
            return
        step = max(1, _SCHUR_CHUNK // (s * s))
        sub = self.full[self.active_rows]
        for start in range(0, self.active_rows.size, step):
            rows = self.active_rows[start:start + step]
            dense = sub[start:start + step].toarray().reshape(-1, s, s)
            scaled = np.matmul(np.matmul(W, dense), W).reshape(len(rows), s * s)
            contrib = (sub @ scaled.T).T
            M[np.ix_(rows, self.active_rows)] += contrib


def _chol(X: np.ndarray) -> Optional[np.ndarray]:
    try:
        return np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return None


def _max_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest alpha with L L^T + alpha D PSD (infinite when D does not shrink the cone)."""
    Linv_D = sla.solve_triangular(L, D, lower=True)
    T = sla.solve_triangular(L, Linv_D.T, lower=True)
    T = (T + T.T) / 2.0
    lam = np.linalg.eigvalsh(T)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _sym(A: np.ndarray) -> np.ndarray:
    return (A + A.T) / 2.0


class InteriorPointSolver:
    """Solves one SdpProblem; instances are single-use and not shared across threads."""

    def __init__(
        self,
        problem: SdpProblem,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        verbose: bool = False,
    ):
        settings = get_settings()
        self.problem = problem
        self.tol = tol if tol is not None else settings.solver_tol
        self.max_iter = max_iter if max_iter is not None else settings.solver_max_iter
        self.step_fraction = settings.step_fraction
        self.regularization = settings.free_regularization
        self.divergence = settings.infeasibility_ratio
        self.factor_retries = settings.factor_retries
        self.step_backtracks = settings.step_backtracks
        self.verbose = verbose

        self.sizes = [block.size for block in problem.psd_blocks]
        self.blocks = [_FullBlock(A, s) for A, s in zip(problem.psd_constraints, self.sizes)]
        self.F = problem.free_matrix().toarray()
        self.c_free = problem.free_cost()
        self.C = problem.cost_matrices()
        self.b = np.asarray(problem.rhs, dtype=float)
        self.m = problem.num_rows
        self.nf = self.F.shape[1]
        self.N = sum(self.sizes)
        self.norm_b = float(np.linalg.norm(self.b))
        self.norm_C = float(np.sqrt(sum(np.sum(C * C) for C in self.C) + self.c_free @ self.c_free))

    # operators

    def _apply(self, X: List[np.ndarray], xf: np.ndarray) -> np.ndarray:
        out = self.F @ xf if self.nf else np.zeros(self.m)
        for A, Xb in zip(self.problem.psd_constraints, X):
            out = out + A @ pack(Xb)
        return out

    def _adjoint(self, y: np.ndarray) -> List[np.ndarray]:
        out = []
        for block in self.blocks:
            s = block.size
            out.append((block.full.T @ y).reshape(s, s))
        return out

    def _initial_point(self):
        X, Z = [], []
        for block, C in zip(self.blocks, self.C):
            s = block.size
            norms = block.row_norms
            ratio = np.max((1.0 + np.abs(self.b)) / (1.0 + norms)) if self.m else 1.0
            xi = max(10.0, np.sqrt(s), s * ratio)
            eta = max(10.0, np.sqrt(s), float(np.linalg.norm(C)), float(norms.max(initial=0.0)))
            X.append(xi * np.eye(s))
            Z.append(eta * np.eye(s))
        return X, np.zeros(self.nf), np.zeros(self.m), Z

    def _objectives(self, X, xf, y) -> Tuple[float, float]:
        pobj = sum(float(np.sum(C * Xb)) for C, Xb in zip(self.C, X))
        if self.nf:
            pobj += float(self.c_free @ xf)
        dobj = float(self.b @ y)
        offset = self.problem.objective_offset
        return pobj + offset, dobj + offset

    # main loop

    def solve(self) -> SdpSolution:
        X, xf, y, Z = self._initial_point()
        history: List[IterationRecord] = []
        status = SolverStatus.MAX_ITER
        step_p = step_d = 0.0
        iteration = 0
        lhs_reg = self.regularization

        while True:
            rp = self.b - self._apply(X, xf)
            ATy = self._adjoint(y)
            Rd = [C - A - Zb for C, A, Zb in zip(self.C, ATy, Z)]
            rf = self.c_free - self.F.T @ y if self.nf else np.zeros(0)
            pobj, dobj = self._objectives(X, xf, y)
            compl = sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z))
            mu = compl / self.N
            pfeas = float(np.linalg.norm(rp)) / (1.0 + self.norm_b)
            dfeas = float(np.sqrt(sum(np.sum(R * R) for R in Rd) + rf @ rf)) / (1.0 + self.norm_C)
            gap = max(compl, abs(pobj - dobj)) / (1.0 + abs(pobj) + abs(dobj))

            record = IterationRecord(
                iteration=iteration, pobj=pobj, dobj=dobj, pfeas=pfeas, dfeas=dfeas,
                gap=gap, complementarity=compl, mu=mu, step_p=step_p, step_d=step_d,
            )
            history.append(record)
            if self.verbose:
                iteration_logger.info(record.log_line())
            else:
                iteration_logger.debug(record.log_line())

            if max(pfeas, dfeas, gap) <= self.tol:
                status = SolverStatus.OPTIMAL
                break
            if dobj / (1.0 + self.norm_C) > self.divergence:
                status = SolverStatus.INFEASIBLE
                break
            if -pobj / (1.0 + self.norm_b) > self.divergence:
                status = SolverStatus.UNBOUNDED
                break
            if iteration >= self.max_iter:
                status = SolverStatus.MAX_ITER
                break
            if not np.all(np.isfinite([pobj, dobj, pfeas, dfeas])):
                status = SolverStatus.NUMERICAL_FAILURE
                break

            step = None
            for attempt in range(self.factor_retries + 1):
                reg = lhs_reg * 100.0 ** attempt
                shift = 0.0 if attempt == 0 else 1e-12 * 100.0 ** attempt
                step = self._step(X, Z, rp, Rd, rf, mu, reg, shift)
                if step is not None:
                    break
                logger.debug(f"Iteration {iteration}: KKT factorization failed (attempt {attempt + 1}, reg={reg:.1e})")
            if step is None:
                logger.warning(f"Interior-point iteration {iteration} failed to factor; stopping")
                status = SolverStatus.NUMERICAL_FAILURE
                break
            advanced = self._advance(X, Z, xf, y, step)
            if advanced is None:
                logger.warning(f"Interior-point iteration {iteration} left the cone after backtracking; stopping")
                status = SolverStatus.NUMERICAL_FAILURE
                break
            X, Z, xf, y, step_p, step_d = advanced
            iteration += 1

        logger.info(
            f"SDP finished: status={status.value} iterations={iteration} "
            f"pobj={pobj:.10g} dobj={dobj:.10g} residuals=({pfeas:.2e}, {dfeas:.2e}, {gap:.2e})"
        )
        free_values = []
        start = 0
        for block in self.problem.free_blocks:
            free_values.append(xf[start:start + block.size].copy())
            start += block.size
        return SdpSolution(
            status=status,
            primal_blocks=X,
            free_values=free_values,
            dual_vector=y,
            dual_blocks=Z,
            primal_objective=pobj,
            dual_objective=dobj,
            primal_feasibility=pfeas,
            dual_feasibility=dfeas,
            gap=gap,
            iterations=iteration,
            history=history,
        )

    def _advance(self, X, Z, xf, y, step):
        """Take the step, halving both lengths while a new iterate is not positive definite."""
        dX, dxf, dy, dZ, step_p, step_d = step
        for _ in range(self.step_backtracks + 1):
            X_new = [_sym(Xb + step_p * D) for Xb, D in zip(X, dX)]
            Z_new = [_sym(Zb + step_d * D) for Zb, D in zip(Z, dZ)]
            if all(_chol(B) is not None for B in X_new + Z_new):
                xf_new = xf + step_p * dxf if self.nf else xf
                return X_new, Z_new, xf_new, y + step_d * dy, step_p, step_d
            step_p, step_d = step_p / 2.0, step_d / 2.0
        return None

    def _step(self, X, Z, rp, Rd, rf, mu, reg, shift=0.0):
        G_list, W_list, lam_list, LX_list, LZ_list = [], [], [], [], []
        for Xb, Zb in zip(X, Z):
            LX, LZ = _chol(Xb), _chol(Zb)
            if LX is None or LZ is None:
                return None
            U, S, Vt = np.linalg.svd(LZ.T @ LX)
            G = LX @ Vt.T / np.sqrt(S)
            G_list.append(G)
            W_list.append(G @ G.T)
            lam_list.append(S)
            LX_list.append(LX)
            LZ_list.append(LZ)

        M = np.zeros((self.m, self.m))
        for block, W in zip(self.blocks, W_list):
            block.schur(W, M)
        M = _sym(M)
        if shift > 0.0 and self.m:
            M = M + shift * max(1.0, float(np.max(np.diag(M)))) * np.eye(self.m)
        if self.nf:
            kkt = np.block([[M, self.F], [self.F.T, -reg * np.eye(self.nf)]])
        else:
            kkt = M
        try:
            factor = sla.lu_factor(kkt, check_finite=True)
        except (ValueError, np.linalg.LinAlgError):
            return None

        def direction(D_list):
            K = [G @ D @ G.T for G, D in zip(G_list, D_list)]
            inner = [Kb - W @ R @ W for Kb, W, R in zip(K, W_list, Rd)]
            h = rp - self._apply(inner, np.zeros(self.nf))
            rhs = np.concatenate([h, rf]) if self.nf else h
            sol = sla.lu_solve(factor, rhs)
            dy, dxf = sol[: self.m], sol[self.m:]
            ATdy = self._adjoint(dy)
            dZ = [_sym(R - A) for R, A in zip(Rd, ATdy)]
            dX = [_sym(Kb - W @ Db @ W) for Kb, W, Db in zip(K, W_list, dZ)]
            return dX, dxf, dy, dZ

        def steps(dX, dZ):
            ap = min([_max_step(L, D) for L, D in zip(LX_list, dX)] + [np.inf])
            ad = min([_max_step(L, D) for L, D in zip(LZ_list, dZ)] + [np.inf])
            return min(1.0, self.step_fraction * ap), min(1.0, self.step_fraction * ad)

        # predictor
        pred = direction([-np.diag(lam) for lam in lam_list])
        if not all(np.all(np.isfinite(d)) for d in pred[0]):
            return None
        ap, ad = steps(pred[0], pred[3])
        compl = sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z))
        trial = sum(
            float(np.sum((Xb + ap * dX) * (Zb + ad * dZ)))
            for Xb, Zb, dX, dZ in zip(X, Z, pred[0], pred[3])
        )
        sigma = min(1.0, max(0.0, trial / compl) ** 3) if compl > 0 else 0.0

        # corrector
        D_list = []
        for G, lam, dX, dZ in zip(G_list, lam_list, pred[0], pred[3]):
            Ginv = np.linalg.inv(G)
            dX_hat = Ginv @ dX @ Ginv.T
            dZ_hat = G.T @ dZ @ G
            R = sigma * mu * np.eye(lam.size) - np.diag(lam ** 2) - _sym(dX_hat @ dZ_hat)
            D_list.append(2.0 * R / (lam[:, None] + lam[None, :]))
        dX, dxf, dy, dZ = direction(D_list)
        if not all(np.all(np.isfinite(d)) for d in dX):
            return None
        ap, ad = steps(dX, dZ)
        return dX, dxf, dy, dZ, ap, ad


def solve(
    problem: SdpProblem,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    verbose: bool = False,
) -> SdpSolution:
    """Solve a block SDP; the outcome is always a typed status, never an exception."""
    return InteriorPointSolver(problem, tol=tol, max_iter=max_iter, verbose=verbose).solve()
