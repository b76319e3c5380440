"""
Moment form of the certificate program, used to check for a duality gap.

For the SOS program  min <C,X> + c_f^T x_f  s.t.  A(X) + F x_f = b, X PSD,
the moment program is  max b^T y  s.t.  C - A^T(y) PSD, F^T y = c_f.
Here y is indexed by the reduced monomials, every C - A^T(y) block is a
moment or localizing matrix, and F^T y = c_f pins the x-moments of y to those
of the bounding set. It is rewritten in standard form with slack blocks
S_k = C_k - A_k^T(y) and solved as

    minimize  -b^T y   subject to   S_k + A_k^T(y) = C_k,  F^T y = c_f,  S_k PSD.
"""

import logging
from typing import Optional

import numpy as np

from common.config import get_settings
from common.schemas import GapReport, SolverStatus, Variant
from sdpcore import SdpBuilder, SdpProblem, solve
from sosbuild.assembly import build_inner_sdp
from sosbuild.problem import PmiProblem

logger = logging.getLogger(__name__)


def dual_program(sdp: SdpProblem) -> SdpProblem:
    """Standard-form SDP whose optimal value is minus the dual optimum of sdp."""
    builder = SdpBuilder()
    m = sdp.num_rows
    slacks = [builder.add_psd_block(f"moment:{block.label}", block.size) for block in sdp.psd_blocks]
    y_block = builder.add_free_block("y", m)
    row = 0
    for k, (block, A, c) in enumerate(zip(sdp.psd_blocks, sdp.psd_constraints, sdp.psd_objective)):
        size = block.size
        iu, ju = np.triu_indices(size)
        At = A.T.tocsr()
        c = np.asarray(c, dtype=float)
        for idx in range(block.packed_length):
            i, j = int(iu[idx]), int(ju[idx])
            half = 1.0 if i == j else 0.5
            builder.add_psd_entry(row, slacks[k], i, j, 1.0)
            start, stop = At.indptr[idx], At.indptr[idx + 1]
            for col, value in zip(At.indices[start:stop], At.data[start:stop]):
                builder.add_free_entry(row, y_block, int(col), half * float(value))
            if c[idx] != 0.0:
                builder.set_rhs(row, half * c[idx])
            row += 1
    F = sdp.free_matrix().tocsc()
    c_free = sdp.free_cost()
    for col in range(F.shape[1]):
        start, stop = F.indptr[col], F.indptr[col + 1]
        for r, value in zip(F.indices[start:stop], F.data[start:stop]):
            builder.add_free_entry(row, y_block, int(r), float(value))
        if c_free[col] != 0.0:
            builder.set_rhs(row, float(c_free[col]))
        row += 1
    b = np.asarray(sdp.rhs, dtype=float)
    for idx in np.flatnonzero(b):
        builder.add_free_objective(y_block, int(idx), -float(b[idx]))
    builder.reserve_rows(row)
    builder.offset = -sdp.objective_offset
    return builder.build()


def build_moment_sdp(problem: PmiProblem, d: int, variant: Variant = Variant.PLAIN, prev=None) -> SdpProblem:
    """Moment and localizing matrices of order d over the reduced monomial basis."""
    program = build_inner_sdp(problem, d, variant=variant, prev=prev, scale_rows=False)
    return dual_program(program.sdp)


def duality_gap(
    problem: PmiProblem,
    d: int,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> GapReport:
    """Solve the SOS program and its moment form; report the gap between integral-of-g values."""
    tol = tol if tol is not None else get_settings().solver_tol
    program = build_inner_sdp(problem, d, scale_rows=False)
    sos = solve(program.sdp, tol=tol, max_iter=max_iter)
    moment = solve(dual_program(program.sdp), tol=tol, max_iter=max_iter)
    # both programs minimize; the SOS one minimizes -integral(g), the moment one minimizes -b^T y
    sos_value = -sos.primal_objective
    moment_value = moment.primal_objective
    absolute = abs(sos_value - moment_value)
    relative = absolute / max(1.0, abs(sos_value))
    logger.info(
        f"Duality check {problem.name} d={d}: sos={sos_value:.10g} moment={moment_value:.10g} rel={relative:.2e}"
    )
    return GapReport(
        sos_objective=sos_value,
        moment_objective=moment_value,
        absolute=absolute,
        relative=relative,
        sos_status=SolverStatus(sos.status),
        moment_status=SolverStatus(moment.status),
    )
