"""
Cyclic Jacobi eigenvalues for stacks of small symmetric matrices
"""

import logging

import numpy as np

from common.errors import AsymmetricMatrixError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
OFF_DIAGONAL_TOL = 1e-12
MAX_SWEEPS = 60


def _check_symmetric(stack: np.ndarray) -> None:
    scale = np.maximum(1.0, np.abs(stack).max(axis=(1, 2)))
    skew = np.abs(stack - np.swapaxes(stack, 1, 2)).max(axis=(1, 2))
    if np.any(skew > SYMMETRY_TOL * scale):
        worst = int(np.argmax(skew / scale))
        raise AsymmetricMatrixError(f"matrix {worst} is not symmetric (max |M - M^T| = {skew[worst]:.3e})")


def eig_sym_batch(matrices) -> np.ndarray:
    """Ascending eigenvalues of each matrix in an (N, s, s) stack by cyclic Jacobi rotations."""
    A = np.array(matrices, dtype=float)
    if A.ndim == 2:
        A = A[None]
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {A.shape}")
    _check_symmetric(A)
    A = (A + np.swapaxes(A, 1, 2)) / 2.0
    count, size = A.shape[0], A.shape[1]
    if size == 1:
        return A[:, :, 0].copy()
    norms = np.maximum(1.0, np.sqrt((A * A).sum(axis=(1, 2))))
    off_mask = ~np.eye(size, dtype=bool)
    pairs = [(k, l) for k in range(size - 1) for l in range(k + 1, size)]

    for sweep in range(MAX_SWEEPS):
        off = np.sqrt((A[:, off_mask] ** 2).sum(axis=1))
        active = off > OFF_DIAGONAL_TOL * norms
        if not active.any():
            break
        for k, l in pairs:
            akl = A[:, k, l]
            rotate = active & (np.abs(akl) > 0.0)
            if not rotate.any():
                continue
            safe = np.where(rotate, akl, 1.0)
            theta = (A[:, l, l] - A[:, k, k]) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(rotate, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c3, s3 = c[:, None], s[:, None]
            # columns k, l
            col_k, col_l = A[:, :, k].copy(), A[:, :, l].copy()
            A[:, :, k] = c3 * col_k - s3 * col_l
            A[:, :, l] = s3 * col_k + c3 * col_l
            # rows k, l
            row_k, row_l = A[:, k, :].copy(), A[:, l, :].copy()
            A[:, k, :] = c3 * row_k - s3 * row_l
            A[:, l, :] = s3 * row_k + c3 * row_l
            A[rotate, k, l] = 0.0
            A[rotate, l, k] = 0.0
    else:
        logger.warning(f"Jacobi iteration reached {MAX_SWEEPS} sweeps on a stack of {count} matrices")
    return np.sort(np.diagonal(A, axis1=1, axis2=2), axis=1)


def eig_sym(matrix) -> np.ndarray:
    """Ascending eigenvalues of one symmetric matrix."""
    return eig_sym_batch(np.asarray(matrix, dtype=float)[None])[0]
