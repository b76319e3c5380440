"""
Hermite matrices of monic polynomials for discrete-time (Schur) stability.

The monic polynomial z^n + x1 z^(n-1) + ... + xn has all roots in the open
unit disk exactly when its Hermite matrix T1^T T1 - T2^T T2 is positive
definite, where T1 and T2 are upper triangular Toeplitz matrices with first
rows (1, x1, ..., x(n-1)) and (xn, ..., x1).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np

from common.errors import DimensionError
from polyalg import MatrixPolynomial, Polynomial, Universe

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HermiteInstance:
    n: int
    P: MatrixPolynomial

    @property
    def universe(self) -> Universe:
        return self.P.universe


def _toeplitz_entries(n: int, universe: Universe):
    x = [Polynomial.variable(universe, s) for s in universe.x_slots]
    first = [Polynomial.constant(universe, 1.0)] + x[: n - 1]
    second = [x[n - 1 - k] for k in range(n)]
    zero = Polynomial.zero(universe)

    def t1(i, j):
        return first[j - i] if j >= i else zero

    def t2(i, j):
        return second[j - i] if j >= i else zero

    return t1, t2


@lru_cache(maxsize=16)
def hermite_matrix(n: int, universe: Optional[Universe] = None) -> HermiteInstance:
    """Hermite matrix in x1..xn; the default universe carries n v-slots for quadratic forms."""
    if n < 1:
        raise DimensionError(f"polynomial degree must be at least 1, got {n}")
    universe = universe or Universe(n, 0, n)
    if universe.n != n:
        raise DimensionError(f"universe has {universe.n} x-slots, Hermite matrix needs {n}")
    t1, t2 = _toeplitz_entries(n, universe)
    upper = {}
    for i in range(n):
        for j in range(i, n):
            entry = Polynomial.zero(universe)
            for k in range(i + 1):
                entry = entry + t1(k, i) * t1(k, j) - t2(k, i) * t2(k, j)
            upper[(i, j)] = entry
    return HermiteInstance(n=n, P=MatrixPolynomial(n, universe, upper))


def affine_images(
    A: Sequence[Sequence[float]],
    b: Sequence[float],
    target: Universe,
    shifts: Optional[Mapping[int, Polynomial]] = None,
) -> dict:
    """Images x_full[i] = (A x)[i] + b[i] (+ shifts[i]) as polynomials over target."""
    A = np.asarray(A, dtype=float)
    if A.shape[1] != target.n:
        raise DimensionError(f"substitution has {A.shape[1]} design variables, target universe has n={target.n}")
    xs = [Polynomial.variable(target, s) for s in target.x_slots]
    images = {}
    for i, row in enumerate(A):
        image = Polynomial.constant(target, b[i])
        for coef, x in zip(row, xs):
            if coef != 0.0:
                image = image + float(coef) * x
        if shifts and i in shifts:
            image = image + shifts[i]
        images[i] = image
    return images


def substitute_affine(
    instance: HermiteInstance,
    A: Sequence[Sequence[float]],
    b: Sequence[float],
    target: Universe,
    shifts: Optional[Mapping[int, Polynomial]] = None,
) -> MatrixPolynomial:
    """Hermite matrix of the design family x_full = A x + b (+ uncertain shifts)."""
    if len(A) != instance.n or len(b) != instance.n:
        raise DimensionError(f"substitution must produce {instance.n} coefficients")
    images = affine_images(A, b, target, shifts)
    return instance.P.substitute(images, target)


def schur_margin(coefficients: np.ndarray) -> np.ndarray:
    """Minimum Hermite eigenvalue for each row of monic-polynomial coefficients (x1..xn)."""
    coeffs = np.atleast_2d(np.asarray(coefficients, dtype=float))
    n = coeffs.shape[1]
    instance = hermite_matrix(n)
    pts = instance.universe.pack(x=coeffs)
    mats = instance.P.evaluate_batch(pts)
    return np.linalg.eigvalsh(mats)[:, 0]


def is_schur_stable(coefficients: Sequence[float], tol: float = 0.0) -> bool:
    return bool(schur_margin(np.asarray(coefficients, dtype=float))[0] > tol)
