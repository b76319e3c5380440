"""
Reflection-coefficient parametrization of the Schur stability region
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from common.errors import DimensionError
from polyalg import Polynomial, Universe, poly_det


@dataclass(frozen=True)
class ReflectionMap:
    """Multiaffine map k -> x from the unit box onto the stable monic polynomials of degree n."""

    n: int
    components: Tuple[Polynomial, ...]
    jacobian_det: Polynomial

    @property
    def universe(self) -> Universe:
        return self.jacobian_det.universe

    def evaluate(self, k) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(k, dtype=float))
        out = np.column_stack([c.evaluate(pts) for c in self.components])
        return out[0] if np.asarray(k).ndim == 1 else out

    def jacobian(self) -> List[List[Polynomial]]:
        return [[c.diff(s) for s in range(self.n)] for c in self.components]


@lru_cache(maxsize=16)
def reflection_map(n: int) -> ReflectionMap:
    """Cascade a_i <- a_i + k_j a_(j-i), j = 1..n, starting from the constant polynomial 1."""
    if n < 1:
        raise DimensionError(f"reflection map needs n >= 1, got {n}")
    universe = Universe(n)
    k = [Polynomial.variable(universe, s) for s in range(n)]
    coeffs = [Polynomial.constant(universe, 1.0)]
    for j in range(1, n + 1):
        prev = coeffs + [Polynomial.zero(universe)]
        coeffs = [prev[0]] + [prev[i] + k[j - 1] * prev[j - i] for i in range(1, j + 1)]
    components = tuple(coeffs[1:])
    det = poly_det([[c.diff(s) for s in range(n)] for c in components])
    return ReflectionMap(n=n, components=components, jacobian_det=det)
