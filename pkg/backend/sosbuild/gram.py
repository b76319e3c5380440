"""
Gram-matrix parametrization of SOS multipliers
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from polyalg import Monomial, Polynomial, Universe, enum_monomials


@dataclass
class GramBlock:
    """SOS multiplier sigma = b^T G b (b the basis) attached to a weight polynomial in one identity."""

    label: str
    group: str
    universe: Universe
    basis: List[Monomial]
    weight: Polynomial
    sign: float = 1.0
    _exps: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.basis)

    def basis_values(self, points: np.ndarray) -> np.ndarray:
        """Basis monomials evaluated at points, shape (N, size)."""
        if self._exps is None:
            self._exps = np.array([list(m) for m in self.basis], dtype=float)
        pts = np.atleast_2d(points)
        return np.prod(pts[:, None, :] ** self._exps[None, :, :], axis=2)

    def sos_values(self, gram: np.ndarray, points: np.ndarray) -> np.ndarray:
        vals = self.basis_values(points)
        return np.einsum("ni,ij,nj->n", vals, gram, vals)

    def term_values(self, gram: np.ndarray, points: np.ndarray) -> np.ndarray:
        """sign * weight * sigma at points."""
        return self.sign * self.weight.evaluate(np.atleast_2d(points)) * self.sos_values(gram, points)

    def sos_polynomial(self, gram: np.ndarray) -> Polynomial:
        terms: Dict[Monomial, float] = {}
        for i, bi in enumerate(self.basis):
            for j, bj in enumerate(self.basis):
                if gram[i, j] == 0.0:
                    continue
                key = bi.times(bj)
                terms[key] = terms.get(key, 0.0) + gram[i, j]
        return Polynomial(self.universe, terms)


def gram_bases(universe: Universe, var_mask: str, half_degree: int) -> List[Tuple[str, List[Monomial]]]:
    """
    Gram bases of the given half-degree, with v_m-exponent at most 1 and split by
    the parity of the total v-degree (cross-parity products vanish under v -> -v).
    """
    if half_degree < 0:
        return []
    monos = enum_monomials(universe, var_mask, half_degree)
    v_slots = list(universe.v_slots)
    if not v_slots or "v" not in var_mask:
        return [("", monos)]
    last = v_slots[-1]
    monos = [m for m in monos if m[last] <= 1]
    even = [m for m in monos if sum(m[s] for s in v_slots) % 2 == 0]
    odd = [m for m in monos if sum(m[s] for s in v_slots) % 2 == 1]
    return [(suffix, part) for suffix, part in ((":even", even), (":odd", odd)) if part]
