"""
Symmetric matrices of polynomials
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from polyalg.monomials import Universe
from polyalg.polynomial import Polynomial


class MatrixPolynomial:
    """Symmetric size x size matrix of Polynomials, upper triangle stored."""

    __slots__ = ("size", "universe", "_upper")

    def __init__(self, size: int, universe: Universe, upper: Optional[Mapping[Tuple[int, int], Polynomial]] = None):
        if size < 1:
            raise ValueError("matrix size must be positive")
        self.size = size
        self.universe = universe
        self._upper: Dict[Tuple[int, int], Polynomial] = {}
        for (i, j), entry in (upper or {}).items():
            key = (min(i, j), max(i, j))
            if entry.universe != universe:
                raise ValueError(f"entry ({i},{j}) lives in {entry.universe}, expected {universe}")
            self._upper[key] = entry

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Polynomial]]) -> "MatrixPolynomial":
        """Build from a full square array; only the upper triangle is read."""
        size = len(rows)
        universe = rows[0][0].universe
        return cls(size, universe, {(i, j): rows[i][j] for i in range(size) for j in range(i, size)})

    @classmethod
    def identity(cls, size: int, universe: Universe) -> "MatrixPolynomial":
        return cls(size, universe, {(i, i): Polynomial.constant(universe, 1.0) for i in range(size)})

    def entry(self, i: int, j: int) -> Polynomial:
        key = (i, j) if i <= j else (j, i)
        if not (0 <= key[0] and key[1] < self.size):
            raise IndexError(f"entry ({i},{j}) outside {self.size}x{self.size} matrix")
        return self._upper.get(key) or Polynomial.zero(self.universe)

    def rows(self) -> List[List[Polynomial]]:
        return [[self.entry(i, j) for j in range(self.size)] for i in range(self.size)]

    def degree(self) -> int:
        return max((p.degree() for p in self._upper.values()), default=-1)

    def evaluate(self, point) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        pt = np.asarray(point, dtype=float)
        for (i, j), entry in self._upper.items():
            val = entry.evaluate(pt)
            out[i, j] = val
            out[j, i] = val
        return out

    def evaluate_batch(self, points) -> np.ndarray:
        """Stack of evaluated matrices, shape (N, size, size)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((pts.shape[0], self.size, self.size))
        for (i, j), entry in self._upper.items():
            vals = entry.evaluate(pts)
            out[:, i, j] = vals
            out[:, j, i] = vals
        return out

    def map_entries(self, fn) -> "MatrixPolynomial":
        mapped = {key: fn(entry) for key, entry in self._upper.items()}
        universe = next(iter(mapped.values())).universe if mapped else self.universe
        return MatrixPolynomial(self.size, universe, mapped)

    def substitute(self, images: Mapping[int, Polynomial], target: Optional[Universe] = None) -> "MatrixPolynomial":
        target = target or (next(iter(images.values())).universe if images else self.universe)
        return MatrixPolynomial(
            self.size, target, {key: entry.substitute(images, target) for key, entry in self._upper.items()}
        )

    def embed(self, target: Universe, slot_map: Mapping[int, int]) -> "MatrixPolynomial":
        return MatrixPolynomial(
            self.size, target, {key: entry.embed(target, slot_map) for key, entry in self._upper.items()}
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixPolynomial) or other.size != self.size:
            return NotImplemented
        return all(
            self.entry(i, j) == other.entry(i, j) for i in range(self.size) for j in range(i, self.size)
        )

    def __repr__(self) -> str:
        return f"MatrixPolynomial(size={self.size}, universe={self.universe})"


def matpoly_eval(P: MatrixPolynomial, point) -> np.ndarray:
    return P.evaluate(point)


def quad_form(P: MatrixPolynomial) -> Polynomial:
    """v^T P v as a polynomial; P's universe must carry size v-slots."""
    universe = P.universe
    if universe.m != P.size:
        raise ValueError(f"quad_form needs {P.size} v-slots, universe has {universe.m}")
    v = [Polynomial.variable(universe, s) for s in universe.v_slots]
    total = Polynomial.zero(universe)
    for i in range(P.size):
        total = total + P.entry(i, i) * (v[i] * v[i])
        for j in range(i + 1, P.size):
            entry = P.entry(i, j)
            if not entry.is_zero():
                total = total + 2.0 * entry * (v[i] * v[j])
    return total


def hessian(g: Polynomial) -> MatrixPolynomial:
    universe = g.universe
    if not g.depends_only_on(universe.x_slots):
        raise ValueError("hessian expects a polynomial in x only")
    grads = [g.diff(s) for s in universe.x_slots]
    upper = {}
    for i, si in enumerate(universe.x_slots):
        for j in range(i, universe.n):
            upper[(i, j)] = grads[j].diff(si)
    return MatrixPolynomial(universe.n, universe, upper)
