"""
Sparse multivariate polynomials over a fixed variable universe
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from polyalg.monomials import Monomial, Universe, one

Number = Union[int, float]

# Bound on points * terms * variables held in memory by one batched evaluation.
_EVAL_CHUNK = 4_000_000


class Polynomial:
    """Immutable map Monomial -> float coefficient; exact zeros are never stored."""

    __slots__ = ("universe", "_terms", "_arrays")

    def __init__(self, universe: Universe, terms: Optional[Mapping[Sequence[int], Number]] = None):
        self.universe = universe
        clean: Dict[Monomial, float] = {}
        for mono, coef in (terms or {}).items():
            c = float(coef)
            if c == 0.0:
                continue
            key = mono if isinstance(mono, Monomial) else Monomial(mono)
            if len(key) != universe.nvars:
                raise ValueError(f"monomial {tuple(key)} does not fit universe {universe}")
            clean[key] = clean.get(key, 0.0) + c
        self._terms = {k: v for k, v in clean.items() if v != 0.0}
        self._arrays = None

    # construction helpers

    @classmethod
    def _raw(cls, universe: Universe, terms: Dict[Monomial, float]) -> "Polynomial":
        obj = cls.__new__(cls)
        obj.universe = universe
        obj._terms = {k: v for k, v in terms.items() if v != 0.0}
        obj._arrays = None
        return obj

    @classmethod
    def zero(cls, universe: Universe) -> "Polynomial":
        return cls._raw(universe, {})

    @classmethod
    def constant(cls, universe: Universe, value: Number) -> "Polynomial":
        return cls._raw(universe, {one(universe): float(value)})

    @classmethod
    def variable(cls, universe: Universe, slot: int) -> "Polynomial":
        exps = [0] * universe.nvars
        exps[slot] = 1
        return cls._raw(universe, {Monomial(exps): 1.0})

    @classmethod
    def monomial(cls, universe: Universe, mono: Sequence[int], coef: Number = 1.0) -> "Polynomial":
        return cls(universe, {Monomial(mono): coef})

    # inspection

    @property
    def terms(self) -> Mapping[Monomial, float]:
        return dict(self._terms)

    def sorted_terms(self) -> List[Tuple[Monomial, float]]:
        return sorted(self._terms.items(), key=lambda item: item[0].sort_key())

    def coefficient(self, mono: Sequence[int]) -> float:
        return self._terms.get(Monomial(mono), 0.0)

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(m.degree for m in self._terms)

    def degree_in(self, slots: Iterable[int]) -> int:
        slots = tuple(slots)
        if not self._terms:
            return -1
        return max(sum(m[s] for s in slots) for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def depends_only_on(self, slots: Iterable[int]) -> bool:
        allowed = set(slots)
        return all(e == 0 or i in allowed for m in self._terms for i, e in enumerate(m))

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def __len__(self) -> int:
        return len(self._terms)

    # arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.universe != self.universe:
                raise ValueError(f"universe mismatch: {self.universe} vs {other.universe}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self.universe, float(other))
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for mono, coef in other._terms.items():
            out[mono] = out.get(mono, 0.0) + coef
        return Polynomial._raw(self.universe, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.universe, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float, np.floating, np.integer)):
            scale = float(other)
            return Polynomial._raw(self.universe, {m: c * scale for m, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[Monomial, float] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                key = ma.times(mb)
                out[key] = out.get(key, 0.0) + ca * cb
        return Polynomial._raw(self.universe, out)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number) -> "Polynomial":
        return self * (1.0 / float(scalar))

    def __pow__(self, power: int) -> "Polynomial":
        if power < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(self.universe, 1.0)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.universe, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.universe == other.universe and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.universe, frozenset(self._terms.items())))

    def almost_equal(self, other: "Polynomial", tol: float = 1e-12) -> bool:
        diff = self - other
        return diff.max_abs_coefficient() <= tol

    # calculus and substitution

    def diff(self, slot: int) -> "Polynomial":
        out: Dict[Monomial, float] = {}
        for mono, coef in self._terms.items():
            e = mono[slot]
            if e == 0:
                continue
            exps = list(mono)
            exps[slot] = e - 1
            key = Monomial(exps)
            out[key] = out.get(key, 0.0) + coef * e
        return Polynomial._raw(self.universe, out)

    def embed(self, target: Universe, slot_map: Mapping[int, int]) -> "Polynomial":
        """Re-index into another universe; every used slot must be mapped."""
        out: Dict[Monomial, float] = {}
        for mono, coef in self._terms.items():
            exps = [0] * target.nvars
            for slot, e in enumerate(mono):
                if e == 0:
                    continue
                if slot not in slot_map:
                    raise ValueError(f"slot {slot} is used but not mapped into {target}")
                exps[slot_map[slot]] += e
            key = Monomial(exps)
            out[key] = out.get(key, 0.0) + coef
        return Polynomial._raw(target, out)

    def substitute(self, images: Mapping[int, "Polynomial"], target: Optional[Universe] = None) -> "Polynomial":
        """Compose with polynomial images for the given slots; unmapped slots must be unused."""
        if target is None:
            target = next(iter(images.values())).universe if images else self.universe
        powers: Dict[Tuple[int, int], Polynomial] = {}

        def power(slot: int, e: int) -> Polynomial:
            key = (slot, e)
            if key not in powers:
                powers[key] = images[slot] if e == 1 else power(slot, e - 1) * images[slot]
            return powers[key]

        result = Polynomial.zero(target)
        for mono, coef in self._terms.items():
            term = Polynomial.constant(target, coef)
            for slot, e in enumerate(mono):
                if e == 0:
                    continue
                if slot not in images:
                    raise ValueError(f"slot {slot} has no image in substitution")
                term = term * power(slot, e)
            result = result + term
        return result

    def cleaned(self, tol: float = 1e-12) -> "Polynomial":
        return Polynomial._raw(self.universe, {m: c for m, c in self._terms.items() if abs(c) > tol})

    # evaluation

    def _term_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._arrays is None:
            ordered = self.sorted_terms()
            exps = np.array([list(m) for m, _ in ordered], dtype=float).reshape(len(ordered), self.universe.nvars)
            coefs = np.array([c for _, c in ordered], dtype=float)
            self._arrays = (exps, coefs)
        return self._arrays

    def evaluate(self, point) -> Union[float, np.ndarray]:
        """Direct term sum at one point (vector) or a batch (N x nvars array)."""
        pts = np.asarray(point, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.universe.nvars:
            raise ValueError(f"point has {pts.shape[1]} coordinates, universe needs {self.universe.nvars}")
        exps, coefs = self._term_arrays()
        if coefs.size == 0:
            values = np.zeros(pts.shape[0])
        else:
            step = max(1, _EVAL_CHUNK // max(1, coefs.size * max(1, self.universe.nvars)))
            chunks = []
            for start in range(0, pts.shape[0], step):
                block = pts[start:start + step]
                powered = np.prod(block[:, None, :] ** exps[None, :, :], axis=2)
                chunks.append(powered @ coefs)
            values = np.concatenate(chunks)
        return float(values[0]) if single else values

    def __call__(self, point):
        return self.evaluate(point)

    def __repr__(self) -> str:
        from polyalg.textio import format_polynomial

        return f"Polynomial({format_polynomial(self)!r})"


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_eval(p: Polynomial, point) -> Union[float, np.ndarray]:
    return p.evaluate(point)


def poly_det(rows: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Determinant of a square array of polynomials by cofactor expansion along the first row."""
    size = len(rows)
    if size == 0:
        raise ValueError("empty matrix")
    if any(len(r) != size for r in rows):
        raise ValueError("determinant needs a square matrix")
    if size == 1:
        return rows[0][0]
    universe = rows[0][0].universe
    total = Polynomial.zero(universe)
    for col in range(size):
        entry = rows[0][col]
        if entry.is_zero():
            continue
        minor = [[r[c] for c in range(size) if c != col] for r in rows[1:]]
        sign = -1.0 if col % 2 else 1.0
        total = total + sign * entry * poly_det(minor)
    return total


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)
