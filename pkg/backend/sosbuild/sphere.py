"""
Reduction modulo the unit-sphere ideal (1 - v^T v).

Every monomial is rewritten so the last sphere variable v_m appears with
exponent 0 or 1, using v_m^2 = 1 - sum_{j<m} v_j^2.
"""

from functools import lru_cache
from typing import Dict, Tuple

from polyalg import Monomial, Polynomial, Universe


def _require_sphere(universe: Universe) -> None:
    if universe.m < 1:
        raise ValueError(f"sphere reduction needs at least one v-slot, universe is {universe}")


@lru_cache(maxsize=64)
def _residual_power(universe: Universe, power: int) -> Tuple[Tuple[Monomial, float], ...]:
    """Terms of (1 - sum_{j<m} v_j^2)^power."""
    base = Polynomial.constant(universe, 1.0)
    for slot in list(universe.v_slots)[:-1]:
        base = base - Polynomial.variable(universe, slot) ** 2
    return tuple((base ** power).terms.items())


@lru_cache(maxsize=200_000)
def reduce_monomial(universe: Universe, mono: Monomial) -> Tuple[Tuple[Monomial, float], ...]:
    """Reduced form of one monomial as (monomial, coefficient) pairs."""
    last = universe.nvars - 1
    e = mono[last]
    if e < 2:
        return ((mono, 1.0),)
    keep = list(mono)
    keep[last] = e % 2
    stem = Monomial(keep)
    return tuple((stem.times(m), c) for m, c in _residual_power(universe, e // 2))


def sphere_reduce(p: Polynomial) -> Polynomial:
    """Normal form of p modulo (1 - v^T v): no term has v_m-exponent above 1."""
    universe = p.universe
    _require_sphere(universe)
    out: Dict[Monomial, float] = {}
    for mono, coef in p.terms.items():
        for reduced, weight in reduce_monomial(universe, mono):
            out[reduced] = out.get(reduced, 0.0) + coef * weight
    return Polynomial(universe, out)


def sphere_divide(p: Polynomial) -> Tuple[Polynomial, Polynomial]:
    """Quotient q and remainder r with p = q * (1 - v^T v) + r and r = sphere_reduce(p)."""
    universe = p.universe
    _require_sphere(universe)
    last = universe.nvars - 1
    v = [Polynomial.variable(universe, s) for s in universe.v_slots]
    rest = Polynomial.constant(universe, 1.0)
    for vj in v[:-1]:
        rest = rest - vj * vj

    quotient = Polynomial.zero(universe)
    work = p
    while True:
        low: Dict[Monomial, float] = {}
        shifted: Dict[Monomial, float] = {}
        for mono, coef in work.terms.items():
            if mono[last] >= 2:
                exps = list(mono)
                exps[last] -= 2
                key = Monomial(exps)
                shifted[key] = shifted.get(key, 0.0) + coef
            else:
                low[mono] = low.get(mono, 0.0) + coef
        if not shifted:
            return quotient, work
        high = Polynomial(universe, shifted)
        # high * v_m^2 = high * rest - high * (1 - v^T v)
        work = Polynomial(universe, low) + high * rest
        quotient = quotient - high
