"""
Closed-form Lebesgue moments of boxes, balls and simplices
"""

import itertools
import math
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from common.errors import DegenerateSimplexError, DimensionError
from polyalg import Polynomial, Universe


def _check_alpha(alpha: Sequence[int], n: int) -> Tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise DimensionError(f"multi-index {alpha} does not match dimension {n}")
    if any(a < 0 for a in alpha):
        raise DimensionError(f"multi-index {alpha} has a negative entry")
    return alpha


def interval_moment(lo: float, hi: float, a: int) -> float:
    """Integral of t^a over [lo, hi]."""
    return (hi ** (a + 1) - lo ** (a + 1)) / (a + 1)


def box_moments(bounds: Sequence[Tuple[float, float]], alpha: Sequence[int]) -> float:
    alpha = _check_alpha(alpha, len(bounds))
    value = 1.0
    for (lo, hi), a in zip(bounds, alpha):
        if lo >= hi:
            raise DimensionError(f"empty interval [{lo}, {hi}]")
        value *= interval_moment(lo, hi, a)
    return value


def centered_ball_moment(n: int, radius: float, beta: Sequence[int]) -> float:
    """Moment of the radius-r ball at the origin; zero unless every exponent is even."""
    if any(b % 2 for b in beta):
        return 0.0
    total = sum(beta)
    log_value = sum(gammaln((b + 1) / 2.0) for b in beta) - gammaln(1.0 + (n + total) / 2.0)
    return math.exp(log_value) * radius ** (n + total)


def ball_moments(n: int, radius: float, alpha: Sequence[int], center: Sequence[float] = None) -> float:
    alpha = _check_alpha(alpha, n)
    if radius <= 0:
        raise DimensionError(f"ball radius must be positive, got {radius}")
    if center is None or not any(center):
        return centered_ball_moment(n, radius, alpha)
    if len(center) != n:
        raise DimensionError(f"center has {len(center)} coordinates, ball has dimension {n}")
    # x = c + y with y in the centered ball
    total = 0.0
    for beta in itertools.product(*(range(0, a + 1, 1) for a in alpha)):
        base = centered_ball_moment(n, radius, beta)
        if base == 0.0:
            continue
        weight = 1.0
        for a, b, c in zip(alpha, beta, center):
            weight *= math.comb(a, b) * c ** (a - b)
        total += weight * base
    return total


def simplex_geometry(vertices: Sequence[Sequence[float]]) -> Tuple[np.ndarray, float]:
    """Vertex array and volume; raises when the vertices are affinely dependent."""
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[0] != verts.shape[1] + 1:
        raise DimensionError(f"a simplex in R^n needs n+1 vertices, got array of shape {verts.shape}")
    n = verts.shape[1]
    edges = verts[1:] - verts[0]
    if np.linalg.matrix_rank(edges) < n:
        raise DegenerateSimplexError(f"simplex vertices {verts.tolist()} are affinely dependent")
    volume = abs(np.linalg.det(edges)) / math.factorial(n)
    return verts, float(volume)


def dirichlet_weight(n: int, gamma: Sequence[int]) -> float:
    """n! * prod(gamma_j!) / (n + |gamma|)!, the barycentric monomial integral over a unit-volume simplex."""
    numerator = math.factorial(n)
    for g in gamma:
        numerator *= math.factorial(g)
    return numerator / math.factorial(n + sum(gamma))


def simplex_moments(vertices: Sequence[Sequence[float]], alpha: Sequence[int]) -> float:
    verts, volume = simplex_geometry(vertices)
    n = verts.shape[1]
    alpha = _check_alpha(alpha, n)
    bary = Universe(n + 1)
    # coordinate i as a linear form in the barycentric weights
    forms = [
        Polynomial(bary, {tuple(1 if s == j else 0 for s in range(n + 1)): verts[j, i] for j in range(n + 1)})
        for i in range(n)
    ]
    integrand = Polynomial.constant(bary, 1.0)
    for form, a in zip(forms, alpha):
        if a:
            integrand = integrand * form ** a
    total = 0.0
    for gamma, coef in integrand.terms.items():
        total += coef * dirichlet_weight(n, gamma)
    return volume * total


def integrate_over_unit_box(p: Polynomial, slots: Sequence[int]) -> float:
    """Integral of p over [-1, 1] in each of the given slots; p must not use other slots."""
    slots = tuple(slots)
    if not p.depends_only_on(slots):
        raise DimensionError("integrand uses slots outside the integration box")
    cache: Dict[int, float] = {}

    def unit(e: int) -> float:
        if e not in cache:
            cache[e] = 0.0 if e % 2 else 2.0 / (e + 1)
        return cache[e]

    total = 0.0
    for mono, coef in p.terms.items():
        weight = coef
        for s in slots:
            weight *= unit(mono[s])
            if weight == 0.0:
                break
        total += weight
    return total
