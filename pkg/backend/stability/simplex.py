"""
Stability simplex and its affine sections
"""

import itertools
import logging
from typing import List, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from common.errors import DimensionError, InfeasibleSectionError
from moments import MomentSource, SimplexSource, source_from_vertices

logger = logging.getLogger(__name__)

_FEASIBILITY_TOL = 1e-10


def stable_simplex_vertices(n: int) -> List[List[float]]:
    """Coefficients (x1..xn) of (z-1)^j (z+1)^(n-j) for j = n down to 0."""
    if n < 1:
        raise DimensionError(f"stability simplex needs n >= 1, got {n}")
    vertices = []
    for j in range(n, -1, -1):
        # numpy stores ascending powers; reverse to get the monic-first order
        ascending = npoly.polymul(npoly.polypow([-1.0, 1.0], j), npoly.polypow([1.0, 1.0], n - j))
        descending = ascending[::-1]
        vertices.append([float(c) for c in descending[1:]])
    return vertices


def section_bounding_simplex(
    n: int,
    A: Sequence[Sequence[float]],
    b: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Vertices of {x : A x + b lies in the stability simplex}.

    The stability simplex is an intersection of n+1 half-spaces (its barycentric
    coordinates are nonnegative), so the section is a polytope in design space
    whose vertices are the feasible solutions of q active constraints. Two-dimensional
    sections are returned in counter-clockwise order.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != n:
        raise DimensionError(f"substitution matrix must have {n} rows, got shape {A.shape}")
    q = A.shape[1]
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
    if np.linalg.matrix_rank(A) < q:
        raise DimensionError("substitution matrix must have full column rank")

    hull = SimplexSource(vertices=stable_simplex_vertices(n))
    bary = hull.barycentric_map
    # barycentric coordinate j of A x + b is G[j] . x + h[j]
    G = bary[:, :n] @ A
    h = bary[:, :n] @ b + bary[:, n]

    found: List[np.ndarray] = []
    for active in itertools.combinations(range(n + 1), q):
        lhs = G[list(active)]
        if np.linalg.matrix_rank(lhs) < q:
            continue
        point = np.linalg.solve(lhs, -h[list(active)])
        if np.all(G @ point + h >= -_FEASIBILITY_TOL) and not any(np.allclose(point, f, atol=1e-9) for f in found):
            found.append(point)
    if len(found) <= q:
        raise InfeasibleSectionError(f"affine section of the degree-{n} stability simplex has no interior")
    verts = np.array(found)
    if q == 2:
        centre = verts.mean(axis=0)
        angles = np.arctan2(verts[:, 1] - centre[1], verts[:, 0] - centre[0])
        verts = verts[np.argsort(angles)]
    logger.debug(f"Section of degree-{n} stability simplex has {len(verts)} vertices")
    return verts


def section_source(n: int, A: Sequence[Sequence[float]], b: Optional[Sequence[float]] = None) -> MomentSource:
    """MomentSource of the design-space section of the stability simplex."""
    return source_from_vertices(section_bounding_simplex(n, A, b).tolist())
