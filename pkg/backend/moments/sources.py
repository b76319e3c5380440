"""
Moment sources: a uniform interface over the supported bounding sets
"""

import logging
import threading
from abc import ABC, abstractmethod
from typing import ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator
from scipy.spatial import ConvexHull, Delaunay

from common.config import get_settings
from common.errors import DegenerateSimplexError, DimensionError
from common.schemas import BoundingKind
from moments.formulas import (
    ball_moments,
    box_moments,
    integrate_over_unit_box,
    simplex_geometry,
    simplex_moments,
)
from polyalg import Polynomial, Universe

logger = logging.getLogger(__name__)


class MomentSource(BaseModel, ABC):
    """Lebesgue moments y_alpha of a compact bounding set B, memoized per alpha."""

    model_config = ConfigDict(frozen=True)

    kind: ClassVar[BoundingKind]

    _cache: Dict[Tuple[int, ...], float] = PrivateAttr(default_factory=dict)
    _lock: threading.Lock = PrivateAttr(default_factory=threading.Lock)

    @property
    @abstractmethod
    def dimension(self) -> int: ...

    @abstractmethod
    def _compute(self, alpha: Tuple[int, ...]) -> float: ...

    @abstractmethod
    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples from B, shape (count, n)."""

    @abstractmethod
    def constraints(self, universe: Universe) -> List[Polynomial]:
        """Polynomials b_j >= 0 describing B, embedded on the x-slots of universe."""

    @abstractmethod
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def contains(self, points: np.ndarray) -> np.ndarray: ...

    def get(self, alpha: Sequence[int]) -> float:
        key = tuple(int(a) for a in alpha)
        if len(key) != self.dimension:
            raise DimensionError(f"multi-index {key} does not match dimension {self.dimension}")
        if get_settings().moment_cache == "off":
            return self._compute(key)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        value = self._compute(key)
        with self._lock:
            self._cache.setdefault(key, value)
        return value

    @property
    def volume(self) -> float:
        return self.get((0,) * self.dimension)

    def outer_radius(self) -> float:
        """Radius of a ball at the origin containing B."""
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))

    def x_variables(self, universe: Universe) -> List[Polynomial]:
        if universe.n != self.dimension:
            raise DimensionError(f"moment source has dimension {self.dimension}, universe has n={universe.n}")
        return [Polynomial.variable(universe, s) for s in universe.x_slots]


class BoxSource(MomentSource):
    kind: ClassVar[BoundingKind] = BoundingKind.BOX

    bounds: List[Tuple[float, float]] = Field(min_length=1)

    @field_validator("bounds")
    @classmethod
    def check_bounds(cls, value):
        for lo, hi in value:
            if not lo < hi:
                raise ValueError(f"box interval [{lo}, {hi}] is empty")
        return value

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def _compute(self, alpha):
        return box_moments(self.bounds, alpha)

    def sample(self, count, rng):
        lo, hi = self.bounding_box()
        return rng.uniform(lo, hi, size=(count, self.dimension))

    def constraints(self, universe):
        xs = self.x_variables(universe)
        return [(x - lo) * (hi - x) for x, (lo, hi) in zip(xs, self.bounds)]

    def bounding_box(self):
        arr = np.asarray(self.bounds, dtype=float)
        return arr[:, 0], arr[:, 1]

    def contains(self, points):
        pts = np.atleast_2d(points)
        lo, hi = self.bounding_box()
        return np.all((pts >= lo) & (pts <= hi), axis=1)


class BallSource(MomentSource):
    kind: ClassVar[BoundingKind] = BoundingKind.BALL

    center: List[float] = Field(min_length=1)
    radius: float = Field(gt=0)

    @property
    def dimension(self) -> int:
        return len(self.center)

    def _compute(self, alpha):
        return ball_moments(self.dimension, self.radius, alpha, self.center)

    def sample(self, count, rng):
        n = self.dimension
        directions = rng.standard_normal((count, n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = self.radius * rng.random(count) ** (1.0 / n)
        return np.asarray(self.center) + directions * radii[:, None]

    def constraints(self, universe):
        xs = self.x_variables(universe)
        b = Polynomial.constant(universe, self.radius ** 2)
        for x, c in zip(xs, self.center):
            b = b - (x - c) ** 2
        return [b]

    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def outer_radius(self):
        return float(np.linalg.norm(self.center)) + self.radius

    def contains(self, points):
        pts = np.atleast_2d(points)
        return np.linalg.norm(pts - np.asarray(self.center), axis=1) <= self.radius


class SimplexSource(MomentSource):
    kind: ClassVar[BoundingKind] = BoundingKind.SIMPLEX

    vertices: List[List[float]]

    _verts: np.ndarray = PrivateAttr(default=None)
    _barycentric: np.ndarray = PrivateAttr(default=None)

    def model_post_init(self, __context) -> None:
        verts, _ = simplex_geometry(self.vertices)
        n = verts.shape[1]
        lifted = np.vstack([verts.T, np.ones(n + 1)])
        # row j maps (x, 1) to the j-th barycentric coordinate
        self._barycentric = np.linalg.inv(lifted)
        self._verts = verts

    @property
    def dimension(self) -> int:
        return len(self.vertices[0])

    def _compute(self, alpha):
        return simplex_moments(self._verts, alpha)

    @property
    def barycentric_map(self) -> np.ndarray:
        """Matrix taking (x, 1) to barycentric coordinates, one row per vertex."""
        return self._barycentric.copy()

    def barycentric(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        lifted = np.hstack([pts, np.ones((pts.shape[0], 1))])
        return lifted @ self._barycentric.T

    def sample(self, count, rng):
        weights = rng.dirichlet(np.ones(self.dimension + 1), size=count)
        return weights @ self._verts

    def constraints(self, universe):
        xs = self.x_variables(universe)
        out = []
        for row in self._barycentric:
            form = Polynomial.constant(universe, row[-1])
            for x, w in zip(xs, row[:-1]):
                form = form + w * x
            out.append(form)
        return out

    def bounding_box(self):
        return self._verts.min(axis=0), self._verts.max(axis=0)

    def outer_radius(self):
        return float(np.max(np.linalg.norm(self._verts, axis=1)))

    def contains(self, points):
        return np.all(self.barycentric(points) >= -1e-12, axis=1)


class PolytopeSource(MomentSource):
    """Convex hull of a vertex list; moments summed over a Delaunay triangulation."""

    kind: ClassVar[BoundingKind] = BoundingKind.POLYTOPE

    vertices: List[List[float]]

    _pts: np.ndarray = PrivateAttr(default=None)
    _hull: ConvexHull = PrivateAttr(default=None)
    _pieces: List[SimplexSource] = PrivateAttr(default_factory=list)
    _weights: np.ndarray = PrivateAttr(default=None)

    def model_post_init(self, __context) -> None:
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[0] <= pts.shape[1]:
            raise DimensionError(f"polytope in R^{pts.shape[-1]} needs more than {pts.shape[-1]} vertices")
        if np.linalg.matrix_rank(pts[1:] - pts[0]) < pts.shape[1]:
            raise DegenerateSimplexError(f"polytope vertices {pts.tolist()} span a lower-dimensional set")
        self._pts = pts
        self._hull = ConvexHull(pts)
        triangulation = Delaunay(pts)
        pieces = []
        for simplex in triangulation.simplices:
            try:
                pieces.append(SimplexSource(vertices=pts[simplex].tolist()))
            except DegenerateSimplexError:
                logger.debug(f"Skipping flat Delaunay cell {simplex.tolist()}")
        self._pieces = pieces
        volumes = np.array([piece.volume for piece in pieces])
        self._weights = volumes / volumes.sum()

    @property
    def dimension(self) -> int:
        return len(self.vertices[0])

    def _compute(self, alpha):
        return float(sum(piece.get(alpha) for piece in self._pieces))

    def sample(self, count, rng):
        which = rng.choice(len(self._pieces), size=count, p=self._weights)
        out = np.empty((count, self.dimension))
        for idx, piece in enumerate(self._pieces):
            mask = which == idx
            if mask.any():
                out[mask] = piece.sample(int(mask.sum()), rng)
        return out

    def constraints(self, universe):
        xs = self.x_variables(universe)
        out = []
        # hull equations are normal . x + offset <= 0 on the interior
        for eq in self._hull.equations:
            form = Polynomial.constant(universe, -eq[-1])
            for x, w in zip(xs, eq[:-1]):
                form = form - w * x
            out.append(form)
        return out

    def bounding_box(self):
        return self._pts.min(axis=0), self._pts.max(axis=0)

    def outer_radius(self):
        return float(np.max(np.linalg.norm(self._pts, axis=1)))

    def contains(self, points):
        pts = np.atleast_2d(points)
        eqs = self._hull.equations
        return np.all(pts @ eqs[:, :-1].T + eqs[:, -1] <= 1e-12, axis=1)


class PushforwardSource(MomentSource):
    """Stability body of degree-n monic polynomials, the image of the unit box under the reflection map."""

    kind: ClassVar[BoundingKind] = BoundingKind.PUSHFORWARD

    order: int = Field(ge=1)

    _map = PrivateAttr(default=None)
    _hull: SimplexSource = PrivateAttr(default=None)
    _sign: float = PrivateAttr(default=1.0)
    _det_bound: float = PrivateAttr(default=1.0)

    def model_post_init(self, __context) -> None:
        from stability.reflection import reflection_map
        from stability.simplex import stable_simplex_vertices

        self._map = reflection_map(self.order)
        self._hull = SimplexSource(vertices=stable_simplex_vertices(self.order))
        det = self._map.jacobian_det
        self._sign = 1.0 if det.evaluate(np.zeros(self.order)) >= 0 else -1.0
        self._det_bound = sum(abs(c) for c in det.terms.values())

    @property
    def dimension(self) -> int:
        return self.order

    @property
    def reflection(self):
        return self._map

    def _compute(self, alpha):
        return pushforward_moments(self._map, alpha) * self._sign

    def sample(self, count, rng):
        accepted: List[np.ndarray] = []
        have = 0
        det = self._map.jacobian_det
        while have < count:
            batch = max(1024, 2 * (count - have))
            k = rng.uniform(-1.0, 1.0, size=(batch, self.order))
            weight = np.abs(det.evaluate(k)) / self._det_bound
            keep = rng.random(batch) < weight
            if keep.any():
                chosen = self._map.evaluate(k[keep])
                accepted.append(chosen)
                have += chosen.shape[0]
        return np.vstack(accepted)[:count]

    def constraints(self, universe):
        return self._hull.constraints(universe)

    def bounding_box(self):
        return self._hull.bounding_box()

    def outer_radius(self):
        return self._hull.outer_radius()

    def contains(self, points):
        from stability.hermite import schur_margin

        return schur_margin(np.atleast_2d(points)) > 0.0


def pushforward_moments(rmap, alpha: Sequence[int]) -> float:
    """Integral of x^alpha over f(K) as the integral over K = [-1,1]^n of f(k)^alpha * det grad f(k)."""
    n = rmap.n
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise DimensionError(f"multi-index {alpha} does not match map dimension {n}")
    integrand = rmap.jacobian_det
    for component, a in zip(rmap.components, alpha):
        if a:
            integrand = integrand * component ** a
    return integrate_over_unit_box(integrand, range(n))


def monte_carlo_moment(
    source: MomentSource, alpha: Sequence[int], count: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Sample-mean moment estimate and its standard error."""
    pts = source.sample(count, rng)
    values = np.prod(pts ** np.asarray(alpha, dtype=float), axis=1) * source.volume
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(count))


def source_from_spec(spec) -> MomentSource:
    """Instantiate the MomentSource described by a BoundingSpec."""
    if spec.kind == BoundingKind.BOX:
        return BoxSource(bounds=spec.bounds)
    if spec.kind == BoundingKind.BALL:
        return BallSource(center=spec.center, radius=spec.radius)
    if spec.kind == BoundingKind.SIMPLEX:
        return SimplexSource(vertices=spec.vertices)
    if spec.kind == BoundingKind.POLYTOPE:
        return PolytopeSource(vertices=spec.vertices)
    if spec.kind == BoundingKind.PUSHFORWARD:
        return PushforwardSource(order=spec.order)
    raise DimensionError(f"unsupported bounding kind {spec.kind}")


def source_from_vertices(vertices: Sequence[Sequence[float]]) -> MomentSource:
    """SimplexSource when there are n+1 vertices, PolytopeSource otherwise."""
    verts = [list(map(float, v)) for v in vertices]
    if len(verts) == len(verts[0]) + 1:
        return SimplexSource(vertices=verts)
    return PolytopeSource(vertices=verts)


def moment_vector(source: MomentSource, max_degree: int):
    """Graded-lex monomials of degree <= max_degree in n variables and their moments."""
    from polyalg import enum_monomials

    universe = Universe(source.dimension)
    monos = enum_monomials(universe, "x", max_degree)
    return monos, np.array([source.get(m) for m in monos])
