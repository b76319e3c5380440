"""
PMI instances and multiplier degree bookkeeping
"""

import logging
import math
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from common.config import get_settings
from common.errors import DegreeError, DimensionError, EmptySampleError
from moments import MomentSource
from polyalg import MatrixPolynomial, Polynomial, Universe

logger = logging.getLogger(__name__)


class PmiProblem(BaseModel):
    """P(x,u) >= 0 for all u in U = {a_i(u) >= 0}, over the bounding set B = {b_j(x) >= 0}."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    universe: Universe
    P: MatrixPolynomial
    a: List[Polynomial] = Field(default_factory=list)
    b: List[Polynomial] = Field(default_factory=list)
    moment_source: Any
    u_bounds: List[Tuple[float, float]] = Field(default_factory=list)
    x_guard: Optional[Polynomial] = None
    u_guard: Optional[Polynomial] = None

    @classmethod
    def create(
        cls,
        name: str,
        P: MatrixPolynomial,
        moment_source: MomentSource,
        a: Sequence[Polynomial] = (),
        u_bounds: Sequence[Tuple[float, float]] = (),
        extra_b: Sequence[Polynomial] = (),
        archimedean_guard: Optional[bool] = None,
    ) -> "PmiProblem":
        """Assemble an instance; B-constraints come from the moment source plus optional extras."""
        settings = get_settings()
        guard = settings.archimedean_guard if archimedean_guard is None else archimedean_guard
        universe = P.universe
        if universe.m != P.size:
            raise DimensionError(f"P is {P.size}x{P.size} but the universe has {universe.m} v-slots")
        if moment_source.dimension != universe.n:
            raise DimensionError(
                f"moment source has dimension {moment_source.dimension}, problem has n={universe.n}"
            )
        for poly in a:
            if not poly.depends_only_on(universe.u_slots):
                raise DimensionError("uncertainty constraints may only involve u variables")
        if u_bounds and len(u_bounds) != universe.p:
            raise DimensionError(f"{len(u_bounds)} uncertainty bounds for p={universe.p}")

        b = list(moment_source.constraints(universe)) + list(extra_b)
        a_list = list(a)
        x_guard = u_guard = None
        if guard:
            radius = settings.guard_margin * moment_source.outer_radius()
            x_guard = Polynomial.constant(universe, radius ** 2)
            for s in universe.x_slots:
                x_guard = x_guard - Polynomial.variable(universe, s) ** 2
            b.append(x_guard)
            if universe.p and u_bounds:
                u_radius = settings.guard_margin * float(
                    np.linalg.norm([max(abs(lo), abs(hi)) for lo, hi in u_bounds])
                )
                u_guard = Polynomial.constant(universe, u_radius ** 2)
                for s in universe.u_slots:
                    u_guard = u_guard - Polynomial.variable(universe, s) ** 2
                a_list.append(u_guard)
            elif universe.p:
                logger.warning(f"Problem {name}: no uncertainty bounds given, skipping the u-ball guard")
        return cls(
            name=name,
            universe=universe,
            P=P,
            a=a_list,
            b=b,
            moment_source=moment_source,
            u_bounds=list(u_bounds),
            x_guard=x_guard,
            u_guard=u_guard,
        )

    @property
    def n(self) -> int:
        return self.universe.n

    @property
    def x_universe(self) -> Universe:
        return Universe(self.universe.n)

    def sample_u(self, count: int, rng: np.random.Generator, max_rounds: int = 100) -> np.ndarray:
        """Uniform rejection samples of U from its bounding box; shape (count, p)."""
        p = self.universe.p
        if p == 0:
            return np.zeros((count, 0))
        if not self.u_bounds:
            raise EmptySampleError(f"problem {self.name} has no uncertainty bounds to sample from")
        lo = np.array([l for l, _ in self.u_bounds])
        hi = np.array([h for _, h in self.u_bounds])
        kept: List[np.ndarray] = []
        have = 0
        for _ in range(max_rounds):
            batch = rng.uniform(lo, hi, size=(max(64, 2 * (count - have)), p))
            mask = self.u_feasible(batch)
            kept.append(batch[mask])
            have += int(mask.sum())
            if have >= count:
                return np.vstack(kept)[:count]
        raise EmptySampleError(f"rejection sampling of U kept {have} of {count} requested points")

    def u_feasible(self, u_points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Mask of points satisfying every user-supplied a_i(u) >= -tol."""
        pts = self.universe.pack(u=np.atleast_2d(u_points))
        mask = np.ones(pts.shape[0], dtype=bool)
        for poly in self.a:
            if poly is self.u_guard:
                continue
            mask &= poly.evaluate(pts) >= -tol
        return mask


class MultiplierDegrees(BaseModel):
    """Gram-basis half-degrees of the certificate multipliers at relaxation order d."""

    d: int
    d0: int
    r: int
    s: List[int]
    t: List[int]


def minimal_order(problem: PmiProblem) -> int:
    degrees = [2 + problem.P.degree()]
    degrees += [poly.degree() for poly in problem.a]
    degrees += [poly.degree() for poly in problem.b]
    return int(math.ceil(max(degrees) / 2))


def multiplier_degrees(problem: PmiProblem, d: int, extra_degree: int = 0) -> MultiplierDegrees:
    """d_r = d - 1, d_s_i = d - ceil(deg a_i / 2), d_t_j = d - ceil(deg b_j / 2), each raised by extra_degree."""
    d0 = minimal_order(problem)
    if d < d0:
        raise DegreeError(f"relaxation order {d} is below the minimum {d0} for problem {problem.name}")
    if extra_degree < 0:
        raise DegreeError("multiplier degree override must be nonnegative")
    return MultiplierDegrees(
        d=d,
        d0=d0,
        r=d - 1 + extra_degree,
        s=[d - int(math.ceil(poly.degree() / 2)) + extra_degree for poly in problem.a],
        t=[d - int(math.ceil(poly.degree() / 2)) + extra_degree for poly in problem.b],
    )
