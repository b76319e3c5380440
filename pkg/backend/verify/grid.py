"""
Two-dimensional evaluation grids over the bounding set
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from common.config import get_settings
from common.errors import DimensionError
from common.schemas import SampleReport
from moments import MomentSource
from polyalg import Polynomial, hessian
from sosbuild.problem import PmiProblem
from verify.eigen import eig_sym_batch
from verify.sampling import lambda_min_batch, u_sampling_plan

logger = logging.getLogger(__name__)


@dataclass
class GridPlan:
    """Row-major resolution x resolution grid; the first free axis varies slowest."""

    axes: Tuple[int, int]
    resolution: int
    points: np.ndarray
    inside: np.ndarray
    section: Dict[int, float]

    @property
    def coords(self) -> np.ndarray:
        return self.points[:, list(self.axes)]

    @property
    def axis_names(self) -> List[str]:
        return [f"x{axis + 1}" for axis in self.axes]

    @property
    def inside_points(self) -> np.ndarray:
        return self.points[self.inside]

    def __len__(self) -> int:
        return self.points.shape[0]


def grid_points(
    source: MomentSource,
    resolution: Optional[int] = None,
    section: Optional[Dict[int, float]] = None,
) -> GridPlan:
    """Grid over the bounding box of B on the two axes left free by section (0-based axis -> value)."""
    resolution = get_settings().grid_resolution if resolution is None else resolution
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    n = source.dimension
    section = {int(k): float(v) for k, v in (section or {}).items()}
    bad = [axis for axis in section if not 0 <= axis < n]
    if bad:
        raise DimensionError(f"section fixes axes {[a + 1 for a in bad]} outside 1..{n}")
    free = [axis for axis in range(n) if axis not in section]
    if len(free) != 2:
        raise DimensionError(
            f"grid needs a 2-D design space; n={n} with {len(section)} fixed coordinates leaves {len(free)} free"
        )
    lo, hi = source.bounding_box()
    first = np.linspace(lo[free[0]], hi[free[0]], resolution)
    second = np.linspace(lo[free[1]], hi[free[1]], resolution)
    a, b = np.meshgrid(first, second, indexing="ij")
    points = np.zeros((resolution * resolution, n))
    points[:, free[0]] = a.ravel()
    points[:, free[1]] = b.ravel()
    for axis, value in section.items():
        points[:, axis] = value
    inside = np.asarray(source.contains(points), dtype=bool)
    return GridPlan(axes=(free[0], free[1]), resolution=resolution, points=points, inside=inside, section=section)


def grid_report(
    g: Polynomial,
    problem: PmiProblem,
    plan: GridPlan,
    u_samples: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """CSV rows of the grid: free coordinates, g, sampled lambda and the in-B flag."""
    if u_samples is None:
        u_samples = u_sampling_plan(problem)
    g_vals = np.asarray(g.evaluate(plan.points), dtype=float)
    lam = lambda_min_batch(problem, plan.points, u_samples)
    names = plan.axis_names
    coords = plan.coords
    return pd.DataFrame(
        {
            names[0]: coords[:, 0],
            names[1]: coords[:, 1],
            "g": g_vals,
            "lambda": lam,
            "inside": plan.inside.astype(int),
        }
    )


def soundness_report(
    approx,
    problem: PmiProblem,
    plan: GridPlan,
    u_samples: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    seed: Optional[int] = None,
) -> SampleReport:
    """Check lambda(x) >= -tol at every grid point of B where g(x) > 0."""
    settings = get_settings()
    tol = settings.soundness_tolerance if tol is None else tol
    seed = settings.default_seed if seed is None else seed
    g = approx.g if hasattr(approx, "g") else approx
    if u_samples is None:
        u_samples = u_sampling_plan(problem, seed=seed)
    pts = plan.inside_points
    g_vals = np.asarray(g.evaluate(pts), dtype=float) if len(pts) else np.zeros(0)
    tested = pts[g_vals > 0.0]
    if tested.shape[0] == 0:
        return SampleReport(samples=0, violations=0, worst_margin=float("inf"), seed=seed)
    lam = lambda_min_batch(problem, tested, u_samples)
    violations = int(np.count_nonzero(lam < -tol))
    if violations:
        logger.warning(f"{problem.name}: {violations} grid points with g > 0 fall outside the PMI set")
    return SampleReport(samples=int(tested.shape[0]), violations=violations, worst_margin=float(lam.min()), seed=seed)


def nested_gap(g_new: Polynomial, g_prev: Polynomial, plan: GridPlan) -> float:
    """min over grid points in B of g_new - g_prev."""
    pts = plan.inside_points
    if pts.shape[0] == 0:
        return float("inf")
    return float(np.min(np.asarray(g_new.evaluate(pts)) - np.asarray(g_prev.evaluate(pts))))


def hessian_extreme(g: Polynomial, plan: GridPlan) -> Tuple[float, float]:
    """Smallest and largest Hessian eigenvalue of g over grid points in B."""
    pts = plan.inside_points
    if pts.shape[0] == 0:
        return float("inf"), float("-inf")
    eigs = eig_sym_batch(hessian(g).evaluate_batch(pts))
    return float(eigs[:, 0].min()), float(eigs[:, -1].max())


def sample_points(source: MomentSource, count: int, seed: Optional[int] = None) -> GridPlan:
    """Uniform samples of B in place of a grid when the design space is not 2-D."""
    seed = get_settings().default_seed if seed is None else seed
    points = source.sample(count, np.random.default_rng(seed))
    axes = (0, 1) if source.dimension > 1 else (0, 0)
    return GridPlan(axes=axes, resolution=0, points=points, inside=np.ones(points.shape[0], dtype=bool), section={})
