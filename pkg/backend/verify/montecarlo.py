"""
Monte-Carlo volume and L1-gap estimates over the bounding set.

Samples are drawn in fixed-size chunks; chunk i uses the i-th child of
SeedSequence(seed), so the reported numbers depend only on the seed and the
sample count, never on the number of worker threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from common.config import get_settings
from common.schemas import GapEstimate, VolumeEstimate
from moments import MomentSource
from polyalg import Polynomial
from sosbuild.problem import PmiProblem
from verify.sampling import lambda_min_batch, u_sampling_plan

logger = logging.getLogger(__name__)

CHUNK_SIZE = 100_000

Region = Union[Polynomial, Sequence[Polynomial], Callable[[np.ndarray], np.ndarray]]


def eval_piecewise_max(g_list: Sequence[Polynomial], x) -> Union[float, np.ndarray]:
    """Pointwise max of the listed polynomials at one point or a batch."""
    if not g_list:
        raise ValueError("piecewise max of an empty list")
    values = [g.evaluate(x) for g in g_list]
    if np.ndim(values[0]) == 0:
        return float(max(values))
    return np.max(np.stack(values), axis=0)


def _region_values(region: Region, points: np.ndarray) -> np.ndarray:
    if isinstance(region, Polynomial):
        return np.asarray(region.evaluate(points), dtype=float)
    if callable(region):
        return np.asarray(region(points))
    return np.asarray(eval_piecewise_max(list(region), points), dtype=float)


def _chunks(samples: int, seed: int) -> List[Tuple[int, np.random.SeedSequence]]:
    count = int(math.ceil(samples / CHUNK_SIZE))
    children = np.random.SeedSequence(seed).spawn(count)
    return [(min(CHUNK_SIZE, samples - i * CHUNK_SIZE), child) for i, child in enumerate(children)]


def _run_chunks(fn, chunks, workers: int) -> list:
    if workers <= 1 or len(chunks) <= 1:
        return [fn(size, child) for size, child in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda item: fn(*item), chunks))


def mc_volume(
    region: Region,
    source: MomentSource,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> VolumeEstimate:
    """Volume of {x in B : region(x) >= 0} (or a boolean predicate) by uniform sampling of B."""
    settings = get_settings()
    samples = int(settings.mc_samples if samples is None else samples)
    seed = settings.default_seed if seed is None else seed
    workers = settings.sweep_workers if workers is None else workers
    if samples < 1:
        raise ValueError("sample count must be positive")

    def count_hits(size: int, child: np.random.SeedSequence) -> int:
        pts = source.sample(size, np.random.default_rng(child))
        values = _region_values(region, pts)
        hits = values if values.dtype == bool else values >= 0.0
        return int(np.count_nonzero(hits))

    hits = sum(_run_chunks(count_hits, _chunks(samples, seed), workers))
    fraction = hits / samples
    volume = source.volume
    estimate = volume * fraction
    std_error = volume * math.sqrt(fraction * (1.0 - fraction) / samples)
    logger.debug(f"Monte-Carlo volume: {hits}/{samples} hits, estimate={estimate:.6g} se={std_error:.2e}")
    return VolumeEstimate(estimate=estimate, std_error=std_error, samples=samples, seed=seed)


def l1_gap(
    g: Region,
    problem: PmiProblem,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    u_samples: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
) -> GapEstimate:
    """Estimate of the integral over B of lambda - g; points with g > lambda + tol are counted, not clipped."""
    settings = get_settings()
    samples = int(settings.mc_samples if samples is None else samples)
    seed = settings.default_seed if seed is None else seed
    workers = settings.sweep_workers if workers is None else workers
    tol = settings.soundness_tolerance
    if u_samples is None:
        u_samples = u_sampling_plan(problem, seed=seed)
    source = problem.moment_source

    def accumulate(size: int, child: np.random.SeedSequence) -> Tuple[float, float, int]:
        pts = source.sample(size, np.random.default_rng(child))
        lam = lambda_min_batch(problem, pts, u_samples)
        g_vals = _region_values(g, pts).astype(float)
        diff = lam - g_vals
        return float(diff.sum()), float((diff * diff).sum()), int(np.count_nonzero(g_vals > lam + tol))

    parts = _run_chunks(accumulate, _chunks(samples, seed), workers)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    violations = sum(p[2] for p in parts)
    mean = total / samples
    variance = max(0.0, total_sq / samples - mean * mean)
    volume = source.volume
    estimate = volume * mean
    std_error = volume * math.sqrt(variance / samples)
    if violations:
        logger.warning(f"{problem.name}: {violations} of {samples} samples have g above lambda")
    return GapEstimate(estimate=estimate, std_error=std_error, samples=samples, violations=violations, seed=seed)
