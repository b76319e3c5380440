"""
Sampling oracles that check computed inner approximations
"""

from verify.eigen import eig_sym, eig_sym_batch
from verify.grid import (
    GridPlan,
    grid_points,
    grid_report,
    hessian_extreme,
    nested_gap,
    sample_points,
    soundness_report,
)
from verify.montecarlo import eval_piecewise_max, l1_gap, mc_volume
from verify.sampling import lambda_min, lambda_min_batch, membership, u_sampling_plan

__all__ = [
    "eig_sym",
    "eig_sym_batch",
    "u_sampling_plan",
    "lambda_min",
    "lambda_min_batch",
    "membership",
    "mc_volume",
    "l1_gap",
    "eval_piecewise_max",
    "GridPlan",
    "grid_points",
    "grid_report",
    "sample_points",
    "soundness_report",
    "nested_gap",
    "hessian_extreme",
]
