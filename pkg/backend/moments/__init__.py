"""
Closed-form moments of bounding sets
"""

from moments.formulas import (
    ball_moments,
    box_moments,
    dirichlet_weight,
    integrate_over_unit_box,
    simplex_moments,
)
from moments.sources import (
    BallSource,
    BoxSource,
    MomentSource,
    PolytopeSource,
    PushforwardSource,
    SimplexSource,
    moment_vector,
    monte_carlo_moment,
    pushforward_moments,
    source_from_spec,
    source_from_vertices,
)

__all__ = [
    "MomentSource",
    "BoxSource",
    "BallSource",
    "SimplexSource",
    "PolytopeSource",
    "PushforwardSource",
    "box_moments",
    "ball_moments",
    "simplex_moments",
    "pushforward_moments",
    "dirichlet_weight",
    "integrate_over_unit_box",
    "moment_vector",
    "monte_carlo_moment",
    "source_from_spec",
    "source_from_vertices",
]
