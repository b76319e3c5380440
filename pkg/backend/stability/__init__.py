"""
Discrete-time stability geometry: Hermite matrices, reflection maps, stability simplices
"""

from moments import PushforwardSource
from stability.hermite import (
    HermiteInstance,
    affine_images,
    hermite_matrix,
    is_schur_stable,
    schur_margin,
    substitute_affine,
)
from stability.reflection import ReflectionMap, reflection_map
from stability.simplex import section_bounding_simplex, section_source, stable_simplex_vertices


def pushforward_source(n: int) -> PushforwardSource:
    """Moment source of the degree-n stability body."""
    return PushforwardSource(order=n)


__all__ = [
    "HermiteInstance",
    "hermite_matrix",
    "affine_images",
    "substitute_affine",
    "schur_margin",
    "is_schur_stable",
    "ReflectionMap",
    "reflection_map",
    "stable_simplex_vertices",
    "section_bounding_simplex",
    "section_source",
    "pushforward_source",
]
