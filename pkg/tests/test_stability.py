"""
Tests for Hermite matrices, reflection maps and stability simplices
"""
import itertools

import numpy as np
import pytest

from common.errors import DimensionError, InfeasibleSectionError
from polyalg import Polynomial, Universe
from stability import (
    hermite_matrix,
    is_schur_stable,
    pushforward_source,
    reflection_map,
    schur_margin,
    section_bounding_simplex,
    section_source,
    stable_simplex_vertices,
    substitute_affine,
)

DESIGN_A = [[-2.0, -1.0], [0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]
DESIGN_TRIANGLE = [(-0.25, 1.0), (0.875, -0.5), (-0.625, -0.5)]


def _same_points(found, expected, tol=1e-12):
    found = [tuple(p) for p in np.asarray(found, dtype=float)]
    if len(found) != len(expected):
        return False
    return all(any(np.allclose(f, e, atol=tol) for f in found) for e in expected)


@pytest.mark.unit
class TestHermiteMatrix:
    def setup_method(self):
        self.instance = hermite_matrix(3)
        self.universe = self.instance.universe
        self.x = [Polynomial.variable(self.universe, s) for s in range(3)]

    def test_displayed_entries(self):
        x1, x2, x3 = self.x
        assert self.instance.P.entry(0, 0) == 1 - x3 * x3
        assert self.instance.P.entry(0, 1) == x1 - x2 * x3

    def test_identity_at_origin(self):
        assert np.array_equal(self.instance.P.evaluate(np.zeros(self.universe.nvars)), np.eye(3))

    def test_entries_are_quadratic(self):
        assert all(entry.degree() <= 2 for row in self.instance.P.rows() for entry in row)

    def test_design_substitution(self):
        target = Universe(2, 0, 4)
        P = substitute_affine(hermite_matrix(4), DESIGN_A, [0.0] * 4, target)
        x1, x2 = Polynomial.variable(target, 0), Polynomial.variable(target, 1)
        assert P.entry(0, 0).almost_equal(1 - x2 * x2)
        assert P.entry(0, 1).almost_equal(-2 * x1 - x2 - 2 * x1 * x2)
        assert P.universe == target

    def test_robust_shift_adds_uncertain_term(self):
        target = Universe(2, 1, 4)
        u1 = Polynomial.variable(target, 2)
        P = substitute_affine(hermite_matrix(4), DESIGN_A, [0.0] * 4, target, shifts={3: u1})
        x2 = Polynomial.variable(target, 1)
        assert P.entry(0, 0).almost_equal(1 - (x2 + u1) ** 2)

    def test_degree_must_be_positive(self):
        with pytest.raises(DimensionError):
            hermite_matrix(0)

    def test_schur_stability_of_simple_polynomials(self):
        assert is_schur_stable([0.0, 0.0, 0.0])
        assert is_schur_stable([0.5, 0.0, 0.0])
        assert not is_schur_stable([3.5, 3.0, 1.0])
        assert not is_schur_stable([0.0, 0.0, 1.5])


@pytest.mark.unit
class TestReflectionMap:
    def setup_method(self):
        self.rmap = reflection_map(3)
        universe = self.rmap.universe
        self.k = [Polynomial.variable(universe, s) for s in range(3)]

    def test_closed_form_for_cubics(self):
        k1, k2, k3 = self.k
        assert self.rmap.components[0] == k2 * k3 + k1 * (1 + k2)
        assert self.rmap.components[2] == k3

    def test_special_points(self):
        assert np.allclose(self.rmap.evaluate([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0])
        assert np.allclose(self.rmap.evaluate([1.0, 1.0, 1.0]), [3.0, 3.0, 1.0])

    def test_jacobian_determinant(self):
        k1, k2, k3 = self.k
        assert self.rmap.jacobian_det.almost_equal((1 + k2) * (1 - k3 * k3))

    def test_components_are_multiaffine(self):
        for component in self.rmap.components:
            for slot in range(3):
                assert component.degree_in([slot]) <= 1

    def test_jacobian_matches_finite_differences(self, rng):
        h = 1e-6
        for _ in range(100):
            k = rng.uniform(-1, 1, 3)
            J = np.zeros((3, 3))
            for j in range(3):
                step = np.eye(3)[j] * h
                J[:, j] = (self.rmap.evaluate(k + step) - self.rmap.evaluate(k - step)) / (2 * h)
            assert np.linalg.det(J) == pytest.approx(self.rmap.jacobian_det.evaluate(k), abs=1e-6)

    def test_box_interior_maps_into_stable_region(self, rng):
        k = rng.uniform(-1, 1, size=(1000, 3))
        margins = schur_margin(self.rmap.evaluate(k))
        assert np.all(margins > 0)

    def test_outside_box_leaves_stable_region(self, rng):
        k = rng.uniform(-1, 1, size=(1000, 3))
        axis = rng.integers(0, 3, size=1000)
        k[np.arange(1000), axis] = rng.choice([-1.0, 1.0], size=1000) * rng.uniform(1.05, 2.0, size=1000)
        x = self.rmap.evaluate(k)
        assert np.all(schur_margin(x) < 1e-9)

    def test_corners_map_to_simplex_vertices(self):
        images = {tuple(np.round(self.rmap.evaluate(np.array(c, dtype=float)), 12))
                  for c in itertools.product([-1.0, 1.0], repeat=3)}
        expected = {tuple(v) for v in stable_simplex_vertices(3)}
        assert images == expected


@pytest.mark.unit
class TestStabilitySimplex:
    def test_vertices_of_cubic_simplex(self):
        assert stable_simplex_vertices(3) == [[-3.0, 3.0, -1.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -1.0], [3.0, 3.0, 1.0]]

    def test_vertices_of_quartic_simplex(self):
        assert stable_simplex_vertices(4) == [
            [-4.0, 6.0, -4.0, 1.0],
            [-2.0, 0.0, 2.0, -1.0],
            [0.0, -2.0, 0.0, 1.0],
            [2.0, 0.0, -2.0, -1.0],
            [4.0, 6.0, 4.0, 1.0],
        ]

    def test_linear_case(self):
        assert stable_simplex_vertices(1) == [[-1.0], [1.0]]

    def test_design_section_is_the_triangle(self):
        verts = section_bounding_simplex(4, DESIGN_A)
        assert _same_points(verts, DESIGN_TRIANGLE, tol=1e-9)

    def test_identity_section_is_the_simplex(self):
        verts = section_bounding_simplex(3, np.eye(3))
        assert _same_points(verts, [tuple(v) for v in stable_simplex_vertices(3)], tol=1e-9)

    def test_section_outside_the_hull(self):
        with pytest.raises(InfeasibleSectionError):
            section_bounding_simplex(2, [[1.0], [0.0]], b=[0.0, 5.0])

    def test_rank_deficient_substitution(self):
        with pytest.raises(DimensionError):
            section_bounding_simplex(3, [[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])

    def test_section_source_area(self):
        source = section_source(4, DESIGN_A)
        assert source.volume == pytest.approx(9.0 / 8.0, rel=1e-12)

    def test_pushforward_source_contains_its_samples(self, rng):
        source = pushforward_source(3)
        pts = source.sample(200, rng)
        assert np.all(source.contains(pts))
