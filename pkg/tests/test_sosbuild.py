"""
Tests for certificate assembly, sphere reduction and extraction
"""
import numpy as np
import pytest

from common.config import get_settings
from common.errors import DegreeError, SolverError
from common.schemas import SolverStatus, Variant
from polyalg import Polynomial, Universe, quad_form
from sosbuild import (
    build_inner_sdp,
    build_moment_sdp,
    duality_gap,
    gram_bases,
    minimal_order,
    multiplier_degrees,
    solve_chain,
    solve_inner,
    sphere_divide,
    sphere_reduce,
)
from verify import grid_points, hessian_extreme, nested_gap


@pytest.mark.unit
class TestSphereReduction:
    def setup_method(self):
        self.universe = Universe(1, 0, 2)
        self.x = Polynomial.variable(self.universe, 0)
        self.v1 = Polynomial.variable(self.universe, 1)
        self.v2 = Polynomial.variable(self.universe, 2)

    def test_last_square_is_rewritten(self):
        assert sphere_reduce(self.v2 * self.v2) == 1 - self.v1 * self.v1

    def test_reduced_form_has_low_last_exponent(self):
        p = (self.x + self.v1 + self.v2) ** 5
        reduced = sphere_reduce(p)
        assert all(mono[2] <= 1 for mono in reduced.terms)

    def test_reduction_agrees_on_the_sphere(self, rng):
        p = (self.x * self.v2 + self.v1 ** 3) ** 2 + 3 * self.v2 ** 4
        theta = rng.uniform(0, 2 * np.pi, 50)
        pts = np.column_stack([rng.uniform(-1, 1, 50), np.cos(theta), np.sin(theta)])
        assert np.allclose(p.evaluate(pts), sphere_reduce(p).evaluate(pts), atol=1e-10)

    def test_division_identity(self):
        p = self.x * self.v2 ** 4 + self.v1 ** 2 * self.v2 ** 2 - 2 * self.v2 ** 3
        quotient, remainder = sphere_divide(p)
        sphere = 1 - self.v1 * self.v1 - self.v2 * self.v2
        assert (quotient * sphere + remainder).almost_equal(p)
        assert remainder.almost_equal(sphere_reduce(p))

    def test_requires_sphere_variables(self):
        with pytest.raises(ValueError):
            sphere_reduce(Polynomial.variable(Universe(2), 0))


@pytest.mark.unit
class TestGramBases:
    def test_parity_split(self):
        universe = Universe(1, 0, 2)
        parts = dict(gram_bases(universe, "xv", 2))
        assert set(parts) == {":even", ":odd"}
        for mono in parts[":even"]:
            assert (mono[1] + mono[2]) % 2 == 0
        for mono in parts[":odd"]:
            assert (mono[1] + mono[2]) % 2 == 1

    def test_last_sphere_exponent_is_bounded(self):
        universe = Universe(1, 0, 3)
        for _, basis in gram_bases(universe, "xv", 3):
            assert all(mono[3] <= 1 for mono in basis)

    def test_x_only_basis_is_not_split(self):
        parts = gram_bases(Universe(2), "x", 2)
        assert len(parts) == 1
        assert len(parts[0][1]) == 6

    def test_negative_half_degree(self):
        assert gram_bases(Universe(2), "x", -1) == []


@pytest.mark.unit
class TestDegreeBookkeeping:
    def test_minimal_orders(self, planar_box, hermite4, hermite4_robust):
        assert minimal_order(planar_box) == 2
        assert minimal_order(hermite4) == 2
        assert minimal_order(hermite4_robust) == 2

    def test_order_below_minimum(self, planar_box):
        with pytest.raises(DegreeError):
            multiplier_degrees(planar_box, 1)

    def test_multiplier_degrees(self, planar_box):
        degrees = multiplier_degrees(planar_box, 3)
        assert degrees.r == 2
        assert all(t == 2 for t in degrees.t)
        raised = multiplier_degrees(planar_box, 3, extra_degree=1)
        assert raised.r == 3

    def test_negative_override(self, planar_box):
        with pytest.raises(DegreeError):
            multiplier_degrees(planar_box, 2, extra_degree=-1)


@pytest.mark.unit
class TestAssembly:
    def test_program_layout(self, planar_box):
        program = build_inner_sdp(planar_box, 2)
        assert len(program.g_basis) == 15
        assert program.sdp.free_blocks[program.g_block].size == 15
        assert len(set(program.row_keys)) == len(program.row_keys)
        assert program.sdp.num_rows == len(program.row_keys)
        assert program.moments[0] == pytest.approx(4.0)

    def test_objective_is_minus_moments(self, planar_box):
        program = build_inner_sdp(planar_box, 2)
        cost = program.sdp.free_objective[program.g_block]
        assert np.allclose(cost, -program.moments)

    def test_nested_needs_previous_polynomial(self, planar_box):
        with pytest.raises(DegreeError):
            build_inner_sdp(planar_box, 3, variant=Variant.NESTED)

    def test_nested_rejects_high_degree_previous(self, planar_box):
        x1 = Polynomial.variable(planar_box.x_universe, 0)
        with pytest.raises(DegreeError):
            build_inner_sdp(planar_box, 2, variant=Variant.NESTED, prev=x1 ** 4)

    def test_nested_target_carries_the_slack(self, planar_box, monkeypatch):
        monkeypatch.setenv("PMI_NESTED_SLACK", "0.001")
        get_settings.cache_clear()
        Ux = planar_box.x_universe
        x1 = Polynomial.variable(Ux, 0)
        prev = x1 * x1 - 1
        program = build_inner_sdp(planar_box, 3, variant=Variant.NESTED, prev=prev)
        expected = -prev + Polynomial.constant(Ux, 0.001)
        assert (program.targets["nested"] - expected).max_abs_coefficient() < 1e-15

    def test_zero_slack_keeps_the_exact_identity(self, planar_box, monkeypatch):
        monkeypatch.setenv("PMI_NESTED_SLACK", "0")
        get_settings.cache_clear()
        x1 = Polynomial.variable(planar_box.x_universe, 0)
        prev = x1 * x1 - 1
        program = build_inner_sdp(planar_box, 3, variant=Variant.NESTED, prev=prev)
        assert (program.targets["nested"] + prev).max_abs_coefficient() < 1e-15

    def test_convex_adds_its_own_group(self, planar_box):
        program = build_inner_sdp(planar_box, 2, variant=Variant.CONVEX)
        groups = {gram.group for gram in program.blocks}
        assert groups == {"main", "convex"}
        assert "convex" in program.targets

    def test_moment_form_dimensions(self, planar_box):
        program = build_inner_sdp(planar_box, 2, scale_rows=False)
        moment = build_moment_sdp(planar_box, 2)
        assert moment.free_blocks[0].size == program.sdp.num_rows
        assert [b.size for b in moment.psd_blocks] == [b.size for b in program.sdp.psd_blocks]


@pytest.mark.unit
class TestPlanarSolutions:
    def test_certificates_are_optimal(self, planar_solutions):
        for approx in planar_solutions.values():
            assert approx.diagnostics["status"] == SolverStatus.OPTIMAL.value
            assert approx.identity_residual < 1e-6
            assert approx.diagnostics["gram_min_eigenvalue"] > -1e-7

    def test_degree_of_g(self, planar_solutions):
        for d, approx in planar_solutions.items():
            assert approx.g.degree() <= 2 * d

    def test_objective_grows_with_order(self, planar_solutions):
        assert planar_solutions[3].objective_value >= planar_solutions[2].objective_value - 1e-6

    def test_g_is_below_the_smallest_eigenvalue(self, planar_solutions, planar_box, rng):
        x = planar_box.moment_source.sample(500, rng)
        mats = planar_box.P.evaluate_batch(planar_box.universe.pack(x=x))
        lam = np.linalg.eigvalsh(mats)[:, 0]
        for approx in planar_solutions.values():
            assert np.all(approx.g.evaluate(x) <= lam + 1e-6)

    def test_absorbed_multiplier_closes_the_identity(self, planar_solutions, planar_box):
        approx = planar_solutions[2]
        program = approx.program
        U = program.universes["main"]
        r = approx.absorbed_multiplier()
        v = [Polynomial.variable(U, s) for s in U.v_slots]
        sphere = 1 - sum((vi * vi for vi in v[1:]), v[0] * v[0])
        lhs = r * sphere + approx.g.embed(U, {0: 0, 1: 1})
        for gram in program.blocks:
            lhs = lhs + gram.weight * gram.sos_polynomial(approx.multipliers[gram.label])
        assert (lhs - quad_form(planar_box.P)).max_abs_coefficient() < 1e-5

    def test_solver_failure_is_typed(self, planar_box):
        with pytest.raises(SolverError) as info:
            solve_inner(planar_box, 2, max_iter=1)
        assert info.value.status == SolverStatus.MAX_ITER.value


@pytest.mark.slow
class TestVariants:
    def test_nested_chain_is_monotone(self, planar_box):
        chain = solve_chain(planar_box, [2, 3, 4], variant=Variant.NESTED)
        assert len(chain) == 3
        plan = grid_points(planar_box.moment_source, resolution=41)
        for prev, approx in zip(chain, chain[1:]):
            assert approx.diagnostics["status"] == SolverStatus.OPTIMAL.value
            assert nested_gap(approx.g, prev.g, plan) >= -1e-6
            assert approx.objective_value >= prev.objective_value - 1e-6
            assert approx.diagnostics["identity_residuals"]["nested"] < 1e-6

    def test_convex_variant_is_concave(self, planar_box):
        approx = solve_inner(planar_box, 2, variant=Variant.CONVEX)
        plan = grid_points(planar_box.moment_source, resolution=41)
        _, top = hessian_extreme(approx.g, plan)
        assert top <= 1e-6
        assert approx.diagnostics["identity_residuals"]["convex"] < 1e-6

    def test_no_duality_gap(self, planar_box):
        report = duality_gap(planar_box, 2)
        assert report.sos_status == SolverStatus.OPTIMAL
        assert report.moment_status == SolverStatus.OPTIMAL
        assert report.relative <= 1e-5

    def test_robust_problem_solves(self, hermite4_robust):
        approx = solve_inner(hermite4_robust, 2)
        assert approx.identity_residual < 1e-6
        assert approx.g.universe == hermite4_robust.x_universe
