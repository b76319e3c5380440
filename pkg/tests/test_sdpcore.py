"""
Tests for the block SDP model, interior-point solver and sparse text format
"""
import numpy as np
import pytest

from common.errors import ParseError
from common.schemas import SolverStatus
from sdpcore import (
    InteriorPointSolver,
    SdpBuilder,
    check_certificate,
    eliminate_free,
    export_sdp,
    format_sdp,
    pack,
    packed_index,
    parse_sdp,
    read_sdp,
    recover_free,
    solve,
    unpack_values,
)


def trace_one_problem(C):
    """min <C, X> subject to trace X = 1: the optimum is the smallest eigenvalue of C."""
    C = np.asarray(C, dtype=float)
    size = C.shape[0]
    builder = SdpBuilder()
    block = builder.add_psd_block("X", size)
    for i in range(size):
        builder.add_psd_entry(0, block, i, i, 1.0)
        for j in range(i, size):
            builder.add_psd_objective(block, i, j, C[i, j] if i == j else 2.0 * C[i, j])
    builder.set_rhs(0, 1.0)
    return builder.build()


def free_variable_problem():
    """min t subject to [[t, 1], [1, t]] PSD, with t as a free variable."""
    builder = SdpBuilder()
    block = builder.add_psd_block("X", 2)
    free = builder.add_free_block("t", 1)
    builder.add_psd_entry(0, block, 0, 0, 1.0)
    builder.add_free_entry(0, free, 0, -1.0)
    builder.add_psd_entry(1, block, 1, 1, 1.0)
    builder.add_free_entry(1, free, 0, -1.0)
    builder.add_psd_entry(2, block, 0, 1, 1.0)
    builder.set_rhs(2, 1.0)
    builder.add_free_objective(free, 0, 1.0)
    return builder.build()


@pytest.mark.unit
class TestPacking:
    def test_packed_index_matches_triu_order(self):
        size = 4
        rows, cols = np.triu_indices(size)
        for k, (i, j) in enumerate(zip(rows, cols)):
            assert packed_index(size, i, j) == k
            assert packed_index(size, j, i) == k

    def test_unpack_values_restores_symmetric_matrix(self):
        X = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
        assert np.array_equal(unpack_values(pack(X), 3), X)

    def test_off_diagonal_coefficient_counts_once(self):
        builder = SdpBuilder()
        block = builder.add_psd_block("X", 2)
        builder.add_psd_entry(0, block, 1, 0, 3.0)
        problem = builder.build()
        X = np.array([[0.0, 2.0], [2.0, 0.0]])
        assert problem.apply([X], []) == pytest.approx([6.0])

    def test_block_lookup(self):
        problem = free_variable_problem()
        assert problem.psd_index("X") == 0
        assert problem.free_index("t") == 0
        with pytest.raises(KeyError):
            problem.psd_index("missing")
        assert problem.num_rows == 3
        assert problem.free_length == 1


@pytest.mark.unit
class TestInteriorPointSolver:
    def test_diagonal_cost(self):
        solution = solve(trace_one_problem([[1.0, 0.0], [0.0, 2.0]]))
        assert solution.is_optimal
        assert solution.primal_objective == pytest.approx(1.0, abs=1e-6)
        assert solution.dual_objective == pytest.approx(1.0, abs=1e-6)

    def test_smallest_eigenvalue_of_dense_cost(self, rng):
        B = rng.normal(size=(4, 4))
        C = (B + B.T) / 2.0
        solution = solve(trace_one_problem(C))
        assert solution.is_optimal
        assert solution.primal_objective == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-6)

    def test_free_variables(self):
        problem = free_variable_problem()
        solution = solve(problem)
        assert solution.is_optimal
        assert solution.free_values[0][0] == pytest.approx(1.0, abs=1e-6)
        assert solution.primal_objective == pytest.approx(1.0, abs=1e-6)

    def test_independent_certificate_check(self):
        problem = free_variable_problem()
        solution = solve(problem, tol=1e-9)
        report = check_certificate(problem, solution)
        assert report.within(1e-7)
        assert report.min_eig_primal >= -1e-9
        assert report.min_eig_dual >= -1e-9

    def test_history_is_recorded(self):
        solution = solve(trace_one_problem(np.eye(3)))
        assert len(solution.history) == solution.iterations + 1
        assert solution.history[-1].gap == solution.gap

    def test_infeasible_problem_is_a_status(self):
        builder = SdpBuilder()
        block = builder.add_psd_block("X", 1)
        builder.add_psd_entry(0, block, 0, 0, 1.0)
        builder.set_rhs(0, -1.0)
        solution = solve(builder.build())
        assert not solution.is_optimal
        assert solution.status in {SolverStatus.INFEASIBLE, SolverStatus.MAX_ITER, SolverStatus.NUMERICAL_FAILURE}

    def test_iteration_limit(self):
        solution = solve(trace_one_problem(np.diag([1.0, 2.0, 3.0])), max_iter=1)
        assert solution.status == SolverStatus.MAX_ITER
        assert solution.iterations == 1


@pytest.mark.unit
class TestFreeElimination:
    def test_reduced_problem_has_same_optimum(self):
        problem = free_variable_problem()
        reduced, _ = eliminate_free(problem)
        assert not reduced.free_blocks
        solution = solve(reduced)
        assert solution.is_optimal
        assert solution.primal_objective == pytest.approx(1.0, abs=1e-6)

    def test_recovered_free_values(self):
        problem = free_variable_problem()
        reduced, _ = eliminate_free(problem)
        solution = solve(reduced)
        xf = recover_free(problem, solution.primal_blocks)
        assert xf[0] == pytest.approx(1.0, abs=1e-6)

    def test_problem_without_free_blocks_is_untouched(self):
        problem = trace_one_problem(np.eye(2))
        reduced, w = eliminate_free(problem)
        assert reduced is problem
        assert not np.any(w)


@pytest.mark.unit
class TestSparseFormat:
    def setup_method(self):
        self.problem = free_variable_problem()

    def test_header_layout(self):
        lines = [line for line in format_sdp(self.problem).splitlines() if not line.startswith("*")]
        assert lines[0] == "3"
        assert lines[1] == "2"
        assert lines[2] == "2 F1"
        assert lines[-1].startswith("rhs ")

    def test_parsed_problem_has_identical_data(self):
        parsed = parse_sdp(format_sdp(self.problem))
        for a, b in zip(parsed.psd_constraints, self.problem.psd_constraints):
            assert np.array_equal(a.toarray(), b.toarray())
        for a, b in zip(parsed.free_constraints, self.problem.free_constraints):
            assert np.array_equal(a.toarray(), b.toarray())
        assert np.array_equal(parsed.rhs, self.problem.rhs)
        assert [b.label for b in parsed.psd_blocks] == ["X"]
        assert [b.label for b in parsed.free_blocks] == ["t"]

    def test_offset_survives_export(self, tmp_path):
        builder = SdpBuilder()
        block = builder.add_psd_block("X", 1)
        builder.add_psd_entry(0, block, 0, 0, 1.0)
        builder.set_rhs(0, 2.0)
        builder.add_psd_objective(block, 0, 0, 1.0)
        builder.offset = 0.5
        path = export_sdp(builder.build(), tmp_path / "out" / "tiny.sdp")
        parsed = read_sdp(path)
        assert parsed.objective_offset == 0.5
        assert solve(parsed).primal_objective == pytest.approx(2.5, abs=1e-6)

    def test_missing_rhs(self):
        text = format_sdp(self.problem)
        truncated = "\n".join(line for line in text.splitlines() if not line.startswith("rhs"))
        with pytest.raises(ParseError):
            parse_sdp(truncated)

    def test_block_count_mismatch(self):
        with pytest.raises(ParseError):
            parse_sdp("1\n2\n3\nrhs 1.0\n")


def random_instance(rng, size=3, rows=4):
    """Strictly feasible primal and dual, so an optimum exists; one free variable."""
    builder = SdpBuilder()
    block = builder.add_psd_block("X", size)
    free = builder.add_free_block("f", 1)
    packed = size * (size + 1) // 2
    A = rng.normal(size=(rows, packed))
    F = rng.normal(size=rows)
    B = rng.normal(size=(size, size))
    X0 = B @ B.T + np.eye(size)
    x0 = rng.normal()
    y0 = rng.normal(size=rows)
    B = rng.normal(size=(size, size))
    Z0 = B @ B.T + np.eye(size)
    iu, ju = np.triu_indices(size)
    for row in range(rows):
        for idx, (i, j) in enumerate(zip(iu, ju)):
            builder.add_psd_entry(row, block, i, j, A[row, idx])
        builder.add_free_entry(row, free, 0, F[row])
        builder.set_rhs(row, float(A[row] @ pack(X0) + F[row] * x0))
    cost = A.T @ y0
    for idx, (i, j) in enumerate(zip(iu, ju)):
        builder.add_psd_objective(block, i, j, cost[idx] + (Z0[i, j] if i == j else 2.0 * Z0[i, j]))
    builder.add_free_objective(free, 0, float(F @ y0))
    return builder.build()


@pytest.mark.unit
class TestSmallExamples:
    def test_scalar_with_slack(self):
        # x - s = 1 with x, s >= 0 as 1x1 blocks
        builder = SdpBuilder()
        x = builder.add_psd_block("x", 1)
        s = builder.add_psd_block("s", 1)
        builder.add_psd_entry(0, x, 0, 0, 1.0)
        builder.add_psd_entry(0, s, 0, 0, -1.0)
        builder.set_rhs(0, 1.0)
        builder.add_psd_objective(x, 0, 0, 1.0)
        solution = solve(builder.build())
        assert solution.is_optimal
        assert solution.primal_blocks[0][0, 0] == pytest.approx(1.0, abs=1e-6)
        assert solution.iterations < 50

    def test_trace_with_fixed_diagonal(self):
        builder = SdpBuilder()
        X = builder.add_psd_block("X", 2)
        builder.add_psd_entry(0, X, 0, 0, 1.0)
        builder.set_rhs(0, 1.0)
        builder.add_psd_entry(1, X, 1, 1, 1.0)
        builder.set_rhs(1, 2.0)
        builder.add_psd_objective(X, 0, 0, 1.0)
        builder.add_psd_objective(X, 1, 1, 1.0)
        solution = solve(builder.build())
        assert solution.is_optimal
        assert solution.primal_objective == pytest.approx(3.0, abs=1e-6)
        assert abs(solution.primal_blocks[0][0, 1]) < 1e-4
        assert solution.iterations < 50

    def test_largest_off_diagonal(self):
        # maximize t subject to [[1, t], [t, 1]] PSD, written as minimizing -t
        builder = SdpBuilder()
        X = builder.add_psd_block("X", 2)
        t = builder.add_free_block("t", 1)
        builder.add_psd_entry(0, X, 0, 0, 1.0)
        builder.set_rhs(0, 1.0)
        builder.add_psd_entry(1, X, 1, 1, 1.0)
        builder.set_rhs(1, 1.0)
        builder.add_psd_entry(2, X, 0, 1, 1.0)
        builder.add_free_entry(2, t, 0, -1.0)
        builder.add_free_objective(t, 0, -1.0)
        solution = solve(builder.build())
        assert solution.is_optimal
        assert solution.free_values[0][0] == pytest.approx(1.0, abs=1e-6)
        assert solution.iterations < 50

    def test_perturbed_solution_fails_the_check(self):
        problem = trace_one_problem(np.diag([1.0, 2.0]))
        solution = solve(problem)
        bumped = [X.copy() for X in solution.primal_blocks]
        bumped[0][0, 0] += 1e-2
        report = check_certificate(problem, solution.model_copy(update={"primal_blocks": bumped}))
        assert report.primal_abs >= 1e-3

    def test_zero_solution_residual_is_rhs_norm(self):
        problem = free_variable_problem()
        solution = solve(problem)
        zeros = solution.model_copy(update={
            "primal_blocks": [np.zeros((2, 2))],
            "free_values": [np.zeros(1)],
        })
        report = check_certificate(problem, zeros)
        assert report.primal_abs == pytest.approx(np.linalg.norm(problem.rhs))

    def test_runs_are_deterministic(self):
        problem = free_variable_problem()
        first, second = solve(problem), solve(problem)
        assert first.iterations == second.iterations
        assert first.primal_objective == second.primal_objective
        assert first.dual_objective == second.dual_objective

    def test_weak_duality_at_the_optimum(self, rng):
        solution = solve(random_instance(rng))
        assert solution.primal_objective >= solution.dual_objective - 1e-7

    def test_elimination_agrees_on_random_instances(self, rng):
        for _ in range(20):
            problem = random_instance(rng)
            direct = solve(problem)
            reduced, _ = eliminate_free(problem)
            via_reduction = solve(reduced)
            assert direct.is_optimal and via_reduction.is_optimal
            scale = 1.0 + abs(direct.primal_objective)
            assert abs(direct.primal_objective - via_reduction.primal_objective) <= 1e-6 * scale

    def test_weak_duality_at_every_feasible_iterate(self, rng):
        for _ in range(5):
            solution = solve(random_instance(rng))
            assert solution.is_optimal
            feasible = [
                record for record in solution.history
                if max(record.pfeas, record.dfeas) <= 1e-8
            ]
            assert feasible
            for record in feasible:
                slack = 1e-6 * (1.0 + abs(record.pobj) + abs(record.dobj))
                assert record.pobj >= record.dobj - slack


@pytest.mark.unit
class TestNumericalRecovery:
    def setup_method(self):
        self.problem = trace_one_problem(np.diag([1.0, 2.0]))

    def test_failed_factorization_is_retried_with_a_shift(self, monkeypatch):
        original = InteriorPointSolver._step
        shifts = []

        def fails_once(solver, X, Z, rp, Rd, rf, mu, reg, shift=0.0):
            shifts.append(shift)
            if len(shifts) == 1:
                return None
            return original(solver, X, Z, rp, Rd, rf, mu, reg, shift)

        monkeypatch.setattr(InteriorPointSolver, "_step", fails_once)
        solution = solve(self.problem)
        assert solution.is_optimal
        assert solution.primal_objective == pytest.approx(1.0, abs=1e-6)
        assert shifts[0] == 0.0
        assert shifts[1] > 0.0

    def test_exhausted_retries_report_numerical_failure(self, monkeypatch):
        calls = []

        def never_factors(solver, *args, **kwargs):
            calls.append(args)
            return None

        monkeypatch.setattr(InteriorPointSolver, "_step", never_factors)
        solver = InteriorPointSolver(self.problem)
        solution = solver.solve()
        assert solution.status == SolverStatus.NUMERICAL_FAILURE
        assert len(calls) == solver.factor_retries + 1

    def test_step_leaving_the_cone_is_halved(self):
        solver = InteriorPointSolver(self.problem)
        identity = np.eye(2)
        step = ([-2.0 * identity], np.zeros(0), np.zeros(1), [np.zeros((2, 2))], 1.0, 1.0)
        X, Z, _, _, step_p, step_d = solver._advance([identity], [identity], np.zeros(0), np.zeros(1), step)
        assert step_p == pytest.approx(0.25)
        assert step_d == pytest.approx(0.25)
        assert np.allclose(X[0], 0.5 * identity)
        assert np.allclose(Z[0], identity)

    def test_no_backtracking_budget_gives_up(self):
        solver = InteriorPointSolver(self.problem)
        solver.step_backtracks = 0
        identity = np.eye(2)
        step = ([-2.0 * identity], np.zeros(0), np.zeros(1), [np.zeros((2, 2))], 1.0, 1.0)
        assert solver._advance([identity], [identity], np.zeros(0), np.zeros(1), step) is None
