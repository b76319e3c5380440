"""
Tests for problem files, artifacts and the pmi-inner command line
"""
import os
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from cli.artifacts import Artifact, read_artifact
from cli.commands import parse_range, parse_section, resolve_degree, resolve_seed, resolve_tol, resolve_variant
from cli.main import main as cli_main
from cli.problem_file import build_problem, format_problem, parse_problem_text, read_problem
from cli.registry import (
    DESIGN_SECTIONS,
    REGISTRY,
    _check_section,
    example_names,
    example_text,
    examples_registry,
    section_vertices,
)
from common.errors import ParseError
from common.schemas import SampleReport, Variant
from polyalg import Polynomial
from sdpcore import read_sdp

MINIMAL = """\
# pmi-inner problem v1
[problem]
name = tiny

[variables]
n = 1
m = 1

[matrix]
p11 = 1 - x1^2

[bounding]
kind = box
bounds = -1 1
"""


def problem_path(problems_dir, name):
    return os.path.join(problems_dir, f"{name}.pmi")


@pytest.fixture
def artifact_dir(tmp_path, monkeypatch):
    target = tmp_path / "artifacts"
    monkeypatch.setenv("PMI_ARTIFACT_DIR", str(target))
    return target


@pytest.mark.unit
class TestRegistry:
    def test_files_match_registry(self, problems_dir):
        for name in example_names():
            with open(problem_path(problems_dir, name), encoding="utf-8") as handle:
                assert handle.read() == example_text(name), name

    def test_builtin_texts_are_canonical(self):
        for name, text in REGISTRY.items():
            assert format_problem(parse_problem_text(text, source=name)) == text, name

    def test_five_problems(self):
        assert example_names() == ["planar-box", "planar-disk", "hermite3", "hermite4", "hermite4-robust"]
        specs = examples_registry()
        assert specs["hermite4-robust"].p == 1
        assert specs["hermite3"].options.degrees == [2, 3]

    def test_design_triangles_come_from_the_simplex(self):
        specs = examples_registry()
        for name in DESIGN_SECTIONS:
            expected = section_vertices(name)
            listed = np.asarray(specs[name].bounding.vertices)
            assert len(listed) == len(expected) == 3
            for vertex in expected:
                assert np.min(np.max(np.abs(listed - vertex), axis=1)) <= 1e-9, name

    def test_drifted_triangle_is_rejected(self):
        spec = examples_registry()["hermite4"]
        drifted = spec.bounding.model_copy(update={"vertices": [[-0.25, 1.0], [0.9, -0.5], [-0.625, -0.5]]})
        with pytest.raises(ParseError):
            _check_section(spec.model_copy(update={"bounding": drifted}))

    def test_unknown_example(self):
        with pytest.raises(ParseError):
            example_text("nope")


@pytest.mark.unit
class TestProblemFile:
    def test_minimal_problem(self):
        spec = parse_problem_text(MINIMAL)
        assert spec.name == "tiny"
        assert spec.p == 0
        assert spec.matrix == {"p11": "1 - x1^2"}
        assert spec.options.variant == Variant.PLAIN

    def test_polynomials_are_canonicalised(self):
        spec = parse_problem_text(MINIMAL.replace("1 - x1^2", "-(x1*x1) + 1"))
        assert spec.matrix["p11"] == "1 - x1^2"

    def test_hermite_problem_matches_displayed_entries(self):
        problem = build_problem(parse_problem_text(REGISTRY["hermite4"]))
        x1 = Polynomial.variable(problem.universe, 0)
        x2 = Polynomial.variable(problem.universe, 1)
        assert problem.P.entry(0, 0).almost_equal(1 - x2 * x2)
        assert problem.P.entry(0, 1).almost_equal(-2 * x1 - x2 - 2 * x1 * x2)

    def test_unknown_section(self):
        with pytest.raises(ParseError):
            parse_problem_text(MINIMAL + "\n[extra]\nkey = 1\n")

    def test_missing_section(self):
        with pytest.raises(ParseError):
            parse_problem_text(MINIMAL.replace("[matrix]\np11 = 1 - x1^2\n", ""))

    def test_missing_matrix_entry(self):
        text = MINIMAL.replace("m = 1", "m = 2")
        with pytest.raises(ParseError):
            parse_problem_text(text)

    def test_bad_polynomial(self):
        with pytest.raises(ParseError):
            parse_problem_text(MINIMAL.replace("1 - x1^2", "1 - y^2"))

    def test_hermite_count_must_match(self):
        text = REGISTRY["hermite4"].replace("hermite = -2*x1 - x2; 0; 2*x1; x2", "hermite = x1; x2")
        with pytest.raises(ParseError):
            parse_problem_text(text)

    def test_invalid_box(self):
        with pytest.raises(ParseError):
            parse_problem_text(MINIMAL.replace("bounds = -1 1", "bounds = 1 -1"))

    def test_matrix_entries_cannot_use_sphere_variables(self):
        with pytest.raises(ParseError):
            build_problem(parse_problem_text(MINIMAL.replace("1 - x1^2", "1 - v1^2")))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            read_problem(tmp_path / "absent.pmi")


@pytest.mark.unit
class TestOptionResolution:
    def setup_method(self):
        self.spec = parse_problem_text(MINIMAL + "\n[options]\ndegrees = 3 4\nvariant = convex\ntol = 1e-6\n")

    def test_command_line_wins(self):
        assert resolve_degree(self.spec, 5) == 5
        assert resolve_variant(self.spec, "nested") == Variant.NESTED
        assert resolve_tol(self.spec, 1e-3) == 1e-3

    def test_file_options(self):
        assert resolve_degree(self.spec, None) == 3
        assert resolve_variant(self.spec, None) == Variant.CONVEX
        assert resolve_tol(self.spec, None) == 1e-6

    def test_settings_fallback(self, monkeypatch):
        monkeypatch.setenv("PMI_DEFAULT_SEED", "42")
        assert resolve_seed(self.spec, None) == 42
        with pytest.raises(ParseError):
            resolve_degree(parse_problem_text(MINIMAL), None)

    def test_ranges(self):
        assert parse_range("2..4") == [2, 3, 4]
        assert parse_range("3-3") == [3]
        assert parse_range("1:2") == [1, 2]
        with pytest.raises(ParseError):
            parse_range("4..2")
        with pytest.raises(ParseError):
            parse_range("two")

    def test_sections(self):
        assert parse_section("x3=0,x4=0.5") == {2: 0.0, 3: 0.5}
        assert parse_section(None) == {}
        with pytest.raises(ParseError):
            parse_section("y=1")


@pytest.mark.unit
class TestCommandLine:
    def test_degree_below_minimum(self, problems_dir, artifact_dir):
        assert cli_main(["solve", problem_path(problems_dir, "planar-box"), "--degree", "1"]) == 3

    def test_empty_sweep_range(self, problems_dir):
        assert cli_main(["sweep", problem_path(problems_dir, "planar-box"), "--range", "4..2"]) == 2

    def test_missing_artifact(self, tmp_path):
        assert cli_main(["grid", str(tmp_path / "missing.txt")]) == 2

    def test_missing_problem(self, tmp_path):
        assert cli_main(["solve", str(tmp_path / "missing.pmi"), "--degree", "2"]) == 2

    def test_examples_written(self, tmp_path, capsys):
        assert cli_main(["examples", "--out", str(tmp_path)]) == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == sorted(f"{n}.pmi" for n in example_names())
        assert capsys.readouterr().out.count(".pmi") == 5

    def test_examples_listed(self, capsys):
        assert cli_main(["examples"]) == 0
        assert capsys.readouterr().out.split() == example_names()

    def test_moments_csv(self, problems_dir, tmp_path):
        out = tmp_path / "moments.csv"
        assert cli_main(["moments", problem_path(problems_dir, "planar-box"), "--degree", "2", "--out", str(out)]) == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["alpha", "moment"]
        assert frame["alpha"].tolist() == ["0 0", "1 0", "0 1", "2 0", "1 1", "0 2"]
        assert frame["moment"].iloc[0] == pytest.approx(4.0)
        assert frame["moment"].iloc[3] == pytest.approx(4.0 / 3.0)

    def test_moment_degree_bounds_the_multi_indices(self, problems_dir):
        from cli.commands import cmd_moments

        path = problem_path(problems_dir, "planar-box")
        assert cmd_moments(path, degree=1)["alpha"].tolist() == ["0 0", "1 0", "0 1"]
        assert len(cmd_moments(path)) == 15
        assert cli_main(["moments", path, "--degree", "-1"]) == 3

    def test_export(self, problems_dir, tmp_path, capsys):
        out = tmp_path / "planar.sdp"
        assert cli_main(["export", problem_path(problems_dir, "planar-box"), "--degree", "2", "--out", str(out)]) == 0
        problem = read_sdp(out)
        assert [b.label for b in problem.free_blocks] == ["g"]
        assert problem.free_blocks[0].size == 15

    def test_export_rejects_nested(self, problems_dir, tmp_path):
        args = ["export", problem_path(problems_dir, "planar-box"), "--degree", "3", "--variant", "nested",
                "--out", str(tmp_path / "x.sdp")]
        assert cli_main(args) == 2

    def test_solve_then_grid(self, problems_dir, tmp_path, capsys):
        artifact_path = tmp_path / "planar-d2.txt"
        args = ["solve", problem_path(problems_dir, "planar-box"), "--degree", "2", "--grid-res", "21",
                "--seed", "3", "--out", str(artifact_path)]
        assert cli_main(args) == 0
        printed = capsys.readouterr().out
        assert f"artifact = {artifact_path}" in printed
        assert "soundness_violations = 0" in printed

        artifact = read_artifact(artifact_path)
        assert artifact.d == 2
        assert artifact.variant == Variant.PLAIN
        assert artifact.fields["seed"] == "3"
        assert artifact.spec().name == "planar-box"
        assert Artifact.from_text(artifact.to_text()) == artifact

        grid_csv = tmp_path / "grid.csv"
        assert cli_main(["grid", str(artifact_path), "--grid-res", "11", "--out", str(grid_csv)]) == 0
        frame = pd.read_csv(grid_csv)
        assert list(frame.columns) == ["x1", "x2", "g", "lambda", "inside"]
        assert len(frame) == 121
        g = artifact.polynomial()
        assert np.allclose(frame["g"], g.evaluate(frame[["x1", "x2"]].to_numpy()))
        positive = frame[frame["g"] > 0]
        assert (positive["lambda"] >= -1e-6).all()

    def test_default_artifact_location(self, problems_dir, artifact_dir):
        assert cli_main(["solve", problem_path(problems_dir, "planar-box"), "--degree", "2", "--no-verify"]) == 0
        assert (artifact_dir / "planar-box-d2-plain.txt").exists()

    def test_malformed_artifact(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not an artifact\n")
        assert cli_main(["grid", str(path)]) == 2
        with pytest.raises(ParseError):
            Artifact.from_text("# pmi-inner artifact v1\nname = x\n## problem\n")


@pytest.mark.unit
class TestArtifactNumbers:
    def setup_method(self):
        self.spec = parse_problem_text(MINIMAL)
        universe = build_problem(self.spec).x_universe
        self.approx = SimpleNamespace(
            g=Polynomial.constant(universe, 0.5),
            d=2,
            variant=Variant.PLAIN,
            objective_value=np.float64(0.75),
            diagnostics={
                "status": "optimal",
                "iterations": np.int64(17),
                "primal_objective": np.float64(-0.75),
                "dual_objective": np.float64(-0.7500000001),
                "primal_feasibility": np.float64(3.1e-11),
                "dual_feasibility": np.float64(2.2e-12),
                "gap": np.float64(1e-10),
                "identity_residual": np.float64(5.204346024131516e-13),
                "gram_min_eigenvalue": np.float64(-1e-15),
                "rows": np.int64(12),
            },
        )

    def test_numpy_scalars_are_written_as_plain_numbers(self):
        soundness = SampleReport(samples=100, violations=0, worst_margin=np.float64(0.25), seed=0)
        extra = {"seed": np.int64(3), "hessian_max": np.float64(-2.0)}
        artifact = Artifact.from_solution(self.spec, self.approx, soundness=soundness, extra=extra)
        parsed = Artifact.from_text(artifact.to_text())
        for key, value in parsed.fields.items():
            assert "np." not in value
            float(value)
        assert float(parsed.fields["identity_residual"]) == 5.204346024131516e-13
        assert parsed.fields["iterations"] == "17"
        assert parsed.objective == 0.75


@pytest.mark.slow
class TestAcceptance:
    def test_planar_sweep(self, problems_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", problem_path(problems_dir, "planar-box"), "--range", "2..3", "--samples", "20000",
                "--seed", "1", "--out", str(out)]
        assert cli_main(args) == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["d", "status", "objective", "rho_hat", "rho_se", "volume_hat",
                                       "volume_se", "violations"]
        assert frame["d"].tolist() == [2, 3]
        assert (frame["status"] == "optimal").all()
        assert (frame["violations"] == 0).all()
        assert (frame["rho_hat"] > 0).all()
        assert frame["objective"].iloc[1] >= frame["objective"].iloc[0] - 1e-6

    def test_nested_sweep_reports_gap(self, problems_dir, tmp_path):
        out = tmp_path / "nested.csv"
        args = ["sweep", problem_path(problems_dir, "planar-box"), "--range", "2..4", "--variant", "nested",
                "--samples", "10000", "--grid-res", "41", "--out", str(out)]
        assert cli_main(args) == 0
        frame = pd.read_csv(out)
        assert "nested_min_gap" in frame.columns
        assert list(frame["d"]) == [2, 3, 4]
        assert (frame["status"] == "optimal").all()
        gaps = frame["nested_min_gap"].iloc[1:]
        assert gaps.notna().all()
        assert (gaps >= -1e-6).all()

    def test_sweep_with_workers_matches_serial(self, problems_dir):
        from cli.commands import cmd_sweep

        path = problem_path(problems_dir, "planar-disk")
        serial = cmd_sweep(path, [2, 3], samples=5000, seed=2, workers=1)
        threaded = cmd_sweep(path, [2, 3], samples=5000, seed=2, workers=2)
        pd.testing.assert_frame_equal(serial, threaded, check_exact=False, rtol=1e-8)

    def test_hermite4_solve_is_sound(self, problems_dir, tmp_path):
        out = tmp_path / "hermite4.txt"
        args = ["solve", problem_path(problems_dir, "hermite4"), "--degree", "2", "--grid-res", "41", "--out", str(out)]
        assert cli_main(args) == 0
        assert read_artifact(out).fields["soundness_violations"] == "0"

    def test_hermite3_solve_uses_samples(self, problems_dir, tmp_path):
        out = tmp_path / "hermite3.txt"
        args = ["solve", problem_path(problems_dir, "hermite3"), "--degree", "2", "--grid-res", "30", "--out", str(out)]
        assert cli_main(args) == 0
        artifact = read_artifact(out)
        assert artifact.fields["soundness_violations"] == "0"

    def test_robust_solve_is_sound(self, problems_dir, tmp_path):
        out = tmp_path / "robust.txt"
        args = ["solve", problem_path(problems_dir, "hermite4-robust"), "--grid-res", "31", "--out", str(out)]
        assert cli_main(args) == 0
        assert read_artifact(out).fields["soundness_violations"] == "0"

    def test_no_duality_gap(self, problems_dir, capsys):
        assert cli_main(["gap", problem_path(problems_dir, "planar-disk"), "--degree", "2"]) == 0
        assert "relative = " in capsys.readouterr().out

    @pytest.mark.parametrize(
        "name,d",
        [(name, d) for name, spec in examples_registry().items() for d in spec.options.degrees],
    )
    def test_every_example_is_sound_at_its_listed_orders(self, problems_dir, tmp_path, name, d):
        out = tmp_path / f"{name}-{d}.txt"
        args = ["solve", problem_path(problems_dir, name), "--degree", str(d), "--variant", "plain", "--out", str(out)]
        assert cli_main(args) == 0
        artifact = read_artifact(out)
        assert artifact.fields["soundness_violations"] == "0"
        assert float(artifact.fields["identity_residual"]) <= 1e-6

    def test_gap_shrinks_with_order_on_the_disk(self, problems_dir):
        from cli.commands import cmd_sweep

        frame = cmd_sweep(problem_path(problems_dir, "planar-disk"), [2, 3, 4], samples=200_000, seed=0)
        assert (frame["status"] == "optimal").all()
        for earlier, later in zip(frame.itertuples(), list(frame.itertuples())[1:]):
            spread = 3 * np.hypot(earlier.rho_se, later.rho_se)
            assert later.rho_hat <= earlier.rho_hat + spread

    def test_disk_bounding_set_gives_a_larger_region(self, problems_dir):
        from cli.commands import cmd_sweep

        disk = cmd_sweep(problem_path(problems_dir, "planar-disk"), [2], samples=200_000, seed=0).iloc[0]
        box = cmd_sweep(problem_path(problems_dir, "planar-box"), [2], samples=200_000, seed=0).iloc[0]
        assert disk.volume_hat - box.volume_hat > 3 * np.hypot(disk.volume_se, box.volume_se)

    def test_convex_hermite4_is_concave(self, problems_dir, tmp_path):
        out = tmp_path / "convex.txt"
        args = ["solve", problem_path(problems_dir, "hermite4"), "--degree", "2", "--variant", "convex",
                "--grid-res", "41", "--out", str(out)]
        assert cli_main(args) == 0
        artifact = read_artifact(out)
        assert float(artifact.fields["hessian_max"]) <= 1e-6
        assert artifact.fields["soundness_violations"] == "0"

    def test_same_command_gives_identical_artifacts(self, problems_dir, tmp_path):
        texts = []
        for name in ("first.txt", "second.txt"):
            out = tmp_path / name
            args = ["solve", problem_path(problems_dir, "planar-box"), "--degree", "2", "--seed", "7",
                    "--grid-res", "21", "--out", str(out)]
            assert cli_main(args) == 0
            texts.append(out.read_text())
        assert texts[0] == texts[1]

    def test_section_grid_of_a_cubic_solution(self, problems_dir, tmp_path):
        out = tmp_path / "hermite3.txt"
        args = ["solve", problem_path(problems_dir, "hermite3"), "--degree", "2", "--no-verify", "--out", str(out)]
        assert cli_main(args) == 0
        csv = tmp_path / "section.csv"
        assert cli_main(["grid", str(out), "--section", "x3=0", "--grid-res", "15", "--out", str(csv)]) == 0
        frame = pd.read_csv(csv)
        assert list(frame.columns)[:2] == ["x1", "x2"]
        assert len(frame) == 15 * 15
