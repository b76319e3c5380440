"""
Plain-text solution artifacts.

    # pmi-inner artifact v1
    key = value            (one per line: name, d, variant, status, objective, diagnostics)
    g = <canonical polynomial>
    ## problem
    <the .pmi text the solution was computed for>
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, Field

from common.config import get_settings
from common.errors import ParseError
from common.schemas import ProblemSpec, SampleReport, Variant
from cli.problem_file import format_problem, parse_problem_text
from polyalg import Polynomial, Universe, format_polynomial, parse_polynomial

logger = logging.getLogger(__name__)

HEADER = "# pmi-inner artifact v1"
PROBLEM_MARKER = "## problem"


def _value_text(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class Artifact(BaseModel):
    name: str
    d: int
    variant: Variant
    status: str
    objective: float
    fields: Dict[str, str] = Field(default_factory=dict)
    g_text: str
    problem_text: str

    @classmethod
    def from_solution(
        cls,
        spec: ProblemSpec,
        approx,
        soundness: Optional[SampleReport] = None,
        extra: Optional[Dict[str, Any]] = None,
    ) -> "Artifact":
        diagnostics = approx.diagnostics
        fields: Dict[str, str] = {}
        for key in (
            "iterations",
            "primal_objective",
            "dual_objective",
            "primal_feasibility",
            "dual_feasibility",
            "gap",
            "identity_residual",
            "gram_min_eigenvalue",
            "rows",
        ):
            if key in diagnostics:
                fields[key] = _value_text(diagnostics[key])
        if soundness is not None:
            fields["soundness_samples"] = str(soundness.samples)
            fields["soundness_violations"] = str(soundness.violations)
            fields["soundness_worst_margin"] = _value_text(soundness.worst_margin)
            fields["soundness_seed"] = str(soundness.seed)
        for key, value in (extra or {}).items():
            fields[key] = _value_text(value)
        g_text = format_polynomial(approx.g, tol=get_settings().drop_tolerance)
        return cls(
            name=spec.name,
            d=approx.d,
            variant=approx.variant,
            status=str(diagnostics.get("status", "optimal")),
            objective=float(approx.objective_value),
            fields=fields,
            g_text=g_text,
            problem_text=format_problem(spec),
        )

    def to_text(self) -> str:
        lines = [
            HEADER,
            f"name = {self.name}",
            f"d = {self.d}",
            f"variant = {self.variant.value}",
            f"status = {self.status}",
            f"objective = {float(self.objective)!r}",
        ]
        lines += [f"{key} = {value}" for key, value in self.fields.items()]
        lines.append(f"g = {self.g_text}")
        lines.append(PROBLEM_MARKER)
        return "\n".join(lines) + "\n" + self.problem_text

    @classmethod
    def from_text(cls, text: str, source: str = "<artifact>") -> "Artifact":
        head, marker, problem_text = text.partition("\n" + PROBLEM_MARKER + "\n")
        lines = head.splitlines()
        if not lines or lines[0].strip() != HEADER:
            raise ParseError(f"{source}: not a pmi-inner artifact (expected '{HEADER}')")
        if not marker:
            raise ParseError(f"{source}: artifact has no '{PROBLEM_MARKER}' section")
        values: Dict[str, str] = {}
        for line in lines[1:]:
            if not line.strip():
                continue
            key, sep, value = line.partition(" = ")
            if not sep:
                raise ParseError(f"{source}: malformed artifact line {line!r}")
            values[key.strip()] = value.strip()
        try:
            core = {key: values.pop(key) for key in ("name", "d", "variant", "status", "objective", "g")}
        except KeyError as exc:
            raise ParseError(f"{source}: artifact is missing '{exc.args[0]}'") from None
        try:
            return cls(
                name=core["name"],
                d=int(core["d"]),
                variant=Variant(core["variant"]),
                status=core["status"],
                objective=float(core["objective"]),
                fields=values,
                g_text=core["g"],
                problem_text=problem_text,
            )
        except ValueError as exc:
            raise ParseError(f"{source}: {exc}") from exc

    def spec(self) -> ProblemSpec:
        return parse_problem_text(self.problem_text, source=f"{self.name} artifact")

    def polynomial(self) -> Polynomial:
        spec = self.spec()
        return parse_polynomial(self.g_text, Universe(spec.n))


def write_artifact(artifact: Artifact, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(artifact.to_text(), encoding="utf-8")
    logger.info(f"Wrote artifact {path}")
    return path


def read_artifact(path) -> Artifact:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read artifact {path}: {exc.strerror}") from exc
    return Artifact.from_text(text, source=str(path))


def default_artifact_path(name: str, d: int, variant: Variant) -> Path:
    return Path(get_settings().artifact_dir) / f"{name}-d{d}-{Variant(variant).value}.txt"
