"""
Reading, writing and instantiating .pmi problem files.

A problem file is INI text with the sections [problem], [variables], [matrix],
[uncertainty], [bounding] and [options]. Polynomials use the names x1..xn,
u1..up; the matrix is given either entry by entry (p11, p12, ... over the
upper triangle) or as ``hermite = c1; c2; ...``, the Hermite matrix of the
monic polynomial z^m + c1 z^(m-1) + ... + cm with polynomial coefficients.
Lists of number tuples separate tuples with ';' and numbers with spaces.
"""

import configparser
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from common.errors import ParseError
from common.schemas import BoundingKind, BoundingSpec, OptionsSpec, ProblemSpec, Variant
from moments import source_from_spec
from polyalg import MatrixPolynomial, Polynomial, Universe, format_polynomial, parse_polynomial
from polyalg.textio import format_number
from sosbuild.problem import PmiProblem
from stability import hermite_matrix

logger = logging.getLogger(__name__)

HEADER = "# pmi-inner problem v1"
SECTIONS = ("problem", "variables", "matrix", "uncertainty", "bounding", "options")


def _numbers(text: str, where: str) -> List[float]:
    try:
        return [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise ParseError(f"{where}: expected numbers, got {text!r}") from exc


def _tuples(text: str, where: str) -> List[List[float]]:
    return [_numbers(chunk, where) for chunk in text.split(";") if chunk.strip()]


def _int(section, key: str, default: Optional[int] = None) -> int:
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ParseError(f"[{section.name}] is missing '{key}'")
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"[{section.name}] {key} must be an integer, got {raw!r}") from exc


def _canonical(text: str, universe: Universe, where: str) -> str:
    try:
        return format_polynomial(parse_polynomial(text, universe))
    except ParseError as exc:
        raise ParseError(f"{where}: {exc.detail}") from exc


def parse_problem_text(text: str, source: str = "<text>") -> ProblemSpec:
    """Parse .pmi text into a validated ProblemSpec with canonical polynomial strings."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(f"{source}: {exc}") from exc
    unknown = [name for name in parser.sections() if name not in SECTIONS]
    if unknown:
        raise ParseError(f"{source}: unknown sections {unknown}")
    for required in ("problem", "variables", "matrix", "bounding"):
        if not parser.has_section(required):
            raise ParseError(f"{source}: missing section [{required}]")

    variables = parser["variables"]
    n, p, m = _int(variables, "n"), _int(variables, "p", 0), _int(variables, "m")
    if n < 1 or m < 1 or p < 0:
        raise ParseError(f"{source}: dimensions must satisfy n >= 1, m >= 1, p >= 0")
    universe = Universe(n, p, m)

    matrix_section = parser["matrix"]
    matrix: Dict[str, str] = {}
    hermite: List[str] = []
    for key, value in matrix_section.items():
        if key == "hermite":
            hermite = [_canonical(c, universe, f"{source} [matrix] hermite") for c in value.split(";")]
        else:
            matrix[key] = _canonical(value, universe, f"{source} [matrix] {key}")

    uncertainty: List[str] = []
    u_bounds: List[Tuple[float, float]] = []
    if parser.has_section("uncertainty"):
        section = parser["uncertainty"]
        for key, value in section.items():
            if key == "bounds":
                pairs = _tuples(value, f"{source} [uncertainty] bounds")
                if any(len(pair) != 2 for pair in pairs):
                    raise ParseError(f"{source}: uncertainty bounds must be 'lo hi' pairs")
                u_bounds = [(pair[0], pair[1]) for pair in pairs]
            elif key.startswith("a") and key[1:].isdigit():
                uncertainty.append(_canonical(value, universe, f"{source} [uncertainty] {key}"))
            else:
                raise ParseError(f"{source}: unknown key '{key}' in [uncertainty]")

    bounding_section = parser["bounding"]
    where = f"{source} [bounding]"
    fields: Dict[str, object] = {"kind": bounding_section.get("kind", "").strip()}
    if "bounds" in bounding_section:
        fields["bounds"] = [tuple(pair) for pair in _tuples(bounding_section["bounds"], where)]
    if "center" in bounding_section:
        fields["center"] = _numbers(bounding_section["center"], where)
    if "radius" in bounding_section:
        fields["radius"] = _numbers(bounding_section["radius"], where)[0]
    if "vertices" in bounding_section:
        fields["vertices"] = _tuples(bounding_section["vertices"], where)
    if "order" in bounding_section:
        fields["order"] = _int(bounding_section, "order")

    options: Dict[str, object] = {}
    if parser.has_section("options"):
        section = parser["options"]
        if "degrees" in section:
            options["degrees"] = [int(v) for v in _numbers(section["degrees"], f"{source} [options] degrees")]
        for key in ("variant", "tol", "seed", "u_grid"):
            if key in section:
                options[key] = section[key].strip()

    try:
        return ProblemSpec(
            name=parser["problem"].get("name", Path(source).stem).strip(),
            description=parser["problem"].get("description", "").strip(),
            n=n,
            p=p,
            m=m,
            matrix=matrix,
            hermite=hermite,
            uncertainty=uncertainty,
            u_bounds=u_bounds,
            bounding=BoundingSpec(**fields),
            options=OptionsSpec(**options),
        )
    except ValidationError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def read_problem(path) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read problem file {path}: {exc.strerror}") from exc
    return parse_problem_text(text, source=str(path))


def _join_tuples(rows: Sequence[Sequence[float]]) -> str:
    return "; ".join(" ".join(format_number(v) for v in row) for row in rows)


def format_problem(spec: ProblemSpec) -> str:
    """Canonical .pmi text; parse_problem_text(format_problem(s)) reproduces s."""
    lines = [HEADER, "[problem]", f"name = {spec.name}"]
    if spec.description:
        lines.append(f"description = {spec.description}")
    lines += ["", "[variables]", f"n = {spec.n}", f"p = {spec.p}", f"m = {spec.m}", "", "[matrix]"]
    if spec.hermite:
        lines.append("hermite = " + "; ".join(spec.hermite))
    else:
        for i in range(spec.m):
            for j in range(i, spec.m):
                key = f"p{i + 1}{j + 1}"
                lines.append(f"{key} = {spec.matrix[key]}")
    if spec.p or spec.uncertainty:
        lines += ["", "[uncertainty]"]
        if spec.u_bounds:
            lines.append(f"bounds = {_join_tuples(spec.u_bounds)}")
        lines += [f"a{i + 1} = {text}" for i, text in enumerate(spec.uncertainty)]

    bounding = spec.bounding
    lines += ["", "[bounding]", f"kind = {bounding.kind.value}"]
    if bounding.kind == BoundingKind.BOX:
        lines.append(f"bounds = {_join_tuples(bounding.bounds)}")
    elif bounding.kind == BoundingKind.BALL:
        lines.append(f"center = {' '.join(format_number(c) for c in bounding.center)}")
        lines.append(f"radius = {format_number(bounding.radius)}")
    elif bounding.kind == BoundingKind.PUSHFORWARD:
        lines.append(f"order = {bounding.order}")
    else:
        lines.append(f"vertices = {_join_tuples(bounding.vertices)}")

    options = spec.options
    option_lines = []
    if options.degrees:
        option_lines.append(f"degrees = {' '.join(str(d) for d in options.degrees)}")
    if options.variant != Variant.PLAIN:
        option_lines.append(f"variant = {options.variant.value}")
    if options.tol is not None:
        option_lines.append(f"tol = {format_number(options.tol)}")
    if options.seed is not None:
        option_lines.append(f"seed = {options.seed}")
    if options.u_grid is not None:
        option_lines.append(f"u_grid = {options.u_grid}")
    if option_lines:
        lines += ["", "[options]"] + option_lines
    return "\n".join(lines) + "\n"


def write_problem(spec: ProblemSpec, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_problem(spec), encoding="utf-8")
    return path


def problem_matrix(spec: ProblemSpec, universe: Universe) -> MatrixPolynomial:
    """P(x, u) over universe, from explicit entries or by substitution into the Hermite matrix."""
    if spec.hermite:
        coefficients = [parse_polynomial(text, universe) for text in spec.hermite]
        for poly in coefficients:
            if not poly.depends_only_on(list(universe.x_slots) + list(universe.u_slots)):
                raise ParseError("hermite coefficients may only involve x and u variables")
        instance = hermite_matrix(spec.m)
        return instance.P.substitute(dict(enumerate(coefficients)), universe)
    upper = {}
    for i in range(spec.m):
        for j in range(i, spec.m):
            poly = parse_polynomial(spec.matrix[f"p{i + 1}{j + 1}"], universe)
            if not poly.depends_only_on(list(universe.x_slots) + list(universe.u_slots)):
                raise ParseError(f"matrix entry p{i + 1}{j + 1} may only involve x and u variables")
            upper[(i, j)] = poly
    return MatrixPolynomial(spec.m, universe, upper)


def build_problem(spec: ProblemSpec) -> PmiProblem:
    """Instantiate the PmiProblem a problem file describes."""
    universe = Universe(spec.n, spec.p, spec.m)
    P = problem_matrix(spec, universe)
    a: List[Polynomial] = [parse_polynomial(text, universe) for text in spec.uncertainty]
    source = source_from_spec(spec.bounding)
    logger.debug(f"Built problem {spec.name}: n={spec.n} p={spec.p} m={spec.m} B={spec.bounding.kind.value}")
    return PmiProblem.create(spec.name, P, source, a=a, u_bounds=spec.u_bounds)


def load_problem(path) -> Tuple[ProblemSpec, PmiProblem]:
    spec = read_problem(path)
    return spec, build_problem(spec)
