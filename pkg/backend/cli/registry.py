"""
Built-in problems, kept byte-identical to the files under problems/
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from common.config import get_settings
from common.errors import ParseError
from common.schemas import ProblemSpec
from cli.problem_file import parse_problem_text
from stability import section_bounding_simplex

logger = logging.getLogger(__name__)

PLANAR_BOX = """\
# pmi-inner problem v1
[problem]
name = planar-box
description = Nonconvex planar PMI set embedded in the unit box

[variables]
n = 2
p = 0
m = 2

[matrix]
p11 = 1 - 16*x1*x2
p12 = x1
p22 = 1 - x1^2 - x2^2

[bounding]
kind = box
bounds = -1 1; -1 1

[options]
degrees = 2 3 4
"""

PLANAR_DISK = """\
# pmi-inner problem v1
[problem]
name = planar-disk
description = Nonconvex planar PMI set embedded in the unit disk

[variables]
n = 2
p = 0
m = 2

[matrix]
p11 = 1 - 16*x1*x2
p12 = x1
p22 = 1 - x1^2 - x2^2

[bounding]
kind = ball
center = 0 0
radius = 1

[options]
degrees = 2 3 4
"""

HERMITE3 = """\
# pmi-inner problem v1
[problem]
name = hermite3
description = Schur-stable monic cubics z^3 + x1*z^2 + x2*z + x3 over the stability body

[variables]
n = 3
p = 0
m = 3

[matrix]
hermite = x1; x2; x3

[bounding]
kind = pushforward
order = 3

[options]
degrees = 2 3
"""

HERMITE4 = """\
# pmi-inner problem v1
[problem]
name = hermite4
description = Stable designs z^4 - (2*x1 + x2)*z^3 + 2*x1*z + x2 over a triangle of the stability simplex

[variables]
n = 2
p = 0
m = 4

[matrix]
hermite = -2*x1 - x2; 0; 2*x1; x2

[bounding]
kind = simplex
vertices = -0.25 1; 0.875 -0.5; -0.625 -0.5

[options]
degrees = 2 3 4
"""

HERMITE4_ROBUST = """\
# pmi-inner problem v1
[problem]
name = hermite4-robust
description = Designs z^4 - (2*x1 + x2)*z^3 + 2*x1*z + x2 + u1 robustly stable for u1^2 <= 1/16

[variables]
n = 2
p = 1
m = 4

[matrix]
hermite = -2*x1 - x2; 0; 2*x1; x2 + u1

[uncertainty]
bounds = -0.25 0.25
a1 = 0.0625 - u1^2

[bounding]
kind = simplex
vertices = -0.25 1; 0.875 -0.5; -0.625 -0.5

[options]
degrees = 2
u_grid = 33
"""

REGISTRY: Dict[str, str] = {
    "planar-box": PLANAR_BOX,
    "planar-disk": PLANAR_DISK,
    "hermite3": HERMITE3,
    "hermite4": HERMITE4,
    "hermite4-robust": HERMITE4_ROBUST,
}

# monic coefficients a_3..a_0 of the hermite4 designs as A @ x
_HERMITE4_DESIGN = [[-2.0, -1.0], [0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]

DESIGN_SECTIONS: Dict[str, Tuple[int, List[List[float]]]] = {
    "hermite4": (4, _HERMITE4_DESIGN),
    "hermite4-robust": (4, _HERMITE4_DESIGN),
}


def section_vertices(name: str) -> np.ndarray:
    """Triangle of the stability simplex cut out by a built-in design section."""
    order, A = DESIGN_SECTIONS[name]
    return section_bounding_simplex(order, A)


def _check_section(spec: ProblemSpec) -> None:
    expected = section_vertices(spec.name)
    listed = np.asarray(spec.bounding.vertices, dtype=float)
    matched = len(listed) == len(expected) and all(
        np.any(np.all(np.abs(expected - vertex) <= 1e-9, axis=1)) for vertex in listed
    )
    if not matched:
        raise ParseError(
            f"built-in problem '{spec.name}' lists vertices {listed.tolist()}, "
            f"but its design section gives {expected.tolist()}"
        )


def examples_registry() -> Dict[str, ProblemSpec]:
    """The five built-in problems, parsed; design-section triangles are checked against the simplex."""
    specs = {name: parse_problem_text(text, source=f"{name}.pmi") for name, text in REGISTRY.items()}
    for name in DESIGN_SECTIONS:
        _check_section(specs[name])
    return specs


def example_names() -> List[str]:
    return list(REGISTRY)


def example_text(name: str) -> str:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ParseError(f"unknown built-in problem '{name}'; choose from {example_names()}") from None


def write_examples(directory: Optional[Path] = None) -> List[Path]:
    """Write every built-in problem as <name>.pmi into directory (default: the problems dir)."""
    directory = Path(directory or get_settings().problems_dir)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in REGISTRY.items():
        path = directory / f"{name}.pmi"
        path.write_text(text, encoding="utf-8")
        written.append(path)
    logger.info(f"Wrote {len(written)} problem files to {directory}")
    return written
