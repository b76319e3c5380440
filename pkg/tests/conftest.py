"""
Test configuration and fixtures for the pmi-inner packages
"""
import os
import sys

import numpy as np
import pytest

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'backend'))

from cli.problem_file import build_problem, parse_problem_text  # noqa: E402
from cli.registry import REGISTRY  # noqa: E402
from common.config import get_settings  # noqa: E402
from polyalg import MatrixPolynomial, Polynomial, Universe  # noqa: E402

PROBLEMS_DIR = os.path.join(os.path.dirname(__file__), '..', 'problems')


@pytest.fixture(autouse=True)
def fresh_settings():
    """Re-read settings for every test so monkeypatched PMI_* variables take effect."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def problems_dir():
    return PROBLEMS_DIR


def load_builtin(name: str):
    spec = parse_problem_text(REGISTRY[name], source=f"{name}.pmi")
    return spec, build_problem(spec)


@pytest.fixture(scope="session")
def planar_box():
    return load_builtin("planar-box")[1]


@pytest.fixture(scope="session")
def planar_disk():
    return load_builtin("planar-disk")[1]


@pytest.fixture(scope="session")
def hermite4():
    return load_builtin("hermite4")[1]


@pytest.fixture(scope="session")
def hermite4_robust():
    return load_builtin("hermite4-robust")[1]


@pytest.fixture(scope="session")
def planar_matrix():
    """[[1 - 16 x1 x2, x1], [x1, 1 - x1^2 - x2^2]] over Universe(2, 0, 2)."""
    universe = Universe(2, 0, 2)
    x1 = Polynomial.variable(universe, 0)
    x2 = Polynomial.variable(universe, 1)
    return MatrixPolynomial.from_rows([
        [1 - 16 * x1 * x2, x1],
        [x1, 1 - x1 * x1 - x2 * x2],
    ])


@pytest.fixture(scope="session")
def planar_solutions(planar_box):
    """Plain solutions of the planar box problem at orders 2 and 3, solved once per session."""
    from sosbuild import solve_inner

    return {d: solve_inner(planar_box, d) for d in (2, 3)}
