"""
Command-line surface: problem files, artifacts and sub-commands
"""

from cli.artifacts import Artifact, read_artifact, write_artifact
from cli.commands import cmd_export, cmd_gap, cmd_grid, cmd_moments, cmd_solve, cmd_sweep, parse_range, parse_section
from cli.problem_file import build_problem, format_problem, load_problem, parse_problem_text, read_problem, write_problem
from cli.registry import REGISTRY, example_names, example_text, examples_registry, write_examples

__all__ = [
    "Artifact",
    "read_artifact",
    "write_artifact",
    "cmd_solve",
    "cmd_sweep",
    "cmd_grid",
    "cmd_moments",
    "cmd_export",
    "cmd_gap",
    "parse_range",
    "parse_section",
    "parse_problem_text",
    "format_problem",
    "read_problem",
    "write_problem",
    "build_problem",
    "load_problem",
    "REGISTRY",
    "examples_registry",
    "example_names",
    "example_text",
    "write_examples",
]
