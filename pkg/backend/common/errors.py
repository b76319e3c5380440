"""
Error taxonomy shared by every package.

Each error carries the process exit code the command line reports for it,
the way an HTTP handler would carry a status code.
"""

from typing import Optional


class PmiError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, *, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ParseError(PmiError):
    exit_code = 2


class DimensionError(PmiError):
    exit_code = 2


class DegenerateSimplexError(PmiError):
    exit_code = 2


class InfeasibleSectionError(PmiError):
    exit_code = 2


class DegreeError(PmiError):
    exit_code = 3


class SolverError(PmiError):
    """Non-optimal solver outcome surfaced to callers that need an optimum."""

    exit_code = 4

    def __init__(self, detail: str, status: Optional[str] = None):
        super().__init__(detail)
        self.status = status


class InfeasibleProblemError(SolverError):
    pass


class VerificationError(PmiError):
    exit_code = 5


class AsymmetricMatrixError(PmiError):
    exit_code = 5


class EmptySampleError(PmiError):
    exit_code = 5
