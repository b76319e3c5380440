"""
Common schemas and models for the PMI inner-approximation toolkit
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class Variant(str, Enum):
    PLAIN = "plain"
    NESTED = "nested"
    CONVEX = "convex"


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"


class BoundingKind(str, Enum):
    BOX = "box"
    BALL = "ball"
    SIMPLEX = "simplex"
    POLYTOPE = "polytope"
    PUSHFORWARD = "pushforward"


# Solver reporting
class IterationRecord(BaseModel):
    iteration: int
    pobj: float
    dobj: float
    pfeas: float
    dfeas: float
    gap: float
    complementarity: float
    mu: float
    step_p: float = 0.0
    step_d: float = 0.0

    def log_line(self) -> str:
        return (
            f"iter={self.iteration} pobj={self.pobj:.10e} dobj={self.dobj:.10e} "
            f"pfeas={self.pfeas:.3e} dfeas={self.dfeas:.3e} gap={self.gap:.3e} "
            f"mu={self.mu:.3e} step_p={self.step_p:.4f} step_d={self.step_d:.4f}"
        )


class ResidualReport(BaseModel):
    primal_abs: float
    primal_rel: float
    dual_abs: float
    dual_rel: float
    gap_abs: float
    gap_rel: float
    min_eig_primal: float
    min_eig_dual: float

    def within(self, tol: float) -> bool:
        return max(self.primal_rel, self.dual_rel, self.gap_rel) <= tol


# Verification reporting
class SampleReport(BaseModel):
    samples: int
    violations: int
    worst_margin: float
    seed: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


class MembershipResult(BaseModel):
    inside: bool
    margin: float


class VolumeEstimate(BaseModel):
    estimate: float
    std_error: float
    samples: int
    seed: Optional[int] = None


class GapEstimate(BaseModel):
    """Monte-Carlo estimate of the L1 distance between lambda and g over B."""

    estimate: float
    std_error: float
    samples: int
    violations: int
    seed: Optional[int] = None


class GapReport(BaseModel):
    sos_objective: float
    moment_objective: float
    absolute: float
    relative: float
    sos_status: SolverStatus
    moment_status: SolverStatus


class SweepRow(BaseModel):
    d: int
    status: str
    objective: Optional[float] = None
    rho_hat: Optional[float] = None
    rho_se: Optional[float] = None
    volume_hat: Optional[float] = None
    volume_se: Optional[float] = None
    violations: Optional[int] = None
    nested_min_gap: Optional[float] = None
    error: Optional[str] = None


class SolveSummary(BaseModel):
    name: str
    d: int
    variant: Variant
    status: SolverStatus
    objective: float
    iterations: int
    identity_residual: float
    residuals: Optional[ResidualReport] = None
    soundness: Optional[SampleReport] = None
    hessian_max: Optional[float] = None


# Problem documents
class BoundingSpec(BaseModel):
    kind: BoundingKind
    bounds: List[Tuple[float, float]] = Field(default_factory=list)
    center: List[float] = Field(default_factory=list)
    radius: Optional[float] = None
    vertices: List[List[float]] = Field(default_factory=list)
    order: Optional[int] = None

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.kind == BoundingKind.BOX and not self.bounds:
            raise ValueError("box bounding set needs 'bounds'")
        if self.kind == BoundingKind.BOX and any(lo >= hi for lo, hi in self.bounds):
            raise ValueError("box bounds must satisfy lo < hi")
        if self.kind == BoundingKind.BALL and (self.radius is None or self.radius <= 0 or not self.center):
            raise ValueError("ball bounding set needs 'center' and a positive 'radius'")
        if self.kind in (BoundingKind.SIMPLEX, BoundingKind.POLYTOPE) and not self.vertices:
            raise ValueError(f"{self.kind.value} bounding set needs 'vertices'")
        if self.kind == BoundingKind.PUSHFORWARD and (self.order is None or self.order < 1):
            raise ValueError("pushforward bounding set needs a positive 'order'")
        return self

    def dimension(self) -> int:
        if self.kind == BoundingKind.BOX:
            return len(self.bounds)
        if self.kind == BoundingKind.BALL:
            return len(self.center)
        if self.kind == BoundingKind.PUSHFORWARD:
            return int(self.order)
        return len(self.vertices[0])


class OptionsSpec(BaseModel):
    degrees: List[int] = Field(default_factory=list)
    variant: Variant = Variant.PLAIN
    tol: Optional[float] = Field(default=None, gt=0)
    seed: Optional[int] = None
    u_grid: Optional[int] = Field(default=None, ge=1)


class ProblemSpec(BaseModel):
    """Validated content of a .pmi problem file."""

    name: str
    description: str = ""
    n: int = Field(ge=1)
    p: int = Field(default=0, ge=0)
    m: int = Field(ge=1)
    matrix: Dict[str, str] = Field(default_factory=dict)
    hermite: List[str] = Field(default_factory=list)
    uncertainty: List[str] = Field(default_factory=list)
    u_bounds: List[Tuple[float, float]] = Field(default_factory=list)
    bounding: BoundingSpec
    options: OptionsSpec = Field(default_factory=OptionsSpec)

    @model_validator(mode="after")
    def check_dimensions(self):
        if self.hermite:
            if self.matrix:
                raise ValueError("matrix section takes either explicit entries or hermite coefficients, not both")
            if len(self.hermite) != self.m:
                raise ValueError(f"{len(self.hermite)} hermite coefficients for a {self.m}x{self.m} matrix")
        else:
            expected = {f"p{i + 1}{j + 1}" for i in range(self.m) for j in range(i, self.m)}
            missing = sorted(expected - set(self.matrix))
            extra = sorted(set(self.matrix) - expected)
            if missing:
                raise ValueError(f"matrix section is missing entries {missing}")
            if extra:
                raise ValueError(f"matrix section has entries {extra} outside a {self.m}x{self.m} upper triangle")
        if self.bounding.dimension() != self.n:
            raise ValueError(f"bounding set has dimension {self.bounding.dimension()}, problem has n={self.n}")
        if self.u_bounds and len(self.u_bounds) != self.p:
            raise ValueError(f"{len(self.u_bounds)} uncertainty bounds given for p={self.p}")
        if self.p > 0 and not self.u_bounds and not self.uncertainty:
            raise ValueError("uncertain parameters need constraints or bounds")
        return self
