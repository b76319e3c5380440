"""
Compile the inner-approximation certificate into a block SDP.

The main identity, after reduction modulo (1 - v^T v), reads

    sum_k w_k sigma_k + g(x) = v^T P(x,u) v

with sigma_k SOS (Gram blocks) and weights w_k in {1, a_i, b_j}. Each reduced
monomial gives one equality row. The nested variant adds

    sum_k w_k c_k - g(x) = -g_prev(x) + eps      over x only,

with eps = nested_slack, so g >= g_prev - eps on B and the program keeps a
strictly feasible point when g_prev already touches the eigenvalue bound.
The convex variant adds

    sum_k w_k c_k + v^T Hessian(g)(x) v = 0      over (x, v), modulo the sphere,

so that -v^T Hessian(g)(x) v is certified nonnegative for x in B and |v| = 1.
Hence g is concave on B and {x in B : g(x) >= 0} is convex. The objective
maximizes the integral of g over B, written as minimization of
-sum_alpha y_alpha g_alpha.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from common.config import get_settings
from common.errors import DegreeError, DimensionError
from common.schemas import Variant
from polyalg import Monomial, Polynomial, Universe, enum_monomials, hessian, quad_form
from sdpcore import SdpBuilder, SdpProblem
from sosbuild.gram import GramBlock, gram_bases
from sosbuild.problem import MultiplierDegrees, PmiProblem, multiplier_degrees
from sosbuild.sphere import reduce_monomial, sphere_reduce

logger = logging.getLogger(__name__)

GROUP_ORDER = {"main": 0, "nested": 1, "convex": 2}

RowKey = Tuple[str, Monomial]


@dataclass
class InnerProgram:
    problem: PmiProblem
    d: int
    variant: Variant
    degrees: MultiplierDegrees
    sdp: SdpProblem
    blocks: List[GramBlock]
    g_basis: List[Monomial]
    row_keys: List[RowKey]
    row_scale: np.ndarray
    universes: Dict[str, Universe]
    targets: Dict[str, Polynomial]
    prev: Optional[Polynomial] = None
    moments: np.ndarray = field(default=None, repr=False)

    @property
    def g_block(self) -> int:
        return self.sdp.free_index("g")

    def g_from_values(self, values: np.ndarray) -> Polynomial:
        ux = self.universes["x"]
        return Polynomial(ux, {m: float(v) for m, v in zip(self.g_basis, values)})

    def summary(self) -> str:
        sizes = ",".join(str(b.size) for b in self.blocks)
        return (
            f"{self.problem.name} d={self.d} variant={self.variant.value} rows={len(self.row_keys)} "
            f"blocks=[{sizes}] g_terms={len(self.g_basis)}"
        )


class _RowTable:
    def __init__(self):
        self.entries: Dict[RowKey, Dict[Tuple[int, int, int], float]] = defaultdict(lambda: defaultdict(float))
        self.g_entries: Dict[RowKey, Dict[int, float]] = defaultdict(lambda: defaultdict(float))
        self.rhs: Dict[RowKey, float] = {}

    def add_gram(self, block_index: int, gram: GramBlock) -> None:
        universe = gram.universe
        weight_terms = list(gram.weight.terms.items())
        reduce = universe.m > 0
        basis = gram.basis
        for i in range(gram.size):
            bi = basis[i]
            for j in range(i, gram.size):
                prod = bi.times(basis[j])
                factor = gram.sign * (1.0 if i == j else 2.0)
                for wm, wc in weight_terms:
                    mono = prod.times(wm)
                    pieces = reduce_monomial(universe, mono) if reduce else ((mono, 1.0),)
                    for rm, rc in pieces:
                        self.entries[(gram.group, rm)][(block_index, i, j)] += factor * wc * rc

    def add_g(self, group: str, g_index: int, poly: Polynomial, scale: float = 1.0) -> None:
        for mono, coef in poly.terms.items():
            self.g_entries[(group, mono)][g_index] += scale * coef

    def set_rhs(self, group: str, poly: Polynomial) -> None:
        for mono, coef in poly.terms.items():
            self.rhs[(group, mono)] = self.rhs.get((group, mono), 0.0) + coef

    def ordered_keys(self) -> List[RowKey]:
        keys = set(self.entries) | set(self.g_entries)
        for key, value in self.rhs.items():
            if key in keys:
                continue
            if value != 0.0:
                group, mono = key
                raise DegreeError(
                    f"monomial {mono} of the {group} identity cannot be matched at this order; raise the degree"
                )
        return sorted(keys, key=lambda k: (GROUP_ORDER[k[0]], k[1].sort_key()))


def _embed_x(poly: Polynomial, target: Universe) -> Polynomial:
    return poly.embed(target, {s: s for s in range(poly.universe.n)})


def _lift_x(mono: Monomial, target: Universe) -> Monomial:
    return Monomial(tuple(mono) + (0,) * (target.nvars - len(mono)))


def build_inner_sdp(
    problem: PmiProblem,
    d: int,
    variant: Variant = Variant.PLAIN,
    prev: Optional[Polynomial] = None,
    extra_degree: int = 0,
    scale_rows: Optional[bool] = None,
) -> InnerProgram:
    """Assemble the SDP for relaxation order d; g has degree at most 2d."""
    variant = Variant(variant)
    settings = get_settings()
    scale_rows = settings.row_scaling if scale_rows is None else scale_rows
    degrees = multiplier_degrees(problem, d, extra_degree)
    U = problem.universe
    Ux = problem.x_universe
    universes = {"main": U, "x": Ux}

    g_basis = enum_monomials(Ux, "x", 2 * d)
    table = _RowTable()
    blocks: List[GramBlock] = []

    def add_blocks(prefix: str, group: str, universe: Universe, mask: str, half: int, weight: Polynomial, sign=1.0):
        for suffix, basis in gram_bases(universe, mask, half):
            gram = GramBlock(
                label=f"{prefix}{suffix}", group=group, universe=universe,
                basis=basis, weight=weight, sign=sign,
            )
            table.add_gram(len(blocks), gram)
            blocks.append(gram)

    # main identity: sum_k w_k sigma_k + g = v^T P v (mod sphere)
    one_U = Polynomial.constant(U, 1.0)
    add_blocks("s0", "main", U, "xuv", d + extra_degree, one_U)
    for i, (poly, half) in enumerate(zip(problem.a, degrees.s)):
        add_blocks(f"s{i + 1}", "main", U, "xuv", half, poly)
    for j, (poly, half) in enumerate(zip(problem.b, degrees.t)):
        add_blocks(f"t{j + 1}", "main", U, "xuv", half, poly)
    for k, mono in enumerate(g_basis):
        table.g_entries[("main", _lift_x(mono, U))][k] += 1.0
    target_main = sphere_reduce(quad_form(problem.P))
    table.set_rhs("main", target_main)
    targets = {"main": target_main}

    if variant == Variant.NESTED:
        if prev is None:
            raise DegreeError("nested variant needs the previous-order polynomial")
        if prev.universe != Ux:
            raise DimensionError(f"previous polynomial lives in {prev.universe}, expected {Ux}")
        if prev.degree() > 2 * d - 2:
            raise DegreeError(f"previous polynomial has degree {prev.degree()} > {2 * d - 2}")
        one_x = Polynomial.constant(Ux, 1.0)
        add_blocks("nested:c0", "nested", Ux, "x", d + extra_degree, one_x)
        for j, (poly, half) in enumerate(zip(problem.b, degrees.t)):
            add_blocks(f"nested:c{j + 1}", "nested", Ux, "x", half, _embed_x(poly, Ux))
        for k, mono in enumerate(g_basis):
            table.g_entries[("nested", mono)][k] -= 1.0
        target_nested = -prev + Polynomial.constant(Ux, settings.nested_slack)
        table.set_rhs("nested", target_nested)
        targets["nested"] = target_nested

    # c-side certifies -v^T Hess(g) v >= 0, i.e. g concave on B
    if variant == Variant.CONVEX:
        Uc = Universe(U.n, 0, U.n)
        universes["convex"] = Uc
        one_c = Polynomial.constant(Uc, 1.0)
        add_blocks("convex:c0", "convex", Uc, "xv", d + extra_degree, one_c)
        for j, (poly, half) in enumerate(zip(problem.b, degrees.t)):
            add_blocks(f"convex:c{j + 1}", "convex", Uc, "xv", half, _embed_x(poly, Uc))
        for k, mono in enumerate(g_basis):
            if mono.degree < 2:
                continue
            curvature = sphere_reduce(quad_form(hessian(Polynomial.monomial(Uc, _lift_x(mono, Uc)))))
            table.add_g("convex", k, curvature)
        targets["convex"] = Polynomial.zero(Uc)

    keys = []
    for key in table.ordered_keys():
        live = any(v != 0.0 for v in table.entries.get(key, {}).values()) or any(
            v != 0.0 for v in table.g_entries.get(key, {}).values()
        )
        if live:
            keys.append(key)
        elif table.rhs.get(key, 0.0) != 0.0:
            raise DegreeError(f"monomial {key[1]} of the {key[0]} identity cancels in every multiplier")
    builder = SdpBuilder()
    for gram in blocks:
        builder.add_psd_block(gram.label, gram.size)
    g_block = builder.add_free_block("g", len(g_basis))
    builder.reserve_rows(len(keys))

    scales = np.ones(len(keys))
    for row, key in enumerate(keys):
        entries = table.entries.get(key, {})
        g_entries = table.g_entries.get(key, {})
        if scale_rows:
            magnitude = max(
                [abs(v) for v in entries.values()] + [abs(v) for v in g_entries.values()] + [0.0]
            )
            scales[row] = magnitude if magnitude > 0 else 1.0
        inv = 1.0 / scales[row]
        for (block, i, j), value in entries.items():
            if value != 0.0:
                builder.add_psd_entry(row, block, i, j, value * inv)
        for k, value in g_entries.items():
            if value != 0.0:
                builder.add_free_entry(row, g_block, k, value * inv)
        rhs = table.rhs.get(key, 0.0)
        if rhs != 0.0:
            builder.set_rhs(row, rhs * inv)

    moments = np.array([problem.moment_source.get(m) for m in g_basis])
    for k, y in enumerate(moments):
        builder.add_free_objective(g_block, k, -float(y))

    sdp = builder.build(row_keys=keys)
    program = InnerProgram(
        problem=problem,
        d=d,
        variant=variant,
        degrees=degrees,
        sdp=sdp,
        blocks=blocks,
        g_basis=g_basis,
        row_keys=keys,
        row_scale=scales,
        universes=universes,
        targets=targets,
        prev=prev,
        moments=moments,
    )
    logger.info(f"Assembled {program.summary()}")
    return program
