"""
Compile PMI inner approximations into block SDPs and read back certificates
"""

from sdpcore import SdpProblem
from sosbuild.assembly import InnerProgram, build_inner_sdp
from sosbuild.extract import InnerApprox, extract_solution, identity_residuals
from sosbuild.gram import GramBlock, gram_bases
from sosbuild.moment_form import build_moment_sdp, dual_program, duality_gap
from sosbuild.pipeline import solve_chain, solve_inner
from sosbuild.problem import MultiplierDegrees, PmiProblem, minimal_order, multiplier_degrees
from sosbuild.sphere import reduce_monomial, sphere_divide, sphere_reduce

__all__ = [
    "PmiProblem",
    "SdpProblem",
    "MultiplierDegrees",
    "minimal_order",
    "multiplier_degrees",
    "sphere_reduce",
    "sphere_divide",
    "reduce_monomial",
    "GramBlock",
    "gram_bases",
    "InnerProgram",
    "build_inner_sdp",
    "InnerApprox",
    "extract_solution",
    "identity_residuals",
    "build_moment_sdp",
    "dual_program",
    "duality_gap",
    "solve_inner",
    "solve_chain",
]
