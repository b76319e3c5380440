"""
Block SDP data model, interior-point solver and sparse text format
"""

from sdpcore.certificate import check_certificate, eliminate_free, recover_free
from sdpcore.problem import BlockSpec, SdpBuilder, SdpProblem, pack, packed_index, unpack_values
from sdpcore.solver import InteriorPointSolver, SdpSolution, solve
from sdpcore.sparse_format import export_sdp, format_sdp, parse_sdp, read_sdp

__all__ = [
    "BlockSpec",
    "SdpBuilder",
    "SdpProblem",
    "SdpSolution",
    "InteriorPointSolver",
    "solve",
    "check_certificate",
    "eliminate_free",
    "recover_free",
    "pack",
    "packed_index",
    "unpack_values",
    "export_sdp",
    "format_sdp",
    "parse_sdp",
    "read_sdp",
]
