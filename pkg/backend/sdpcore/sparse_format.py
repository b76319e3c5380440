"""
Sparse text export of block SDPs.

Layout (one item per line, '*' lines are comments):

    * offset <objective offset>
    * block <k> <label>          one per block, k is 1-based
    <number of equality rows m>
    <number of blocks>
    <block sizes>                PSD blocks as positive integers, free blocks as F<length>
    <row> <block> <i> <j> <value>
    ...
    rhs <b_1> ... <b_m>

Entry lines list the constraint rows 1..m first, then the objective as row 0.
For PSD blocks the value is the symmetric matrix entry (i <= j, 1-based), so an
off-diagonal value v contributes v to both (i, j) and (j, i). Free-block
entries use j = 1 and i as the 1-based position in the block.
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from common.errors import ParseError
from sdpcore.problem import SdpBuilder, SdpProblem

logger = logging.getLogger(__name__)


def _psd_entries(problem: SdpProblem, block: int, rows_matrix) -> List[Tuple[int, int, int, float]]:
    size = problem.psd_blocks[block].size
    iu, ju = np.triu_indices(size)
    coo = rows_matrix.tocoo()
    out = []
    for row, col, value in zip(coo.row, coo.col, coo.data):
        if value == 0.0:
            continue
        i, j = int(iu[col]), int(ju[col])
        out.append((int(row), i, j, float(value) if i == j else float(value) / 2.0))
    return out


def format_sdp(problem: SdpProblem) -> str:
    lines = ["* pmi-inner sparse SDP", f"* offset {float(problem.objective_offset)!r}"]
    blocks = problem.psd_blocks + problem.free_blocks
    for k, block in enumerate(blocks):
        lines.append(f"* block {k + 1} {block.label}")
    lines.append(str(problem.num_rows))
    lines.append(str(len(blocks)))
    sizes = [str(b.size) for b in problem.psd_blocks] + [f"F{b.size}" for b in problem.free_blocks]
    lines.append(" ".join(sizes))

    entries: List[Tuple[int, int, int, int, float]] = []
    for k, A in enumerate(problem.psd_constraints):
        for row, i, j, value in _psd_entries(problem, k, A):
            entries.append((row + 1, k + 1, i + 1, j + 1, value))
    offset = len(problem.psd_blocks)
    for k, F in enumerate(problem.free_constraints):
        coo = F.tocoo()
        for row, col, value in zip(coo.row, coo.col, coo.data):
            if value != 0.0:
                entries.append((int(row) + 1, offset + k + 1, int(col) + 1, 1, float(value)))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))

    objective: List[Tuple[int, int, int, int, float]] = []
    for k, c in enumerate(problem.psd_objective):
        size = problem.psd_blocks[k].size
        iu, ju = np.triu_indices(size)
        for idx in np.flatnonzero(np.asarray(c)):
            i, j = int(iu[idx]), int(ju[idx])
            value = float(c[idx]) if i == j else float(c[idx]) / 2.0
            objective.append((0, k + 1, i + 1, j + 1, value))
    for k, c in enumerate(problem.free_objective):
        for idx in np.flatnonzero(np.asarray(c)):
            objective.append((0, offset + k + 1, int(idx) + 1, 1, float(c[idx])))

    for row, block, i, j, value in entries + objective:
        lines.append(f"{row} {block} {i} {j} {float(value)!r}")
    lines.append("rhs " + " ".join(repr(float(v)) for v in np.asarray(problem.rhs)))
    return "\n".join(lines) + "\n"


def export_sdp(problem: SdpProblem, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_sdp(problem))
    logger.info(f"Wrote {problem.describe()} to {path}")
    return path


def parse_sdp(text: str) -> SdpProblem:
    offset = 0.0
    labels: Dict[int, str] = {}
    body: List[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "offset":
                offset = float(parts[1])
            elif len(parts) >= 3 and parts[0] == "block":
                labels[int(parts[1])] = " ".join(parts[2:])
            continue
        body.append(line)
    try:
        m = int(body[0])
        nblocks = int(body[1])
        sizes = body[2].split()
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed SDP header: {exc}") from exc
    if len(sizes) != nblocks:
        raise ParseError(f"header declares {nblocks} blocks but lists {len(sizes)} sizes")

    builder = SdpBuilder()
    builder.reserve_rows(m)
    kinds: List[Tuple[str, int]] = []
    for k, token in enumerate(sizes):
        label = labels.get(k + 1, f"block{k + 1}")
        if token.startswith("F"):
            kinds.append(("free", builder.add_free_block(label, int(token[1:]))))
        else:
            kinds.append(("psd", builder.add_psd_block(label, int(token))))

    rhs_seen = False
    for line in body[3:]:
        parts = line.split()
        if parts[0] == "rhs":
            values = [float(v) for v in parts[1:]]
            if len(values) != m:
                raise ParseError(f"rhs line has {len(values)} values, expected {m}")
            for row, value in enumerate(values):
                builder.set_rhs(row, value)
            rhs_seen = True
            continue
        if len(parts) != 5:
            raise ParseError(f"entry line must have 5 fields: {line!r}")
        row, block, i, j = (int(p) for p in parts[:4])
        value = float(parts[4])
        kind, index = kinds[block - 1]
        if kind == "psd":
            packed = value if i == j else 2.0 * value
            if row == 0:
                builder.add_psd_objective(index, i - 1, j - 1, packed)
            else:
                builder.add_psd_entry(row - 1, index, i - 1, j - 1, packed)
        else:
            if row == 0:
                builder.add_free_objective(index, i - 1, value)
            else:
                builder.add_free_entry(row - 1, index, i - 1, value)
    if not rhs_seen:
        raise ParseError("SDP text has no rhs line")
    builder.offset = offset
    return builder.build()


def read_sdp(path: Union[str, Path]) -> SdpProblem:
    return parse_sdp(Path(path).read_text())
