"""
Block semidefinite programs in standard form.

    minimize    sum_b <C_b, X_b> + c_f^T x_f + offset
    subject to  sum_b A_b(X_b) + F x_f = rhs,   X_b PSD

Each PSD block is addressed through its packed upper triangle in row-major
order (the order of ``numpy.triu_indices``). A packed coefficient multiplies
the entry X_ij exactly once, so a symmetric coefficient matrix S contributes
S_ii on the diagonal and S_ij + S_ji off the diagonal.
"""

import logging
from collections import defaultdict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)


class BlockSpec(BaseModel):
    label: str
    size: int = Field(ge=1)

    @property
    def packed_length(self) -> int:
        return self.size * (self.size + 1) // 2


def packed_index(size: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return i * size - i * (i - 1) // 2 + (j - i)


def pack(X: np.ndarray) -> np.ndarray:
    return X[np.triu_indices(X.shape[0])]


def unpack_adjoint(w: np.ndarray, size: int) -> np.ndarray:
    """Symmetric S with <S, X> = w . pack(X): off-diagonal packed weights are split in half."""
    S = np.zeros((size, size))
    iu = np.triu_indices(size)
    S[iu] = w
    S = S + S.T
    S[np.diag_indices(size)] /= 2.0
    off = ~np.eye(size, dtype=bool)
    S[off] /= 2.0
    return S


def unpack_values(v: np.ndarray, size: int) -> np.ndarray:
    """Symmetric matrix whose upper triangle holds the packed entries."""
    S = np.zeros((size, size))
    iu = np.triu_indices(size)
    S[iu] = v
    return S + np.triu(S, 1).T


class SdpProblem(BaseModel):
    """Immutable block SDP; constraint blocks are CSR matrices with one row per equality."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    psd_blocks: List[BlockSpec]
    free_blocks: List[BlockSpec] = Field(default_factory=list)
    psd_constraints: List[Any]
    free_constraints: List[Any] = Field(default_factory=list)
    rhs: Any
    psd_objective: List[Any]
    free_objective: List[Any] = Field(default_factory=list)
    objective_offset: float = 0.0
    row_keys: Optional[List[Any]] = None

    @property
    def num_rows(self) -> int:
        return int(np.asarray(self.rhs).shape[0])

    @property
    def psd_dimension(self) -> int:
        return sum(block.size for block in self.psd_blocks)

    @property
    def free_length(self) -> int:
        return sum(block.size for block in self.free_blocks)

    def free_matrix(self) -> sp.csr_matrix:
        if not self.free_blocks:
            return sp.csr_matrix((self.num_rows, 0))
        return sp.hstack(self.free_constraints, format="csr")

    def free_cost(self) -> np.ndarray:
        if not self.free_blocks:
            return np.zeros(0)
        return np.concatenate([np.asarray(c, dtype=float) for c in self.free_objective])

    def psd_index(self, label: str) -> int:
        for idx, block in enumerate(self.psd_blocks):
            if block.label == label:
                return idx
        raise KeyError(f"no PSD block labelled {label!r}")

    def free_index(self, label: str) -> int:
        for idx, block in enumerate(self.free_blocks):
            if block.label == label:
                return idx
        raise KeyError(f"no free block labelled {label!r}")

    def apply(self, X_blocks: Sequence[np.ndarray], x_free: Sequence[np.ndarray]) -> np.ndarray:
        """A(X) + F x_f."""
        out = np.zeros(self.num_rows)
        for A, X in zip(self.psd_constraints, X_blocks):
            out += A @ pack(X)
        for F, x in zip(self.free_constraints, x_free):
            out += F @ np.asarray(x, dtype=float)
        return out

    def adjoint(self, y: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """(A^T y per PSD block as symmetric matrices, F^T y per free block)."""
        psd = [unpack_adjoint(A.T @ y, block.size) for A, block in zip(self.psd_constraints, self.psd_blocks)]
        free = [F.T @ y for F in self.free_constraints]
        return psd, free

    def cost_matrices(self) -> List[np.ndarray]:
        return [unpack_adjoint(np.asarray(c, dtype=float), block.size) for c, block in zip(self.psd_objective, self.psd_blocks)]

    def objective(self, X_blocks: Sequence[np.ndarray], x_free: Sequence[np.ndarray]) -> float:
        total = self.objective_offset
        for c, X in zip(self.psd_objective, X_blocks):
            total += float(np.asarray(c) @ pack(X))
        for c, x in zip(self.free_objective, x_free):
            total += float(np.asarray(c) @ np.asarray(x))
        return total

    def describe(self) -> str:
        sizes = ", ".join(f"{b.label}:{b.size}" for b in self.psd_blocks)
        return (
            f"SdpProblem(rows={self.num_rows}, psd=[{sizes}], "
            f"free={self.free_length}, nnz={sum(A.nnz for A in self.psd_constraints)})"
        )


class SdpBuilder:
    """Accumulates blocks, coefficients and right-hand sides, then freezes an SdpProblem."""

    def __init__(self):
        self._psd: List[BlockSpec] = []
        self._free: List[BlockSpec] = []
        self._entries: Dict[Tuple[str, int], Dict[Tuple[int, int], float]] = {}
        self._objective: Dict[Tuple[str, int], Dict[int, float]] = {}
        self._rhs: Dict[int, float] = defaultdict(float)
        self._rows = 0
        self.offset = 0.0

    def add_psd_block(self, label: str, size: int) -> int:
        self._psd.append(BlockSpec(label=label, size=size))
        self._entries[("psd", len(self._psd) - 1)] = defaultdict(float)
        self._objective[("psd", len(self._psd) - 1)] = defaultdict(float)
        return len(self._psd) - 1

    def add_free_block(self, label: str, length: int) -> int:
        self._free.append(BlockSpec(label=label, size=length))
        self._entries[("free", len(self._free) - 1)] = defaultdict(float)
        self._objective[("free", len(self._free) - 1)] = defaultdict(float)
        return len(self._free) - 1

    def reserve_rows(self, count: int) -> None:
        self._rows = max(self._rows, count)

    def add_psd_entry(self, row: int, block: int, i: int, j: int, value: float) -> None:
        """Packed coefficient: multiplies X_ij of the block once."""
        size = self._psd[block].size
        self._entries[("psd", block)][(row, packed_index(size, i, j))] += value
        self._rows = max(self._rows, row + 1)

    def add_free_entry(self, row: int, block: int, index: int, value: float) -> None:
        self._entries[("free", block)][(row, index)] += value
        self._rows = max(self._rows, row + 1)

    def set_rhs(self, row: int, value: float) -> None:
        self._rhs[row] = value
        self._rows = max(self._rows, row + 1)

    def add_psd_objective(self, block: int, i: int, j: int, value: float) -> None:
        self._objective[("psd", block)][packed_index(self._psd[block].size, i, j)] += value

    def add_free_objective(self, block: int, index: int, value: float) -> None:
        self._objective[("free", block)][index] += value

    def _matrix(self, key, width: int) -> sp.csr_matrix:
        entries = self._entries[key]
        if not entries:
            return sp.csr_matrix((self._rows, width))
        rows, cols = zip(*entries.keys())
        return sp.csr_matrix((list(entries.values()), (rows, cols)), shape=(self._rows, width))

    def _vector(self, key, width: int) -> np.ndarray:
        vec = np.zeros(width)
        for idx, value in self._objective[key].items():
            vec[idx] += value
        return vec

    def build(self, row_keys: Optional[List[Any]] = None) -> SdpProblem:
        rhs = np.zeros(self._rows)
        for row, value in self._rhs.items():
            rhs[row] = value
        problem = SdpProblem(
            psd_blocks=list(self._psd),
            free_blocks=list(self._free),
            psd_constraints=[self._matrix(("psd", k), b.packed_length) for k, b in enumerate(self._psd)],
            free_constraints=[self._matrix(("free", k), b.size) for k, b in enumerate(self._free)],
            rhs=rhs,
            psd_objective=[self._vector(("psd", k), b.packed_length) for k, b in enumerate(self._psd)],
            free_objective=[self._vector(("free", k), b.size) for k, b in enumerate(self._free)],
            objective_offset=self.offset,
            row_keys=row_keys,
        )
        logger.debug(f"Built {problem.describe()}")
        return problem
