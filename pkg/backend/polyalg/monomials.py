"""
Variable universe and graded-lex monomials
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

VarMask = Union[str, Sequence[int]]


@dataclass(frozen=True)
class Universe:
    """Variable-count descriptor: n decision slots x, p uncertain slots u, m sphere slots v."""

    n: int
    p: int = 0
    m: int = 0

    def __post_init__(self):
        if min(self.n, self.p, self.m) < 0:
            raise ValueError(f"negative variable count in universe {self}")

    @property
    def nvars(self) -> int:
        return self.n + self.p + self.m

    @property
    def x_slots(self) -> range:
        return range(0, self.n)

    @property
    def u_slots(self) -> range:
        return range(self.n, self.n + self.p)

    @property
    def v_slots(self) -> range:
        return range(self.n + self.p, self.nvars)

    @property
    def names(self) -> List[str]:
        return (
            [f"x{i + 1}" for i in range(self.n)]
            + [f"u{i + 1}" for i in range(self.p)]
            + [f"v{i + 1}" for i in range(self.m)]
        )

    def slots(self, mask: VarMask) -> Tuple[int, ...]:
        """Resolve a mask such as "xv" or an explicit slot list to slot indices."""
        if isinstance(mask, str):
            chosen: List[int] = []
            for kind in mask:
                if kind == "x":
                    chosen.extend(self.x_slots)
                elif kind == "u":
                    chosen.extend(self.u_slots)
                elif kind == "v":
                    chosen.extend(self.v_slots)
                else:
                    raise ValueError(f"unknown variable kind '{kind}' in mask '{mask}'")
            return tuple(sorted(chosen))
        return tuple(sorted(mask))

    def pack(
        self,
        x: Optional[np.ndarray] = None,
        u: Optional[np.ndarray] = None,
        v: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Assemble full-universe points from per-kind blocks (missing blocks are zero)."""
        blocks = [b for b in (x, u, v) if b is not None]
        if not blocks:
            return np.zeros((1, self.nvars))
        count = max(np.atleast_2d(b).shape[0] for b in blocks)
        out = np.zeros((count, self.nvars))
        for block, slots in ((x, self.x_slots), (u, self.u_slots), (v, self.v_slots)):
            if block is None or len(slots) == 0:
                continue
            arr = np.atleast_2d(np.asarray(block, dtype=float))
            out[:, slots.start:slots.stop] = arr
        return out


class Monomial(tuple):
    """Exponent vector over a universe, ordered graded-lexicographically."""

    __slots__ = ()

    def __new__(cls, exponents: Iterable[int]):
        exps = tuple(int(e) for e in exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        return super().__new__(cls, exps)

    @property
    def degree(self) -> int:
        return sum(self)

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        # Lower total degree first; within a degree, larger leading exponents first.
        return (sum(self), tuple(-e for e in self))

    def __lt__(self, other):
        return self.sort_key() < Monomial.sort_key(other)

    def __le__(self, other):
        return self.sort_key() <= Monomial.sort_key(other)

    def __gt__(self, other):
        return self.sort_key() > Monomial.sort_key(other)

    def __ge__(self, other):
        return self.sort_key() >= Monomial.sort_key(other)

    def times(self, other: "Monomial") -> "Monomial":
        return Monomial(a + b for a, b in zip(self, other))

    def __repr__(self) -> str:
        return f"Monomial{tuple(self)}"


def one(universe: Universe) -> Monomial:
    return Monomial((0,) * universe.nvars)


def _compositions(count: int, total: int) -> Iterator[Tuple[int, ...]]:
    """Exponent tuples of exactly `total` over `count` slots, leading slot descending."""
    if count == 0:
        if total == 0:
            yield ()
        return
    if count == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(count - 1, total - first):
            yield (first,) + rest


@lru_cache(maxsize=512)
def _enum_cached(universe: Universe, slots: Tuple[int, ...], max_degree: int) -> Tuple[Monomial, ...]:
    out: List[Monomial] = []
    for degree in range(max_degree + 1):
        for comp in _compositions(len(slots), degree):
            exps = [0] * universe.nvars
            for slot, e in zip(slots, comp):
                exps[slot] = e
            out.append(Monomial(exps))
    return tuple(out)


def enum_monomials(universe: Universe, var_mask: VarMask, max_degree: int) -> List[Monomial]:
    """All monomials in the masked variables of total degree <= max_degree, graded-lex."""
    if max_degree < 0:
        raise ValueError(f"max_degree must be nonnegative, got {max_degree}")
    return list(_enum_cached(universe, universe.slots(var_mask), int(max_degree)))
