"""Count-min sketches sharing one hash layout.

Every sketch in a detector is built on the same :class:`SketchLayout`, so a
key is hashed once and the resulting :class:`IndexVector` addresses the
matching cell in each row of every sketch. Cells hold floats because the
detector decays counters by a fractional scale factor.

Hashing is a per-row affine map modulo the Mersenne prime 2**61 - 1,
``((a_i * x + b_i) mod p) mod cols``, applied to a 64-bit key that has first
been passed through the splitmix64 finalizer and reduced modulo p. Edge keys are
``(s << 32) ^ d`` so ordered pairs stay distinct. An *identity* layout skips
all of this and maps key ``k`` to column ``k mod cols`` in a single row; it
exists so tests can run collision-free against exact trackers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

MERSENNE_61 = (1 << 61) - 1

_P = np.uint64(MERSENNE_61)
_MASK32 = np.uint64(0xFFFFFFFF)
_MASK29 = np.uint64((1 << 29) - 1)
_SH3 = np.uint64(3)
_SH27 = np.uint64(27)
_SH29 = np.uint64(29)
_SH30 = np.uint64(30)
_SH31 = np.uint64(31)
_SH32 = np.uint64(32)
_SH61 = np.uint64(61)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def mix64(z):
    """Finalizer of splitmix64 (no additive step); a bijection on 64-bit integers."""
    z = np.uint64(z)
    z = (z ^ (z >> _SH30)) * _MIX1
    z = (z ^ (z >> _SH27)) * _MIX2
    return z ^ (z >> _SH31)


@njit(cache=True)
def _mod61(x):
    x = (x & _P) + (x >> _SH61)
    if x >= _P:
        x -= _P
    return x


@njit(cache=True)
def mulmod61(a, b):
    """``a * b mod (2**61 - 1)`` for ``a, b < 2**61`` without 128-bit ints."""
    a = np.uint64(a)
    b = np.uint64(b)
    a_lo = a & _MASK32
    a_hi = a >> _SH32
    b_lo = b & _MASK32
    b_hi = b >> _SH32
    lo = a_lo * b_lo
    mid = a_lo * b_hi + a_hi * b_lo
    hi = a_hi * b_hi
    # 2**64 == 8 and 2**61 == 1 (mod p)
    r = hi << _SH3
    r += (mid >> _SH29) + ((mid & _MASK29) << _SH32)
    r += (lo & _P) + (lo >> _SH61)
    return _mod61(r)


@njit(cache=True)
def hash_into(key, a, b, cols, identity, out):
    """Write the per-row column of ``key`` into ``out``."""
    ucols = np.uint64(cols)
    k = np.uint64(key)
    if identity:
        out[0] = np.int64(k % ucols)
        return
    x = _mod61(mix64(k))
    for i in range(out.shape[0]):
        h = _mod61(mulmod61(a[i], x) + b[i])
        out[i] = np.int64(h % ucols)


def edge_key(s, d):
    """Fold an ordered ``(s, d)`` pair into one 64-bit key.

    Works on Python ints and on integer arrays alike.
    """
    if isinstance(s, np.ndarray) or isinstance(d, np.ndarray):
        s = np.asarray(s).astype(np.uint64)
        d = np.asarray(d).astype(np.uint64)
        return (s << _SH32) ^ d
    return ((int(s) << 32) ^ int(d)) & 0xFFFFFFFFFFFFFFFF


class CellPos(NamedTuple):
    row: int
    col: int


# column per row, int64 array of length ``rows``
IndexVector = np.ndarray


@dataclass(frozen=True, eq=False)
class SketchLayout:
    """Geometry and row hashers shared by every sketch of one detector."""

    rows: int
    cols: int
    seed: int = 0
    identity: bool = False
    a: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ValueError(f"sketch needs rows >= 1 and cols >= 1, got {self.rows}x{self.cols}")
        if self.identity and self.rows != 1:
            raise ValueError("identity layout has exactly one row")
        rng = np.random.Generator(np.random.PCG64(int(self.seed) & 0xFFFFFFFFFFFFFFFF))
        a = rng.integers(1, MERSENNE_61, size=self.rows, dtype=np.uint64)
        b = rng.integers(0, MERSENNE_61, size=self.rows, dtype=np.uint64)
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity_layout(cls, cols: int) -> SketchLayout:
        return cls(rows=1, cols=cols, identity=True)

    def same_as(self, other: SketchLayout) -> bool:
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.identity == other.identity
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    def hash_key(self, key: int) -> IndexVector:
        out = np.empty(self.rows, dtype=np.int64)
        hash_into(np.uint64(key), self.a, self.b, self.cols, self.identity, out)
        return out

    def hash_edge(self, s: int, d: int) -> np.ndarray:
        return self.hash_key(edge_key(s, d))

    def hash_node(self, n: int) -> np.ndarray:
        return self.hash_key(int(n))


def hash_edge(layout: SketchLayout, s: int, d: int) -> np.ndarray:
    return layout.hash_edge(s, d)


def hash_node(layout: SketchLayout, n: int) -> np.ndarray:
    return layout.hash_node(n)


class CountSketch:
    """Count-min sketch of non-negative reals."""

    def __init__(self, layout: SketchLayout) -> None:
        self.layout = layout
        self.cells = np.zeros((layout.rows, layout.cols), dtype=np.float64)

    def _rows(self):
        return np.arange(self.layout.rows)

    def add(self, index: np.ndarray, amount: float = 1.0) -> None:
        if amount < 0:
            raise ValueError("amount must be non-negative")
        self.cells[self._rows(), index] += amount

    def query(self, index: np.ndarray) -> float:
        return float(self.cells[self._rows(), index].min())

    def arg_query(self, index: np.ndarray) -> CellPos:
        # np.argmin returns the first minimum, i.e. the smallest row on ties
        row = int(np.argmin(self.cells[self._rows(), index]))
        return CellPos(row, int(index[row]))

    def scale(self, zeta: float) -> None:
        if not 0.0 <= zeta <= 1.0:
            raise ValueError(f"scale factor must lie in [0, 1], got {zeta}")
        if zeta != 1.0:
            self.cells *= zeta

    def total(self) -> float:
        return float(self.cells.sum())

    def __getitem__(self, pos: tuple[int, int]) -> float:
        return float(self.cells[pos[0], pos[1]])


class FlagSketch:
    """Boolean twin of :class:`CountSketch`, used as a busy indicator."""

    def __init__(self, layout: SketchLayout) -> None:
        self.layout = layout
        self.cells = np.zeros((layout.rows, layout.cols), dtype=np.bool_)

    def get(self, index: np.ndarray) -> np.ndarray:
        """Per-row flag values at ``index``."""
        return self.cells[np.arange(self.layout.rows), index].copy()

    def set(self, index: np.ndarray) -> None:
        self.cells[np.arange(self.layout.rows), index] = True

    def __getitem__(self, pos: tuple[int, int]) -> bool:
        return bool(self.cells[pos[0], pos[1]])

    def __setitem__(self, pos: tuple[int, int], value: bool) -> None:
        self.cells[pos[0], pos[1]] = value

    def reset(self, pos: tuple[int, int]) -> None:
        self.cells[pos[0], pos[1]] = False

    def copy_into(self, dst: FlagSketch) -> None:
        np.copyto(dst.cells, self.cells)

    def clear(self) -> None:
        self.cells[:] = False
