"""Exact linear algebra over GF(2).

Rows are packed into Python integers (bit ``j`` holds column ``j``) so that
row operations are single XORs regardless of width.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BitMatrix:
    """Binary matrix stored as bit-packed rows."""

    rows: int
    cols: int
    data: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("BitMatrix needs at least one row and one column")
        if len(self.data) != self.rows:
            raise ValueError("row count does not match packed data")
        limit = 1 << self.cols
        if any(r < 0 or r >= limit for r in self.data):
            raise ValueError("packed row has bits outside the column range")

    @classmethod
    def from_array(cls, m) -> "BitMatrix":
        arr = np.asarray(m)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("entries must be 0 or 1")
        rows = tuple(_pack(row) for row in arr.astype(np.int64))
        return cls(arr.shape[0], arr.shape[1], rows)

    def to_array(self) -> np.ndarray:
        return np.array([_unpack(r, self.cols) for r in self.data], dtype=np.int64)

    def column(self, j: int) -> int:
        """Column ``j`` packed with bit ``i`` holding row ``i``."""
        return sum(((r >> j) & 1) << i for i, r in enumerate(self.data))

    def matvec(self, v: Sequence[int]) -> tuple[int, ...]:
        packed = _pack(np.asarray(v) % 2)
        return tuple(bin(r & packed).count("1") & 1 for r in self.data)

    def transpose(self) -> "BitMatrix":
        return BitMatrix(self.cols, self.rows, tuple(self.column(j) for j in range(self.cols)))


@dataclass(frozen=True)
class KernelImage:
    rank: int
    kernel_basis: tuple[tuple[int, ...], ...]
    image_basis_columns: tuple[int, ...]


def _pack(bits) -> int:
    out = 0
    for j, b in enumerate(bits):
        if int(b) & 1:
            out |= 1 << j
    return out


def _unpack(word: int, width: int) -> tuple[int, ...]:
    return tuple((word >> j) & 1 for j in range(width))


def _as_bitmatrix(m) -> BitMatrix:
    return m if isinstance(m, BitMatrix) else BitMatrix.from_array(m)


def rref(m) -> tuple[list[int], list[int]]:
    """Reduced row-echelon form. Returns (nonzero packed rows, pivot columns)."""
    mat = _as_bitmatrix(m)
    rows = list(mat.data)
    pivots: list[int] = []
    r = 0
    for col in range(mat.cols):
        bit = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(m) -> int:
    return len(rref(m)[1])


def rank_kernel_image(m) -> KernelImage:
    """Rank, a kernel basis and a maximal independent column set.

    The kernel basis has one vector per free column (ascending), with a 1 in
    that free column and the pivot entries read off the reduced rows. The
    image columns are the pivot columns, i.e. the greedy left-to-right
    independent set.
    """
    mat = _as_bitmatrix(m)
    rows, pivots = rref(mat)
    pivot_set = set(pivots)
    basis = []
    for f in range(mat.cols):
        if f in pivot_set:
            continue
        v = [0] * mat.cols
        v[f] = 1
        for row, p in zip(rows, pivots):
            if (row >> f) & 1:
                v[p] = 1
        basis.append(tuple(v))
    return KernelImage(len(pivots), tuple(basis), tuple(pivots))


def local_kernel_basis(m) -> tuple[tuple[int, ...], ...]:
    """Kernel basis built from nearest-neighbour column dependencies.

    For every non-pivot column ``f`` the column is written in terms of an
    independent set chosen greedily from columns ``f-1, f-2, ..., 0``. Same
    span and size as :func:`rank_kernel_image`, but identical adjacent
    columns produce the short vectors ``e_{f-1} + e_f``.
    """
    mat = _as_bitmatrix(m)
    info = rank_kernel_image(mat)
    cols = [mat.column(j) for j in range(mat.cols)]
    pivot_set = set(info.image_basis_columns)
    out = []
    for f in range(mat.cols):
        if f in pivot_set:
            continue
        # xor basis keyed by leading bit; each entry remembers its column combination
        basis: dict[int, tuple[int, int]] = {}
        for j in range(f - 1, -1, -1):
            vec, combo = cols[j], 1 << j
            while vec:
                lead = vec.bit_length() - 1
                if lead not in basis:
                    basis[lead] = (vec, combo)
                    break
                bvec, bcombo = basis[lead]
                vec ^= bvec
                combo ^= bcombo
        vec, combo = cols[f], 1 << f
        while vec:
            bvec, bcombo = basis[vec.bit_length() - 1]
            vec ^= bvec
            combo ^= bcombo
        out.append(_unpack(combo, mat.cols))
    return tuple(out)


def in_span(vectors: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """True if ``v`` lies in the GF(2) span of ``vectors``."""
    if not len(vectors):
        return not any(int(b) & 1 for b in v)
    return rank(np.vstack([np.asarray(vectors) % 2, np.asarray(v) % 2])) == rank(np.asarray(vectors) % 2)
