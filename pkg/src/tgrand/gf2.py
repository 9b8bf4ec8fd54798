"""Dense bit-packed linear algebra over GF(2).

Rows are packed little-endian into ``uint64`` words: bit ``j`` of a row lives
in word ``j // 64`` at position ``j % 64``. Padding bits past ``cols`` are
always zero, so whole-word comparisons and XORs are exact.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Sequence

import numpy as np

from ._accel import njit

WORD = 64


class NoUniqueSolution(ArithmeticError):
    """The system has fewer independent equations than unknowns."""


class InconsistentSystem(NoUniqueSolution):
    """The right-hand side is outside the column space."""


def nwords(cols: int) -> int:
    return (cols + WORD - 1) // WORD


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into ``(rows, nwords(cols))`` uint64 words."""
    bits = np.asarray(bits)
    if bits.ndim != 2:
        raise ValueError(f"expected a 2-D bit array, got shape {bits.shape}")
    rows, cols = bits.shape
    w = nwords(cols)
    padded = np.zeros((rows, w * WORD), dtype=np.uint8)
    padded[:, :cols] = bits & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(rows, w)


def unpack_bits(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), dtype=np.uint8)
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8).reshape(rows, -1)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :cols].copy()


@njit
def _matmul_words(a, a_cols, b):
    rows = a.shape[0]
    w = b.shape[1]
    out = np.zeros((rows, w), dtype=np.uint64)
    for i in range(rows):
        for k in range(a_cols):
            if (a[i, k >> 6] >> np.uint64(k & 63)) & np.uint64(1):
                for j in range(w):
                    out[i, j] ^= b[k, j]
    return out


@njit
def _eliminate(a, a_cols, aug):
    """Gauss-Jordan elimination in place on ``a`` with ``aug`` riding along.

    The pivot for each column is the first remaining row with that bit set.
    Returns the pivot column of each of the first ``rank`` rows.
    """
    rows = a.shape[0]
    wa = a.shape[1]
    wb = aug.shape[1]
    pivots = np.empty(min(rows, a_cols), dtype=np.int64)
    rank = 0
    for col in range(a_cols):
        if rank == rows:
            break
        word = col >> 6
        bit = np.uint64(1) << np.uint64(col & 63)
        piv = -1
        for r in range(rank, rows):
            if a[r, word] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(wa):
                t = a[piv, j]
                a[piv, j] = a[rank, j]
                a[rank, j] = t
            for j in range(wb):
                t = aug[piv, j]
                aug[piv, j] = aug[rank, j]
                aug[rank, j] = t
        for r in range(rows):
            if r != rank and (a[r, word] & bit):
                for j in range(wa):
                    a[r, j] ^= a[rank, j]
                for j in range(wb):
                    aug[r, j] ^= aug[rank, j]
        pivots[rank] = col
        rank += 1
    return pivots[:rank]


@njit
def _rank_words(a, a_cols):
    work = a.copy()
    aug = np.zeros((a.shape[0], 0), dtype=np.uint64)
    return _eliminate(work, a_cols, aug).shape[0]


class BitMatrix:
    """Immutable dense matrix over GF(2)."""

    __slots__ = ("_words", "_rows", "_cols")

    def __init__(self, words: np.ndarray, cols: int):
        words = np.asarray(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != nwords(cols):
            raise ValueError(f"word array {words.shape} does not hold {cols} columns")
        if cols % WORD and words.shape[0]:
            pad = ~np.uint64(0) << np.uint64(cols % WORD)
            if np.any(words[:, -1] & pad):
                raise ValueError("padding bits must be zero")
        words = words.copy()
        words.flags.writeable = False
        self._words = words
        self._rows = words.shape[0]
        self._cols = int(cols)

    @classmethod
    def from_bits(cls, bits) -> "BitMatrix":
        bits = np.asarray(bits)
        if bits.ndim == 1:
            bits = bits.reshape(-1, 1)
        if np.any((bits != 0) & (bits != 1)):
            raise ValueError("entries must be 0 or 1")
        return cls(pack_bits(bits.astype(np.uint8)), bits.shape[1])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(np.zeros((rows, nwords(cols)), dtype=np.uint64), cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_bits(np.eye(n, dtype=np.uint8))

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows, self._cols

    @property
    def words(self) -> np.ndarray:
        """Read-only packed storage."""
        return self._words

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self._words, self._cols)

    @property
    def T(self) -> "BitMatrix":
        return BitMatrix.from_bits(self.to_bits().T)

    def take_rows(self, index: Sequence[int]) -> "BitMatrix":
        """Copy of the rows named by ``index``, in that order."""
        index = np.asarray(index, dtype=np.int64)
        return BitMatrix(self._words[index], self._cols)

    def row_is_zero(self) -> np.ndarray:
        return ~np.any(self._words, axis=1)

    def is_zero(self) -> bool:
        return not np.any(self._words)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return matmul(self, other)

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return BitMatrix(self._words ^ other._words, self._cols)

    __add__ = __xor__

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._words, other._words))

    __hash__ = None

    def __repr__(self) -> str:
        if self._rows * self._cols <= 256:
            body = "; ".join("".join(map(str, r)) for r in self.to_bits())
            return f"BitMatrix({self._rows}x{self._cols}: {body})"
        return f"BitMatrix({self._rows}x{self._cols})"


def vstack(blocks: Sequence[BitMatrix]) -> BitMatrix:
    cols = {b.cols for b in blocks}
    if len(cols) != 1:
        raise ValueError(f"column counts differ: {sorted(cols)}")
    return BitMatrix(np.vstack([b.words for b in blocks]), cols.pop())


def hstack(blocks: Sequence[BitMatrix]) -> BitMatrix:
    return BitMatrix.from_bits(np.hstack([b.to_bits() for b in blocks]))


def matmul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return BitMatrix(_matmul_words(a.words, a.cols, b.words), b.cols)


def rank(a: BitMatrix) -> int:
    if a.rows == 0 or a.cols == 0:
        return 0
    return int(_rank_words(a.words, a.cols))


def solve(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Return ``Z`` with ``a @ Z == b``.

    Raises :class:`NoUniqueSolution` when ``rank(a) < a.cols`` and
    :class:`InconsistentSystem` when ``b`` is not in the column space.
    """
    if a.rows != b.rows:
        raise ValueError(f"row mismatch: {a.shape} vs {b.shape}")
    work = a.words.copy()
    aug = b.words.copy()
    pivots = _eliminate(work, a.cols, aug)
    r = pivots.shape[0]
    if r < a.cols:
        raise NoUniqueSolution(f"rank {r} < {a.cols} unknowns")
    if np.any(aug[r:]):
        raise InconsistentSystem("right-hand side outside the column space")
    # Full column rank: row i of the reduced system holds unknown pivots[i].
    out = np.empty((a.cols, aug.shape[1]), dtype=np.uint64)
    out[pivots] = aug[:r]
    return BitMatrix(out, b.cols)


def enumerate_solutions(a: BitMatrix, b) -> Iterator[np.ndarray]:
    """Yield every ``x`` with ``a @ x == b`` (particular solution + null space)."""
    b = np.asarray(b, dtype=np.uint8).reshape(-1)
    if a.rows != b.shape[0]:
        raise ValueError(f"row mismatch: {a.shape} vs rhs of length {b.shape[0]}")
    work = a.words.copy()
    aug = pack_bits(b.reshape(-1, 1))
    pivots = _eliminate(work, a.cols, aug)
    r = pivots.shape[0]
    if np.any(aug[r:]):
        return
    red = unpack_bits(work[:r], a.cols)
    rhs = unpack_bits(aug[:r], 1)[:, 0]
    free = [c for c in range(a.cols) if c not in set(pivots.tolist())]
    for choice in itertools.product((0, 1), repeat=len(free)):
        x = np.zeros(a.cols, dtype=np.uint8)
        x[free] = choice
        for i in range(r):
            # Pivot row i: x[pivot] + sum(red[i, free] * x[free]) = rhs[i]
            x[pivots[i]] = (rhs[i] + int(red[i, free] @ x[free]) if free else rhs[i]) & 1
        yield x


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> BitMatrix:
    """I.i.d. uniform bits drawn from ``rng`` in row-major order."""
    if rows < 1 or cols < 1:
        raise ValueError(f"random_matrix needs rows, cols >= 1 (got {rows}x{cols})")
    return BitMatrix.from_bits((rng.random((rows, cols)) < 0.5).astype(np.uint8))
