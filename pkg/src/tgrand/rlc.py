"""Systematic packet-level random linear coding over GF(2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gf2
from .gf2 import BitMatrix


class Undecodable(Exception):
    """The error-free rows do not span the source packets."""


@dataclass(frozen=True)
class CodeSpec:
    K: int
    N: int
    B: int = 64
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.K <= self.N:
            raise ValueError(f"need 1 <= K <= N (got K={self.K}, N={self.N})")
        if self.B < 1:
            raise ValueError(f"B must be >= 1 (got {self.B})")


@dataclass(frozen=True, eq=False)
class Codebook:
    """``G = [I_K; P]`` and the matching parity-check matrix ``H = [P | I]^T``."""

    G: BitMatrix
    H: BitMatrix
    P: BitMatrix

    @property
    def K(self) -> int:
        return self.G.cols

    @property
    def N(self) -> int:
        return self.G.rows

    @classmethod
    def from_parity(cls, p_bits: np.ndarray) -> "Codebook":
        p_bits = np.asarray(p_bits, dtype=np.uint8)
        m, k = p_bits.shape
        g = np.vstack([np.eye(k, dtype=np.uint8), p_bits])
        h_t = np.hstack([p_bits, np.eye(m, dtype=np.uint8)])
        return cls(G=BitMatrix.from_bits(g), H=BitMatrix.from_bits(h_t.T), P=BitMatrix.from_bits(p_bits))


@dataclass(frozen=True, eq=False)
class Reception:
    Y: BitMatrix
    good: np.ndarray
    bad: np.ndarray
    E_true: BitMatrix | None = None


def parity_bits(n_parity: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform ``P`` rows, one row per coded packet, drawn in order."""
    return (rng.random((n_parity, k)) < 0.5).astype(np.uint8)


def build_codebook(spec: CodeSpec, rng: np.random.Generator | None = None) -> Codebook:
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    return Codebook.from_parity(parity_bits(spec.N - spec.K, spec.K, rng))


def encode(book: Codebook, U: BitMatrix) -> BitMatrix:
    if U.rows != book.K:
        raise ValueError(f"U must have K={book.K} rows, got {U.rows}")
    return book.G @ U


def classify(X_true: BitMatrix, Y: BitMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Idealized CRC: a row is good iff it equals the transmitted row."""
    if X_true.shape != Y.shape:
        raise ValueError(f"shape mismatch {X_true.shape} vs {Y.shape}")
    ok = np.all(X_true.words == Y.words, axis=1)
    return np.flatnonzero(ok), np.flatnonzero(~ok)


def receive(book: Codebook, U: BitMatrix, E: BitMatrix) -> tuple[BitMatrix, Reception]:
    """Transmit ``G U`` through error pattern ``E``; returns ``(X, reception)``."""
    X = encode(book, U)
    Y = X ^ E
    good, bad = classify(X, Y)
    return X, Reception(Y=Y, good=good, bad=bad, E_true=E)


def syndrome(book: Codebook, Y: BitMatrix) -> BitMatrix:
    if Y.rows != book.N:
        raise ValueError(f"Y must have N={book.N} rows, got {Y.rows}")
    return book.H.T @ Y


def rlc_decode(book: Codebook, reception: Reception) -> BitMatrix:
    return decode_rows(book, reception.Y, reception.good)


def decode_rows(book: Codebook, Y: BitMatrix, rows) -> BitMatrix:
    """Solve ``G_R U = Y_R`` over the rows ``R``; raises :class:`Undecodable`."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size < book.K:
        raise Undecodable(f"only {rows.size} usable packets for K={book.K}")
    try:
        return gf2.solve(book.G.take_rows(rows), Y.take_rows(rows))
    except gf2.NoUniqueSolution as exc:
        raise Undecodable(str(exc)) from None
