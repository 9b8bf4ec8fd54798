"""Column-wise estimation of the error matrix of the erroneous packets.

Both estimators answer the same question for each bit position ``b``: which
vector ``w`` over the ``L`` erroneous packets satisfies ``H_bad^T w = s_b``?

* Syndrome decoding (SD) tests vectors by increasing Hamming weight.
* Transversal GRAND (T-GRAND) tests vectors by decreasing likelihood under
  the burst channel, given the previous column's estimate (the *origin*).
  Groups of equally likely vectors come from :mod:`tgrand.ordering`.

A test ("query") is a word-wise XOR of the columns of ``H_bad^T`` picked by
``w``, so each column of ``H_bad^T`` is held as packed ``uint64`` words.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ._accel import njit
from .channel import ChannelParams
from .gf2 import BitMatrix, pack_bits
from .ordering import orientation, sort_groups, trace_init, trace_next
from .rlc import Codebook, Reception, Undecodable, decode_rows

MODES = ("sort", "trace")
POLICIES = ("persist", "continue")

# Per-column statistics columns.
COL_QUERIES, COL_RESOLVED, COL_GROUPS = range(3)


@dataclass(frozen=True)
class GuessBudget:
    """Search limits per column.

    ``l_th`` caps the number of transition groups the trace mode visits.
    ``on_exhaustion='persist'`` keeps the origin as the estimate of a column
    that was not resolved; ``'continue'`` lets the trace run past ``l_th``.
    """

    l_th: int = 8
    max_queries: int = 2**20
    on_exhaustion: str = "persist"

    def __post_init__(self):
        if self.l_th < 1:
            raise ValueError(f"l_th must be >= 1 (got {self.l_th})")
        if self.max_queries < 1:
            raise ValueError(f"max_queries must be >= 1 (got {self.max_queries})")
        if self.on_exhaustion not in POLICIES:
            raise ValueError(f"on_exhaustion must be one of {POLICIES} (got {self.on_exhaustion!r})")


@dataclass(frozen=True)
class OriginVector:
    bits: np.ndarray

    @classmethod
    def of(cls, bits) -> "OriginVector":
        b = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if np.any(b > 1):
            raise ValueError("origin entries must be 0 or 1")
        return cls(b)

    @property
    def positions0(self) -> np.ndarray:
        return np.flatnonzero(self.bits == 0)

    @property
    def positions1(self) -> np.ndarray:
        return np.flatnonzero(self.bits == 1)

    @property
    def L0(self) -> int:
        return int(np.count_nonzero(self.bits == 0))

    @property
    def L1(self) -> int:
        return int(np.count_nonzero(self.bits))


@dataclass
class RepairOutcome:
    E_hat: BitMatrix
    queries_total: int
    columns_exhausted: int
    additions: int = 0
    comparisons: int = 0
    column_stats: np.ndarray = field(default=None, repr=False)
    repaired_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


@dataclass(frozen=True)
class Redecode:
    U: BitMatrix | None
    repaired_rows: np.ndarray

    @property
    def decoded(self) -> bool:
        return self.U is not None

    @property
    def nu(self) -> int:
        return int(self.repaired_rows.size)


def gen_err_seq(origin, l0: int, l1: int) -> Iterator[np.ndarray]:
    """Every vector reached from ``origin`` by ``l0`` 0->1 and ``l1`` 1->0 flips.

    Zero-position subsets form the outer loop, one-position subsets the
    inner loop, both in lexicographic order.
    """
    origin = origin if isinstance(origin, OriginVector) else OriginVector.of(origin)
    z, o = origin.positions0, origin.positions1
    if not (0 <= l0 <= z.size and 0 <= l1 <= o.size):
        raise ValueError(f"(l0, l1)=({l0}, {l1}) outside grid {z.size}x{o.size}")
    for zs in itertools.combinations(z.tolist(), l0):
        for os_ in itertools.combinations(o.tolist(), l1):
            w = origin.bits.copy()
            w[list(zs)] = 1
            w[list(os_)] = 0
            yield w


# --------------------------------------------------------------------------
# kernels


@njit
def _next_combo(c, k, n):
    """Advance ``c`` to the next k-subset of range(n); returns first changed slot or -1."""
    i = k - 1
    while i >= 0 and c[i] == n - k + i:
        i -= 1
    if i < 0:
        return -1
    c[i] += 1
    for j in range(i + 1, k):
        c[j] = c[j - 1] + 1
    return i


@njit
def _fill_acc(acc, c, pos, masks, start, k):
    w = acc.shape[1]
    for j in range(start, k):
        m = masks[pos[c[j]]]
        for t in range(w):
            acc[j + 1, t] = acc[j, t] ^ m[t]


@njit
def search_group(masks, target, zpos, opos, l0, l1, budget, fz, fo):
    """Query the ``C(|zpos|, l0) C(|opos|, l1)`` vectors of one group in order.

    Vector = flips at ``zpos[fz]`` and ``opos[fo]``; it solves the column when
    the XOR of those mask rows equals ``target``. Returns ``(found, queries)``
    and leaves the winning subsets in ``fz``/``fo``.
    """
    w = target.shape[0]
    nz = zpos.shape[0]
    no = opos.shape[0]
    for j in range(l0):
        fz[j] = j
    acc0 = np.zeros((l0 + 1, w), dtype=np.uint64)
    _fill_acc(acc0, fz, zpos, masks, 0, l0)
    acc1 = np.zeros((l1 + 1, w), dtype=np.uint64)
    queries = 0
    while True:
        for t in range(w):
            acc1[0, t] = acc0[l0, t]
        for j in range(l1):
            fo[j] = j
        _fill_acc(acc1, fo, opos, masks, 0, l1)
        while True:
            queries += 1
            hit = True
            for t in range(w):
                if acc1[l1, t] != target[t]:
                    hit = False
                    break
            if hit:
                return True, queries
            if queries >= budget:
                return False, queries
            i = _next_combo(fo, l1, no)
            if i < 0:
                break
            _fill_acc(acc1, fo, opos, masks, i, l1)
        i = _next_combo(fz, l0, nz)
        if i < 0:
            return False, queries
        _fill_acc(acc0, fz, zpos, masks, i, l0)


@njit
def _split(origin):
    L = origin.shape[0]
    n1 = 0
    for i in range(L):
        n1 += origin[i]
    zpos = np.empty(L - n1, dtype=np.int64)
    opos = np.empty(n1, dtype=np.int64)
    a = 0
    b = 0
    for i in range(L):
        if origin[i]:
            opos[b] = i
            b += 1
        else:
            zpos[a] = i
            a += 1
    return zpos, opos


@njit
def tgrand_kernel(masks, s_cols, origin0, a0, a1, flip0, flip1, use_trace, l_th, max_queries,
                  keep_going, e_hat, col_stats, counters):
    """Estimate every column, chaining each estimate into the next origin."""
    L = masks.shape[0]
    w = masks.shape[1]
    B = s_cols.shape[0]
    origin = origin0.copy()
    fz = np.empty(L, dtype=np.int64)
    fo = np.empty(L, dtype=np.int64)
    out = np.zeros(2, dtype=np.int64)
    for b in range(B):
        zpos, opos = _split(origin)
        L0 = zpos.shape[0]
        L1 = opos.shape[0]
        target = s_cols[b].copy()
        for i in range(L1):
            for t in range(w):
                target[t] ^= masks[opos[i], t]
        left = max_queries
        found = False
        groups = 0
        g0 = 0
        g1 = 0
        if use_trace:
            t0, t1, cl, q, st = trace_init(a0, a1, flip0, flip1, L0, L1, counters)
            while keep_going or groups < l_th:
                phi = trace_next(t0, t1, cl, q, st, counters, out)
                if phi < 0:
                    break
                groups += 1
                g0 = out[0]
                g1 = out[1]
                found, used = search_group(masks, target, zpos, opos, g0, g1, left, fz, fo)
                left -= used
                if found or left <= 0:
                    break
        else:
            o0, o1, _ = sort_groups(a0, a1, flip0, flip1, L0, L1, counters)
            for k in range(o0.shape[0]):
                groups += 1
                g0 = o0[k]
                g1 = o1[k]
                found, used = search_group(masks, target, zpos, opos, g0, g1, left, fz, fo)
                left -= used
                if found or left <= 0:
                    break
        if found:
            for j in range(g0):
                origin[zpos[fz[j]]] = 1
            for j in range(g1):
                origin[opos[fo[j]]] = 0
        for i in range(L):
            e_hat[i, b] = origin[i]
        col_stats[b, 0] = max_queries - left
        col_stats[b, 1] = 1 if found else 0
        col_stats[b, 2] = groups


@njit
def sd_kernel(masks, s_cols, max_queries, e_hat, col_stats):
    """Lowest-weight solution of each column, lexicographic within a weight."""
    L = masks.shape[0]
    B = s_cols.shape[0]
    allpos = np.arange(L)
    nopos = np.empty(0, dtype=np.int64)
    fz = np.empty(L, dtype=np.int64)
    fo = np.empty(0, dtype=np.int64)
    for b in range(B):
        target = s_cols[b]
        left = max_queries
        found = False
        weight = 0
        for weight in range(L + 1):
            found, used = search_group(masks, target, allpos, nopos, weight, 0, left, fz, fo)
            left -= used
            if found or left <= 0:
                break
        for i in range(L):
            e_hat[i, b] = 0
        if found:
            for j in range(weight):
                e_hat[fz[j], b] = 1
        col_stats[b, 0] = max_queries - left
        col_stats[b, 1] = 1 if found else 0
        col_stats[b, 2] = weight + 1 if found else weight


# --------------------------------------------------------------------------
# Python surface


def _masks(H_bad_T: BitMatrix) -> np.ndarray:
    """Rows are the columns of ``H_bad^T`` (one per erroneous packet)."""
    return pack_bits(H_bad_T.to_bits().T)


def _columns(S: BitMatrix) -> np.ndarray:
    return pack_bits(S.to_bits().T)


def _column_words(s_col) -> np.ndarray:
    s = np.asarray(s_col, dtype=np.uint8).reshape(1, -1)
    return pack_bits(s)


def run_tgrand(masks, s_cols, p01, p10, mode="sort", budget=GuessBudget(), origin=None):
    """Kernel driver on packed inputs; returns ``(E_hat bits, column stats, counters)``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES} (got {mode!r})")
    L = masks.shape[0]
    B = s_cols.shape[0]
    a0, a1, f0, f1 = orientation(p01, p10)
    origin0 = np.zeros(L, dtype=np.uint8) if origin is None else np.asarray(origin, dtype=np.uint8).copy()
    e_hat = np.zeros((L, B), dtype=np.uint8)
    stats = np.zeros((B, 3), dtype=np.int64)
    counters = np.zeros(2, dtype=np.int64)
    tgrand_kernel(masks, s_cols, origin0, a0, a1, f0, f1, mode == "trace", budget.l_th,
                  budget.max_queries, budget.on_exhaustion == "continue", e_hat, stats, counters)
    return e_hat, stats, counters


def run_sd(masks, s_cols, budget=GuessBudget()):
    L = masks.shape[0]
    B = s_cols.shape[0]
    e_hat = np.zeros((L, B), dtype=np.uint8)
    stats = np.zeros((B, 3), dtype=np.int64)
    sd_kernel(masks, s_cols, budget.max_queries, e_hat, stats)
    return e_hat, stats


def _check_column_inputs(H_bad_T: BitMatrix, s_col) -> None:
    n = np.asarray(s_col).size
    if n != H_bad_T.rows:
        raise ValueError(f"syndrome column has length {n}, expected {H_bad_T.rows}")


def tgrand_column(H_bad_T: BitMatrix, s_col, origin, params: ChannelParams, mode: str = "sort",
                  budget: GuessBudget = GuessBudget()) -> tuple[np.ndarray, bool, int]:
    """Most likely solution of ``H_bad_T w = s_col`` given the previous column."""
    _check_column_inputs(H_bad_T, s_col)
    origin = origin.bits if isinstance(origin, OriginVector) else np.asarray(origin, dtype=np.uint8)
    if origin.size != H_bad_T.cols:
        raise ValueError(f"origin has length {origin.size}, expected {H_bad_T.cols}")
    e_hat, stats, _ = run_tgrand(_masks(H_bad_T), _column_words(s_col), params.p01, params.p10,
                                 mode, budget, origin)
    return e_hat[:, 0], bool(stats[0, COL_RESOLVED]), int(stats[0, COL_QUERIES])


def sd_column(H_bad_T: BitMatrix, s_col, budget: GuessBudget = GuessBudget()) -> tuple[np.ndarray, bool, int]:
    """Sparsest solution of ``H_bad_T w = s_col``."""
    _check_column_inputs(H_bad_T, s_col)
    e_hat, stats = run_sd(_masks(H_bad_T), _column_words(s_col), budget)
    return e_hat[:, 0], bool(stats[0, COL_RESOLVED]), int(stats[0, COL_QUERIES])


def _outcome(e_hat, stats, counters=None) -> RepairOutcome:
    return RepairOutcome(
        E_hat=BitMatrix.from_bits(e_hat) if e_hat.size else BitMatrix.zeros(*e_hat.shape),
        queries_total=int(stats[:, COL_QUERIES].sum()),
        columns_exhausted=int((stats[:, COL_RESOLVED] == 0).sum()),
        additions=0 if counters is None else int(counters[0]),
        comparisons=0 if counters is None else int(counters[1]),
        column_stats=stats,
    )


def tgrand_matrix(H_bad: BitMatrix, S: BitMatrix, params: ChannelParams, mode: str = "sort",
                  budget: GuessBudget = GuessBudget()) -> RepairOutcome:
    """T-GRAND over all ``B`` columns; ``H_bad`` is ``L x (N-K)``, ``S`` is ``(N-K) x B``."""
    if H_bad.cols != S.rows:
        raise ValueError(f"H_bad {H_bad.shape} does not match syndrome {S.shape}")
    e_hat, stats, counters = run_tgrand(H_bad.words, _columns(S), params.p01, params.p10, mode, budget)
    return _outcome(e_hat, stats, counters)


def sd_matrix(H_bad: BitMatrix, S: BitMatrix, budget: GuessBudget = GuessBudget()) -> RepairOutcome:
    if H_bad.cols != S.rows:
        raise ValueError(f"H_bad {H_bad.shape} does not match syndrome {S.shape}")
    e_hat, stats = run_sd(H_bad.words, _columns(S), budget)
    return _outcome(e_hat, stats)


def verified_rows(reception: Reception, E_hat: BitMatrix) -> np.ndarray:
    """Indices (into ``reception.bad``) of rows whose repaired packet is correct."""
    if reception.E_true is None:
        raise ValueError("CRC oracle needs the true error matrix")
    if E_hat.rows != reception.bad.size:
        raise ValueError(f"E_hat has {E_hat.rows} rows, expected {reception.bad.size}")
    true_rows = reception.E_true.words[reception.bad]
    return np.flatnonzero(np.all(true_rows == E_hat.words, axis=1))


def repair_and_redecode(book: Codebook, reception: Reception, E_hat: BitMatrix) -> Redecode:
    """Repair erroneous packets with ``E_hat``, keep the ones passing CRC, re-decode."""
    ok = verified_rows(reception, E_hat)
    repaired = reception.bad[ok]
    rows = np.sort(np.concatenate([reception.good, repaired]))
    Y = reception.Y
    if repaired.size:
        fixed = Y.words.copy()
        fixed[repaired] ^= E_hat.words[ok]
        Y = BitMatrix(fixed, Y.cols)
    try:
        U = decode_rows(book, Y, rows)
    except Undecodable:
        U = None
    return Redecode(U=U, repaired_rows=repaired)
