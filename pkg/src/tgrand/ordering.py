"""Likelihood ordering of transition groups.

A column of ``L0`` zeros and ``L1`` ones moves to the next column by flipping
``l0`` zeros and ``l1`` ones. All vectors sharing ``(l0, l1)`` are equally
likely, with probability

    f(l0, l1) = p01**l0 (1-p01)**(L0-l0) p10**l1 (1-p10)**(L1-l1).

Ordering works on the penalty ``phi = alpha0*l0 + alpha1*l1`` (base-2 logs),
which is ``-log2 f`` up to a constant. When an alpha is negative the axis is
mirrored (``l -> L - l``) so every penalty is measured from the most likely
group and is non-negative; the order is the same as ordering ``f``.

Two procedures produce the order:

* :func:`calc_prob_and_sort` evaluates every penalty and heapsorts them.
* :func:`trace_sorted_prob` walks the staircase frontier of already emitted
  groups and emits groups lazily, so a caller stopping after ``l_th`` groups
  never touches the rest of the grid.

Ties (penalties equal up to a relative ``TIE_RTOL``) are broken by smaller
``l0`` first, then smaller ``l1``. Both procedures keep exact floating-point
operation tallies (additions and comparisons) in an :class:`OpCounters`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from ._accel import njit

ADD = 0
CMP = 1
# Penalties closer than this (relative) are ties. Equal penalties reached by
# different summation paths can differ by a few ulps; without a shared
# threshold the two procedures could break such ties differently.
TIE_RTOL = 1e-11


class TransitionGroup(NamedTuple):
    l0: int
    l1: int
    phi: float


@dataclass
class OpCounters:
    additions: int = 0
    comparisons: int = 0


def alphas(p01: float, p10: float) -> tuple[float, float]:
    """``(log2((1-p01)/p01), log2((1-p10)/p10))``."""
    for name, p in (("p01", p01), ("p10", p10)):
        if not 0.0 < p < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {p}")
    return math.log2((1.0 - p01) / p01), math.log2((1.0 - p10) / p10)


def orientation(p01: float, p10: float) -> tuple[float, float, bool, bool]:
    """Non-negative slopes plus mirror flags for each axis."""
    a0, a1 = alphas(p01, p10)
    return abs(a0), abs(a1), a0 < 0, a1 < 0


def group_probability(p01: float, p10: float, L0: int, L1: int, l0: int, l1: int) -> float:
    if not (0 <= l0 <= L0 and 0 <= l1 <= L1):
        raise ValueError(f"(l0, l1)=({l0}, {l1}) outside grid {L0}x{L1}")
    return p01**l0 * (1 - p01) ** (L0 - l0) * p10**l1 * (1 - p10) ** (L1 - l1)


# --------------------------------------------------------------------------
# kernels


@njit
def penalty_table(a, n, counters):
    t = np.empty(n + 1, dtype=np.float64)
    t[0] = 0.0
    for k in range(1, n + 1):
        t[k] = t[k - 1] + a
    counters[ADD] += n
    return t


@njit
def _cmp(x, y):
    """-1, 0 or 1 with near-equal values reported as 0."""
    if abs(x - y) <= TIE_RTOL * max(abs(x), abs(y)):
        return 0
    return -1 if x < y else 1


@njit
def _key_less(phi, o0, o1, i, j):
    c = _cmp(phi[i], phi[j])
    if c != 0:
        return c < 0
    if o0[i] != o0[j]:
        return o0[i] < o0[j]
    return o1[i] < o1[j]


@njit
def _sift_down(perm, start, end, phi, o0, o1, counters):
    root = start
    while True:
        child = 2 * root + 1
        if child > end:
            return
        if child + 1 <= end:
            counters[CMP] += 1
            if _key_less(phi, o0, o1, perm[child], perm[child + 1]):
                child += 1
        counters[CMP] += 1
        if _key_less(phi, o0, o1, perm[root], perm[child]):
            t = perm[root]
            perm[root] = perm[child]
            perm[child] = t
            root = child
        else:
            return


@njit
def sort_groups(a0, a1, flip0, flip1, L0, L1, counters):
    """All ``(L0+1)(L1+1)`` groups in ascending penalty order.

    Returns ``(l0, l1, phi)`` arrays in original (unmirrored) coordinates.
    """
    t0 = penalty_table(a0, L0, counters)
    t1 = penalty_table(a1, L1, counters)
    n = (L0 + 1) * (L1 + 1)
    phi = np.empty(n, dtype=np.float64)
    o0 = np.empty(n, dtype=np.int64)
    o1 = np.empty(n, dtype=np.int64)
    k = 0
    for m0 in range(L0 + 1):
        for m1 in range(L1 + 1):
            phi[k] = t0[m0] + t1[m1]
            o0[k] = L0 - m0 if flip0 else m0
            o1[k] = L1 - m1 if flip1 else m1
            k += 1
    counters[ADD] += n
    perm = np.arange(n)
    for start in range((n - 2) // 2, -1, -1):
        _sift_down(perm, start, n - 1, phi, o0, o1, counters)
    for end in range(n - 1, 0, -1):
        t = perm[0]
        perm[0] = perm[end]
        perm[end] = t
        _sift_down(perm, 0, end - 1, phi, o0, o1, counters)
    return o0[perm], o1[perm], phi[perm]


# Trace state layout (int64 array ``st``):
ST_NL, ST_NQ, ST_PENDING, ST_P0, ST_P1, ST_EMITTED, ST_L0, ST_L1, ST_FLIP0, ST_FLIP1 = range(10)
ST_SIZE = 10


@njit
def trace_init(a0, a1, flip0, flip1, L0, L1, counters):
    t0 = penalty_table(a0, L0, counters)
    t1 = penalty_table(a1, L1, counters)
    cap = min(L0, L1) + 2
    cl = np.zeros((cap, 2), dtype=np.int64)
    q = np.zeros((cap, 2), dtype=np.int64)
    st = np.zeros(ST_SIZE, dtype=np.int64)
    st[ST_L0] = L0
    st[ST_L1] = L1
    st[ST_FLIP0] = 1 if flip0 else 0
    st[ST_FLIP1] = 1 if flip1 else 0
    # The most likely group seeds the candidate queue.
    st[ST_NQ] = 1
    return t0, t1, cl, q, st


@njit
def _before(t0, t1, st, x0, x1, y0, y1, counters):
    """Strict order on two distinct corners of the unexplored region.

    Corners form an antichain, so one coordinate grows while the other
    shrinks and the penalty difference reduces to comparing two table
    entries: no addition is needed.
    """
    counters[CMP] += 1
    if x0 > y0 and x1 < y1:
        lhs = t0[x0 - y0]
        rhs = t1[y1 - x1]
    elif x0 < y0 and x1 > y1:
        lhs = t1[x1 - y1]
        rhs = t0[y0 - x0]
    else:
        raise AssertionError("candidate corners must form an antichain")
    c = _cmp(lhs, rhs)
    if c != 0:
        return c < 0
    L0 = st[ST_L0]
    L1 = st[ST_L1]
    ox0 = L0 - x0 if st[ST_FLIP0] else x0
    oy0 = L0 - y0 if st[ST_FLIP0] else y0
    if ox0 != oy0:
        return ox0 < oy0
    ox1 = L1 - x1 if st[ST_FLIP1] else x1
    oy1 = L1 - y1 if st[ST_FLIP1] else y1
    return ox1 < oy1


@njit
def _queue_insert(t0, t1, q, st, c0, c1, counters):
    # q[0:n] runs from least to most likely; the next emission is q[n-1].
    n = st[ST_NQ]
    for i in range(n):
        if q[i, 0] == c0 and q[i, 1] == c1:
            return
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) // 2
        if _before(t0, t1, st, c0, c1, q[mid, 0], q[mid, 1], counters):
            lo = mid + 1
        else:
            hi = mid
    for k in range(n, lo, -1):
        q[k, 0] = q[k - 1, 0]
        q[k, 1] = q[k - 1, 1]
    q[lo, 0] = c0
    q[lo, 1] = c1
    st[ST_NQ] = n + 1


@njit
def trace_settle(t0, t1, cl, q, st, counters):
    """Fold the last emitted group into the explored region.

    The group joins the corner list (dropping corners it dominates). Only the
    two unexplored-region corners adjacent to it can be new; any of them not
    already queued is inserted.
    """
    if st[ST_PENDING] == 0:
        return
    st[ST_PENDING] = 0
    a = st[ST_P0]
    b = st[ST_P1]
    L0 = st[ST_L0]
    L1 = st[ST_L1]
    n = st[ST_NL]
    k = 0
    for i in range(n):
        if cl[i, 0] <= a and cl[i, 1] <= b:
            continue
        cl[k, 0] = cl[i, 0]
        cl[k, 1] = cl[i, 1]
        k += 1
    pos = k
    for i in range(k):
        if cl[i, 0] > a:
            pos = i
            break
    for i in range(k, pos, -1):
        cl[i, 0] = cl[i - 1, 0]
        cl[i, 1] = cl[i - 1, 1]
    cl[pos, 0] = a
    cl[pos, 1] = b
    k += 1
    st[ST_NL] = k
    has_prev = pos > 0
    has_next = pos < k - 1
    if has_prev or b < L1:
        u0 = cl[pos - 1, 0] + 1 if has_prev else 0
        _queue_insert(t0, t1, q, st, u0, b + 1, counters)
    if has_next or a < L0:
        r1 = cl[pos + 1, 1] + 1 if has_next else 0
        _queue_insert(t0, t1, q, st, a + 1, r1, counters)


@njit
def trace_next(t0, t1, cl, q, st, counters, out):
    """Emit the next group into ``out = [l0, l1]``; returns its penalty or -1."""
    trace_settle(t0, t1, cl, q, st, counters)
    n = st[ST_NQ]
    if n == 0:
        return -1.0
    m0 = q[n - 1, 0]
    m1 = q[n - 1, 1]
    st[ST_NQ] = n - 1
    phi = t0[m0] + t1[m1]
    counters[ADD] += 1
    st[ST_PENDING] = 1
    st[ST_P0] = m0
    st[ST_P1] = m1
    st[ST_EMITTED] += 1
    out[0] = st[ST_L0] - m0 if st[ST_FLIP0] else m0
    out[1] = st[ST_L1] - m1 if st[ST_FLIP1] else m1
    return phi


# --------------------------------------------------------------------------
# Python surface


@dataclass
class OrderingRun:
    """Result of :func:`calc_prob_and_sort`."""

    groups: list[TransitionGroup]
    counters: OpCounters

    def __iter__(self) -> Iterator[TransitionGroup]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(g.l0, g.l1) for g in self.groups]


def _check_grid(L0: int, L1: int) -> None:
    if L0 < 0 or L1 < 0:
        raise ValueError(f"grid sizes must be >= 0 (got L0={L0}, L1={L1})")


def calc_prob_and_sort(p01: float, p10: float, L0: int, L1: int) -> OrderingRun:
    _check_grid(L0, L1)
    a0, a1, f0, f1 = orientation(p01, p10)
    counters = np.zeros(2, dtype=np.int64)
    l0, l1, phi = sort_groups(a0, a1, f0, f1, L0, L1, counters)
    groups = [TransitionGroup(int(x), int(y), float(z)) for x, y, z in zip(l0, l1, phi)]
    return OrderingRun(groups, OpCounters(int(counters[ADD]), int(counters[CMP])))


def complement_corners(corners: list[tuple[int, int]], L0: int, L1: int) -> list[tuple[int, int]]:
    """Corners of the unexplored region given the explored region's corners.

    ``corners`` must be sorted by increasing first coordinate (hence
    decreasing second coordinate). An empty explored region leaves ``(0, 0)``.
    """
    if not corners:
        return [(0, 0)]
    out = []
    if corners[0][1] < L1:
        out.append((0, corners[0][1] + 1))
    for (c0, _), (_, d1) in zip(corners, corners[1:]):
        out.append((c0 + 1, d1 + 1))
    if corners[-1][0] < L0:
        out.append((corners[-1][0] + 1, 0))
    return out


class CornerFrontier:
    """Staircase state of a lazy trace.

    Coordinates stored here are in the mirrored frame where both slopes are
    non-negative; emitted groups are converted back to the original frame.
    The last emitted group is folded into the corner list on the following
    step, so stopping after ``l`` groups costs exactly what those ``l``
    groups needed.
    """

    def __init__(self, p01: float, p10: float, L0: int, L1: int):
        _check_grid(L0, L1)
        self.L0, self.L1 = L0, L1
        self.a0, self.a1, self.flip0, self.flip1 = orientation(p01, p10)
        self._counters = np.zeros(2, dtype=np.int64)
        self._t0, self._t1, self._cl, self._q, self._st = trace_init(
            self.a0, self.a1, self.flip0, self.flip1, L0, L1, self._counters
        )
        self._out = np.zeros(2, dtype=np.int64)

    @property
    def counters(self) -> OpCounters:
        return OpCounters(int(self._counters[ADD]), int(self._counters[CMP]))

    @property
    def emitted(self) -> int:
        return int(self._st[ST_EMITTED])

    @property
    def exhausted(self) -> bool:
        return self._st[ST_NQ] == 0 and self._st[ST_PENDING] == 0 and self.emitted > 0

    def step(self) -> TransitionGroup | None:
        phi = trace_next(self._t0, self._t1, self._cl, self._q, self._st, self._counters, self._out)
        if phi < 0:
            return None
        return TransitionGroup(int(self._out[0]), int(self._out[1]), float(phi))

    def settle(self) -> None:
        """Apply the pending corner update now instead of on the next step."""
        trace_settle(self._t0, self._t1, self._cl, self._q, self._st, self._counters)

    @property
    def corners_L(self) -> list[tuple[int, int]]:
        """Corners of the explored region, including the last emitted group."""
        cl = [tuple(map(int, c)) for c in self._cl[: self._st[ST_NL]]]
        if self._st[ST_PENDING]:
            a, b = int(self._st[ST_P0]), int(self._st[ST_P1])
            cl = sorted([c for c in cl if not (c[0] <= a and c[1] <= b)] + [(a, b)])
        return cl

    @property
    def corners_comp(self) -> list[tuple[int, int]]:
        if self.emitted == 0:
            return [(0, 0)]
        return complement_corners(self.corners_L, self.L0, self.L1)

    @property
    def queue(self) -> list[tuple[int, int]]:
        """Queued candidate corners, most likely first (valid after :meth:`settle`)."""
        n = int(self._st[ST_NQ])
        return [tuple(map(int, self._q[i])) for i in range(n - 1, -1, -1)]


def frontier_step(frontier: CornerFrontier) -> tuple[TransitionGroup | None, CornerFrontier]:
    """Advance ``frontier`` by one group; ``None`` signals the grid is exhausted."""
    return frontier.step(), frontier


class TraceSortedProb:
    """Lazy iterator over groups in ascending penalty order."""

    def __init__(self, p01: float, p10: float, L0: int, L1: int):
        self.frontier = CornerFrontier(p01, p10, L0, L1)

    @property
    def counters(self) -> OpCounters:
        return self.frontier.counters

    def __iter__(self) -> "TraceSortedProb":
        return self

    def __next__(self) -> TransitionGroup:
        g = self.frontier.step()
        if g is None:
            raise StopIteration
        return g


def trace_sorted_prob(p01: float, p10: float, L0: int, L1: int) -> TraceSortedProb:
    return TraceSortedProb(p01, p10, L0, L1)
