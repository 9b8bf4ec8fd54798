"""Simplified Gilbert-Elliott burst-error channel.

State 0 is the good state (bit received correctly), state 1 the bad state
(bit flipped). Each transmitted packet sees its own two-state chain that
starts in state 0 before its first bit, so the error matrix ``E`` has one
independent chain per row, run for ``B`` steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import USING_NUMBA, njit
from .gf2 import BitMatrix


@dataclass(frozen=True)
class ChannelStats:
    epsilon: float
    lam: float
    mu: float


@dataclass(frozen=True)
class ChannelParams:
    """Transition probabilities good->bad (``p01``) and bad->good (``p10``)."""

    p01: float
    p10: float

    def __post_init__(self):
        for name in ("p01", "p10"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0) or math.isnan(v):
                raise ValueError(f"{name} must lie in the open interval (0, 1), got {v}")

    @classmethod
    def from_stats(cls, epsilon: float, lam: float) -> "ChannelParams":
        return params_from_stats(epsilon, lam)

    @property
    def stats(self) -> ChannelStats:
        return derived_stats(self)

    @property
    def epsilon(self) -> float:
        return self.p01 / (self.p01 + self.p10)

    @property
    def mu(self) -> float:
        return 1.0 - self.p10 - self.p01


def params_from_stats(epsilon: float, lam: float) -> ChannelParams:
    """Transition probabilities for bit error rate ``epsilon`` and mean burst ``lam``."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not lam >= 1.0:
        raise ValueError(f"mean burst length must be >= 1, got {lam}")
    p01 = epsilon / (lam * (1.0 - epsilon))
    p10 = 1.0 / lam
    if p01 >= 1.0 or p10 >= 1.0:
        raise ValueError(
            f"epsilon={epsilon}, lambda={lam} give p01={p01:.6g}, p10={p10:.6g}; both must be < 1"
        )
    return ChannelParams(p01, p10)


def derived_stats(params: ChannelParams) -> ChannelStats:
    p01, p10 = params.p01, params.p10
    return ChannelStats(epsilon=p01 / (p01 + p10), lam=1.0 / p10, mu=1.0 - p10 - p01)


def expected_zeros_at_step(params: ChannelParams, n: int, b: int) -> float:
    """Mean number of the ``n`` chains in state 0 after ``b`` steps from all-zero."""
    if b < 0:
        raise ValueError("step must be >= 0")
    s = params.stats
    return n * (1.0 - s.epsilon * (1.0 - s.mu**b))


@njit
def _chains_loop(u, p01, p10):
    n, steps = u.shape
    out = np.empty((n, steps), dtype=np.uint8)
    for i in range(n):
        state = 0
        for b in range(steps):
            if state == 0:
                state = 1 if u[i, b] < p01 else 0
            else:
                state = 0 if u[i, b] < p10 else 1
            out[i, b] = state
    return out


def _chains_vec(u, p01, p10):
    n, steps = u.shape
    out = np.empty((n, steps), dtype=np.uint8)
    state = np.zeros(n, dtype=bool)
    for b in range(steps):
        col = u[:, b]
        state = np.where(state, col >= p10, col < p01)
        out[:, b] = state
    return out


markov_chains = _chains_loop if USING_NUMBA else _chains_vec


def error_bits(params: ChannelParams, n: int, b: int, rng: np.random.Generator, burn_in: int = 0) -> np.ndarray:
    """``n x b`` uint8 error pattern; row ``i`` consumes ``b + burn_in`` uniforms.

    Drawing rows in order means the first ``n`` rows of a larger draw from the
    same stream are identical to a draw of ``n`` rows.
    """
    if n < 1 or b < 1:
        raise ValueError(f"need N, B >= 1 (got N={n}, B={b})")
    u = rng.random((n, b + burn_in))
    return markov_chains(u, params.p01, params.p10)[:, burn_in:].copy()


def generate_error_matrix(
    params: ChannelParams, n: int, b: int, rng: np.random.Generator, burn_in: int = 0
) -> BitMatrix:
    return BitMatrix.from_bits(error_bits(params, n, b, rng, burn_in))
