"""Monte Carlo experiments: decoding probability, completion delay,
error-matrix match rate and ordering operation counts.

Every trial owns two random streams derived from ``(master_seed, point,
trial)``: one for the parity rows of ``G`` and one for the channel. Rows are
drawn packet by packet, so the code and error pattern for ``N`` packets are
a prefix of those for any larger ``N`` in the same trial. All methods are
scored on the same realization (paired trials), and a guesser only runs when
plain RLC decoding fails. In completion-delay runs a packet that was
repaired and passed the CRC check stays in the usable set as ``N`` grows.

Trials are grouped into fixed-size chunks. Chunks may run on a thread pool
(the kernels release the GIL) but are always reduced in trial order, so the
output does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from ._accel import njit
from .channel import ChannelParams, markov_chains, params_from_stats
from .gf2 import _matmul_words, _rank_words, pack_bits
from .guessers import COL_QUERIES, GuessBudget, run_sd, run_tgrand
from .ordering import orientation, sort_groups, trace_init, trace_next
from .rlc import Codebook

METHODS = ("rlc", "rlc+sd", "rlc+tgrand_sort", "rlc+tgrand_trace")
GUESSERS = {"rlc+sd": "sd", "rlc+tgrand_sort": "sort", "rlc+tgrand_trace": "trace"}
SURVEY_METHODS = ("tgrand_sort", "tgrand_trace")
EXPERIMENTS = ("decoding-probability", "completion-delay", "matrix-match", "opcount")

CHUNK = 50
ROLE_CODE, ROLE_CHANNEL = 0, 1
# Burn-in for the op-count survey: run chains until mu**b is below this.
STEADY_TOL = 1e-9


def _tuple(v, cast):
    if isinstance(v, (str, bytes)) or not hasattr(v, "__iter__"):
        v = (v,)
    return tuple(cast(x) for x in v)


@dataclass(frozen=True)
class ExperimentConfig:
    K: int = 10
    N_values: tuple = (20,)
    epsilon: tuple = (0.05,)
    lambda_burst: tuple = (4.0,)
    B: tuple = (64,)
    trials: int = 5000
    master_seed: int = 0
    methods: tuple = METHODS
    budget: GuessBudget = field(default_factory=GuessBudget)
    # Completion-delay runs stop growing N here (the trial is then censored).
    n_cap: int | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "N_values", _tuple(self.N_values, int))
        set_(self, "epsilon", _tuple(self.epsilon, float))
        set_(self, "lambda_burst", _tuple(self.lambda_burst, float))
        set_(self, "B", _tuple(self.B, int))
        set_(self, "methods", _tuple(self.methods, str))
        if isinstance(self.budget, dict):
            set_(self, "budget", GuessBudget(**self.budget))

        if self.K < 1:
            raise ValueError(f"K: must be >= 1 (got {self.K})")
        if self.trials < 1:
            raise ValueError(f"trials: must be >= 1 (got {self.trials})")
        if not self.N_values:
            raise ValueError("N_values: at least one N is required")
        bad_n = [n for n in self.N_values if n < self.K]
        if bad_n:
            raise ValueError(f"N_values: every N must be >= K={self.K} (got {bad_n})")
        if any(b < 1 for b in self.B):
            raise ValueError(f"B: must be >= 1 (got {self.B})")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ValueError(f"methods: unknown {unknown}; choose from {METHODS}")
        for eps, lam in itertools.product(self.epsilon, self.lambda_burst):
            try:
                params_from_stats(eps, lam)
            except ValueError as exc:
                raise ValueError(f"epsilon/lambda_burst: {exc}") from None
        if self.n_cap is not None and self.n_cap < self.K:
            raise ValueError(f"n_cap: must be >= K={self.K} (got {self.n_cap})")

    def points(self):
        """``(index, epsilon, lambda, B)`` for every channel/packet-size combination."""
        grid = itertools.product(self.epsilon, self.lambda_burst, self.B)
        return [(i, e, l, b) for i, (e, l, b) in enumerate(grid)]

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    method: str
    K: int
    N: int
    epsilon: float
    lambda_burst: float
    B: int
    trials: int
    decoding_probability: float | None = None
    std_error: float | None = None
    mean_queries: float | None = None
    mean_additions: float | None = None
    mean_comparisons: float | None = None
    mean_transmitted: float | None = None
    reference_additions: float | None = None
    match_probability_by_L: dict | None = None


COLUMNS = tuple(f.name for f in fields(ResultRecord))
_INT_COLUMNS = {"K", "N", "B", "trials"}
_STR_COLUMNS = {"experiment", "method"}


def binomial_std_error(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def _rng(seed: int, point: int, trial: int, role: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, trial, role)))


# --------------------------------------------------------------------------
# one trial


class _Trial:
    """Code and channel realization that can grow one packet at a time."""

    def __init__(self, K, params: ChannelParams, B, code_rng, chan_rng, burn_in=0):
        self.K, self.B, self.params, self.burn_in = K, B, params, burn_in
        self._code_rng, self._chan_rng = code_rng, chan_rng
        self.P = np.zeros((0, K), dtype=np.uint8)
        self.E = np.zeros((0, B), dtype=np.uint8)
        self._book_n = -1

    def grow(self, n):
        if self.E.shape[0] >= n:
            return
        extra = n - self.E.shape[0]
        u = self._chan_rng.random((extra, self.B + self.burn_in))
        rows = markov_chains(u, self.params.p01, self.params.p10)[:, self.burn_in:]
        self.E = np.vstack([self.E, rows])
        need_p = max(0, n - self.K) - self.P.shape[0]
        if need_p > 0:
            p = (self._code_rng.random((need_p, self.K)) < 0.5).astype(np.uint8)
            self.P = np.vstack([self.P, p])

    def _code(self, N):
        if self._book_n != N:
            self._book = Codebook.from_parity(self.P[: N - self.K])
            self._book_n = N
        return self._book

    def attempt(self, N, method, budget, cleared=None):
        """Score one method on the first ``N`` packets.

        ``cleared`` lists rows already repaired earlier in this trial; they
        count as error-free. Returns ``(success, queries, additions,
        comparisons, repaired_rows)``.
        """
        self.grow(N)
        K = self.K
        book = self._code(N)
        E = self.E[:N]
        if cleared is not None and cleared.size:
            E = E.copy()
            E[cleared] = 0
        row_bad = E.any(axis=1)
        good = np.flatnonzero(~row_bad)
        bad = np.flatnonzero(row_bad)
        G = book.G.words

        def full_rank(rows):
            return rows.size >= K and _rank_words(G[rows], K) == K

        none = np.zeros(0, dtype=np.int64)
        if full_rank(good):
            return True, 0, 0, 0, none
        kind = GUESSERS.get(method)
        if kind is None:
            return False, 0, 0, 0, none
        H = book.H.words
        s_cols = _matmul_words(pack_bits(E.T), N, H)
        masks = H[bad]
        if kind == "sd":
            e_hat, stats = run_sd(masks, s_cols, budget)
            adds = comps = 0
        else:
            e_hat, stats, (adds, comps) = run_tgrand(masks, s_cols, self.params.p01, self.params.p10, kind, budget)
        fixed = bad[np.all(e_hat == E[bad], axis=1)]
        ok = full_rank(np.sort(np.concatenate([good, fixed])))
        return ok, int(stats[:, COL_QUERIES].sum()), int(adds), int(comps), fixed


@njit
def _survey_kernel(E, a0, a1, flip0, flip1, use_trace, l_th, counters):
    """Ordering cost of each column ``b >= 1`` with origin ``E[:, b-1]``."""
    n, cols = E.shape
    out = np.zeros(2, dtype=np.int64)
    for b in range(1, cols):
        L1 = 0
        for i in range(n):
            L1 += E[i, b - 1]
        L0 = n - L1
        if use_trace:
            t0, t1, cl, q, st = trace_init(a0, a1, flip0, flip1, L0, L1, counters)
            for _ in range(l_th):
                if trace_next(t0, t1, cl, q, st, counters, out) < 0:
                    break
        else:
            sort_groups(a0, a1, flip0, flip1, L0, L1, counters)


def steady_state_burn_in(params: ChannelParams) -> int:
    mu = abs(params.mu)
    if mu < STEADY_TOL:
        return 1
    return int(math.ceil(math.log(STEADY_TOL) / math.log(mu)))


# --------------------------------------------------------------------------
# chunk workers: each returns one row per trial


def _chunk_decoding(cfg, point, trials, eps, lam, B):
    params = params_from_stats(eps, lam)
    n_max = max(cfg.N_values)
    res = np.zeros((len(trials), len(cfg.N_values), len(cfg.methods), 4), dtype=np.int64)
    for t_i, t in enumerate(trials):
        tr = _Trial(cfg.K, params, B, _rng(cfg.master_seed, point, t, ROLE_CODE),
                    _rng(cfg.master_seed, point, t, ROLE_CHANNEL))
        tr.grow(n_max)
        for n_i, N in enumerate(cfg.N_values):
            for m_i, m in enumerate(cfg.methods):
                res[t_i, n_i, m_i] = tr.attempt(N, m, cfg.budget)[:4]
    return res


def _chunk_delay(cfg, point, trials, eps, lam, B):
    params = params_from_stats(eps, lam)
    cap = cfg.n_cap or 20 * cfg.K
    # per method: transmitted N, queries, additions, comparisons
    res = np.zeros((len(trials), len(cfg.methods), 4), dtype=np.int64)
    for t_i, t in enumerate(trials):
        tr = _Trial(cfg.K, params, B, _rng(cfg.master_seed, point, t, ROLE_CODE),
                    _rng(cfg.master_seed, point, t, ROLE_CHANNEL))
        for m_i, m in enumerate(cfg.methods):
            # A packet repaired and verified at some N stays usable afterwards.
            kept = np.zeros(0, dtype=np.int64)
            N = cfg.K
            while True:
                ok, q, a, c, fixed = tr.attempt(N, m, cfg.budget, kept)
                res[t_i, m_i, 1:] += (q, a, c)
                if ok or N >= cap:
                    res[t_i, m_i, 0] = N
                    break
                kept = np.concatenate([kept, fixed])
                N += 1
    return res


def _chunk_match(cfg, point, trials, eps, lam, B):
    params = params_from_stats(eps, lam)
    guessers = [m for m in cfg.methods if m in GUESSERS]
    n_max = max(cfg.N_values)
    # per (N, method): L and whether E_hat == E_true
    res = np.zeros((len(trials), len(cfg.N_values), len(guessers), 2), dtype=np.int64)
    for t_i, t in enumerate(trials):
        tr = _Trial(cfg.K, params, B, _rng(cfg.master_seed, point, t, ROLE_CODE),
                    _rng(cfg.master_seed, point, t, ROLE_CHANNEL))
        tr.grow(n_max)
        for n_i, N in enumerate(cfg.N_values):
            book = Codebook.from_parity(tr.P[: N - cfg.K])
            E = tr.E[:N]
            bad = np.flatnonzero(E.any(axis=1))
            H = book.H.words
            s_cols = _matmul_words(pack_bits(E.T), N, H)
            for g_i, m in enumerate(guessers):
                kind = GUESSERS[m]
                if kind == "sd":
                    e_hat, _ = run_sd(H[bad], s_cols, cfg.budget)
                else:
                    e_hat, _, _ = run_tgrand(H[bad], s_cols, params.p01, params.p10, kind, cfg.budget)
                res[t_i, n_i, g_i] = (bad.size, np.array_equal(e_hat, E[bad]))
    return res


def _chunk_opcount(cfg, point, trials, eps, lam, B):
    params = params_from_stats(eps, lam)
    a0, a1, f0, f1 = orientation(params.p01, params.p10)
    burn = steady_state_burn_in(params)
    res = np.zeros((len(trials), len(cfg.N_values), 2, 2), dtype=np.int64)
    for t_i, t in enumerate(trials):
        rng = _rng(cfg.master_seed, point, t, ROLE_CHANNEL)
        for n_i, N in enumerate(cfg.N_values):
            # One extra column: the column before b=1 serves as its origin.
            u = rng.random((N, B + 1 + burn))
            E = markov_chains(u, params.p01, params.p10)[:, burn:]
            for mode in (0, 1):
                ctr = np.zeros(2, dtype=np.int64)
                _survey_kernel(E, a0, a1, f0, f1, mode == 1, cfg.budget.l_th, ctr)
                res[t_i, n_i, mode] = ctr
    return res


_WORKERS = {
    "decoding-probability": _chunk_decoding,
    "completion-delay": _chunk_delay,
    "matrix-match": _chunk_match,
    "opcount": _chunk_opcount,
}


def _run_trials(experiment, cfg: ExperimentConfig, point, eps, lam, B, threads):
    worker = _WORKERS[experiment]
    chunks = [range(s, min(s + CHUNK, cfg.trials)) for s in range(0, cfg.trials, CHUNK)]
    threads = resolve_threads(threads)
    if threads == 1 or len(chunks) == 1:
        parts = [worker(cfg, point, c, eps, lam, B) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: worker(cfg, point, c, eps, lam, B), chunks))
    return np.concatenate(parts, axis=0)


def resolve_threads(threads: int | None) -> int:
    if not threads:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError(f"threads must be >= 0 (got {threads})")
    return threads


# --------------------------------------------------------------------------
# experiments


def _base(cfg, experiment, method, N, eps, lam, B, **kw):
    return ResultRecord(experiment=experiment, method=method, K=cfg.K, N=N, epsilon=eps,
                        lambda_burst=lam, B=B, trials=cfg.trials, **kw)


def run_decoding_probability(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRecord]:
    out = []
    for point, eps, lam, B in cfg.points():
        res = _run_trials("decoding-probability", cfg, point, eps, lam, B, threads)
        sums = res.sum(axis=0)
        for n_i, N in enumerate(cfg.N_values):
            for m_i, m in enumerate(cfg.methods):
                s, q, a, c = (float(x) / cfg.trials for x in sums[n_i, m_i])
                out.append(_base(cfg, "decoding-probability", m, N, eps, lam, B,
                                 decoding_probability=s, std_error=binomial_std_error(s, cfg.trials),
                                 mean_queries=q, mean_additions=a, mean_comparisons=c))
    return out


def run_completion_delay(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRecord]:
    out = []
    for point, eps, lam, B in cfg.points():
        res = _run_trials("completion-delay", cfg, point, eps, lam, B, threads)
        sums = res.sum(axis=0)
        for m_i, m in enumerate(cfg.methods):
            n, q, a, c = (float(x) / cfg.trials for x in sums[m_i])
            out.append(_base(cfg, "completion-delay", m, 0, eps, lam, B, mean_transmitted=n,
                             std_error=float(res[:, m_i, 0].std() / math.sqrt(cfg.trials)),
                             mean_queries=q, mean_additions=a, mean_comparisons=c))
    return out


def cumulative_match(L: np.ndarray, hit: np.ndarray, N: int) -> dict[int, float]:
    """``P(E_hat == E_true | at most l erroneous packets)`` for every reached ``l``."""
    tot = np.bincount(L, minlength=N + 1).cumsum()
    ok = np.bincount(L, weights=hit, minlength=N + 1).cumsum()
    return {l: float(ok[l] / tot[l]) for l in range(N + 1) if tot[l]}


def run_error_matrix_match(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRecord]:
    guessers = [m for m in cfg.methods if m in GUESSERS]
    if not guessers:
        raise ValueError("methods: matrix-match needs at least one guesser method")
    out = []
    for point, eps, lam, B in cfg.points():
        res = _run_trials("matrix-match", cfg, point, eps, lam, B, threads)
        for n_i, N in enumerate(cfg.N_values):
            for g_i, m in enumerate(guessers):
                L, hit = res[:, n_i, g_i, 0], res[:, n_i, g_i, 1]
                p = float(hit.mean())
                out.append(_base(cfg, "matrix-match", m, N, eps, lam, B, decoding_probability=p,
                                 std_error=binomial_std_error(p, cfg.trials),
                                 match_probability_by_L=cumulative_match(L, hit, N)))
    return out


def eq27_additions(N: int, epsilon: float, B: int) -> float:
    """Mean sort-mode additions for ``B`` columns with all ``N`` rows routed."""
    return B * (N * (N - 1) * epsilon * (1 - epsilon) + 2 * N + 1)


def run_opcount_survey(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRecord]:
    out = []
    for point, eps, lam, B in cfg.points():
        res = _run_trials("opcount", cfg, point, eps, lam, B, threads)
        means = res.mean(axis=0)
        for n_i, N in enumerate(cfg.N_values):
            refs = (eq27_additions(N, eps, B), B * (cfg.budget.l_th + N))
            for mode, m in enumerate(SURVEY_METHODS):
                out.append(_base(cfg, "opcount", m, N, eps, lam, B,
                                 mean_additions=float(means[n_i, mode, 0]),
                                 mean_comparisons=float(means[n_i, mode, 1]),
                                 reference_additions=float(refs[mode])))
    return out


RUNNERS = {
    "decoding-probability": run_decoding_probability,
    "completion-delay": run_completion_delay,
    "matrix-match": run_error_matrix_match,
    "opcount": run_opcount_survey,
}


def run_experiment(experiment: str, cfg: ExperimentConfig, threads: int = 1) -> list[ResultRecord]:
    try:
        runner = RUNNERS[experiment]
    except KeyError:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}") from None
    return runner(cfg, threads)


# --------------------------------------------------------------------------
# serialization


def _cell(name, v) -> str:
    if v is None:
        return ""
    if name == "match_probability_by_L":
        return ";".join(f"{k}:{v[k]!r}" for k in sorted(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _uncell(name, s: str):
    if name in _STR_COLUMNS:
        return s
    if s == "":
        return None
    if name in _INT_COLUMNS:
        return int(s)
    if name == "match_probability_by_L":
        return {int(k): float(v) for k, v in (kv.split(":") for kv in s.split(";"))}
    return float(s)


def format_results(records, fmt: str = "csv", config: dict | None = None) -> str:
    if fmt == "json":
        rows = [asdict(r) for r in records]
        for r in rows:
            if r["match_probability_by_L"] is not None:
                r["match_probability_by_L"] = {str(k): v for k, v in sorted(r["match_probability_by_L"].items())}
        return json.dumps({"config": config, "records": rows}, indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"format must be csv or json (got {fmt!r})")
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow([_cell(c, getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def emit_results(records, fmt: str = "csv", path=None, config: dict | None = None) -> None:
    """Write records to ``path`` (standard output when ``None``)."""
    text = format_results(records, fmt, config)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def parse_results(text: str) -> tuple[dict | None, list[ResultRecord]]:
    """Inverse of :func:`format_results`; detects JSON vs CSV."""
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        recs = []
        for r in doc["records"]:
            m = r.get("match_probability_by_L")
            if m is not None:
                r["match_probability_by_L"] = {int(k): v for k, v in m.items()}
            recs.append(ResultRecord(**r))
        return doc.get("config"), recs
    config = None
    body = []
    for line in text.splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None:
        return config, []
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    recs = [ResultRecord(**{c: _uncell(c, s) for c, s in zip(COLUMNS, row)}) for row in reader]
    return config, recs


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
