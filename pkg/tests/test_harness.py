import math

import numpy as np
import pytest

from tgrand import harness
from tgrand.channel import params_from_stats
from tgrand.guessers import GuessBudget
from tgrand.harness import (
    COLUMNS,
    ExperimentConfig,
    ResultRecord,
    emit_results,
    format_results,
    parse_results,
    run_completion_delay,
    run_decoding_probability,
    run_error_matrix_match,
    run_opcount_survey,
)
from tgrand.ordering import orientation


def small(**kw):
    base = dict(K=6, N_values=(6, 9, 12), epsilon=(0.05,), lambda_burst=(4.0,), B=(32,), trials=60, master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize(
    "kw, field",
    [
        (dict(trials=0), "trials"),
        (dict(N_values=(5,)), "N_values"),
        (dict(epsilon=(1.2,)), "epsilon"),
        (dict(epsilon=(0.6,), lambda_burst=(1.0,)), "epsilon"),
        (dict(methods=("rlc", "magic")), "methods"),
        (dict(B=(0,)), "B"),
        (dict(K=0), "K"),
    ],
)
def test_config_validation_names_field(kw, field):
    with pytest.raises(ValueError, match=field):
        small(**kw)


def test_config_dict_round_trip():
    cfg = small(budget=GuessBudget(l_th=5, max_queries=1000, on_exhaustion="continue"))
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "bogus": 1})


def test_trial_prefix_property():
    params = params_from_stats(0.05, 4)
    a = harness._Trial(5, params, 16, np.random.default_rng(1), np.random.default_rng(2))
    b = harness._Trial(5, params, 16, np.random.default_rng(1), np.random.default_rng(2))
    a.grow(20)
    for n in range(5, 21):
        b.grow(n)
    assert np.array_equal(a.E, b.E) and np.array_equal(a.P, b.P)


def test_paired_dominance_per_trial():
    cfg = small(trials=80)
    res = harness._chunk_decoding(cfg, 0, range(80), 0.05, 4.0, 32)
    success = res[..., 0]
    rlc = success[:, :, 0]
    for m in range(1, len(cfg.methods)):
        assert np.all(success[:, :, m] >= rlc)


def test_decoding_probability_records():
    cfg = small()
    recs = run_decoding_probability(cfg)
    assert len(recs) == len(cfg.N_values) * len(cfg.methods)
    for r in recs:
        assert 0 <= r.decoding_probability <= 1
        assert r.std_error == pytest.approx(math.sqrt(r.decoding_probability * (1 - r.decoding_probability) / r.trials))
    by = {(r.method, r.N): r.decoding_probability for r in recs}
    for m in cfg.methods:
        for n1, n2 in zip(cfg.N_values, cfg.N_values[1:]):
            # Nested prefixes make plain RLC monotone trial by trial.
            if m == "rlc":
                assert by[(m, n2)] >= by[(m, n1)]
            else:
                se = math.sqrt(0.25 / cfg.trials)
                assert by[(m, n2)] >= by[(m, n1)] - 3 * math.sqrt(2) * se


def test_error_free_limit():
    cfg = small(epsilon=(1e-7,), N_values=(11,), trials=30)
    assert all(r.decoding_probability == 1.0 for r in run_decoding_probability(cfg))
    assert all(r.mean_transmitted == 6 for r in run_completion_delay(cfg))


def test_determinism_across_threads():
    cfg = small(trials=130)
    runs = [run_decoding_probability(cfg, threads=t) for t in (1, 2, 8)]
    assert runs[0] == runs[1] == runs[2]
    runs = [run_completion_delay(cfg, threads=t) for t in (1, 3)]
    assert runs[0] == runs[1]


def test_seed_changes_results():
    a = run_decoding_probability(small(master_seed=1))
    b = run_decoding_probability(small(master_seed=2))
    assert a != b


def test_completion_delay_ordering():
    recs = {r.method: r.mean_transmitted for r in run_completion_delay(small(trials=150, B=(64,)))}
    assert recs["rlc+tgrand_sort"] <= recs["rlc"]
    assert recs["rlc+sd"] <= recs["rlc"]
    assert all(v >= 6 for v in recs.values())


def test_completion_delay_cap():
    cfg = small(epsilon=(0.3,), lambda_burst=(2.0,), trials=5, n_cap=8, methods=("rlc",))
    (rec,) = run_completion_delay(cfg)
    assert rec.mean_transmitted <= 8


def test_cumulative_match():
    L = np.array([0, 0, 1, 3, 3])
    hit = np.array([1, 1, 0, 1, 0])
    assert harness.cumulative_match(L, hit, 4) == {0: 1.0, 1: 2 / 3, 2: 2 / 3, 3: 3 / 5, 4: 3 / 5}


def test_matrix_match_zero_bucket_and_dominance():
    cfg = ExperimentConfig(K=20, N_values=(32,), epsilon=(0.06,), trials=150, master_seed=4,
                           methods=("rlc+sd", "rlc+tgrand_sort"))
    recs = {r.method: r.match_probability_by_L for r in run_error_matrix_match(cfg)}
    sd, tg = recs["rlc+sd"], recs["rlc+tgrand_sort"]
    se = math.sqrt(0.25 / cfg.trials)
    for l in sd:
        assert tg[l] >= sd[l] - 3 * se
    tiny = ExperimentConfig(K=4, N_values=(6,), epsilon=(0.001,), trials=20, methods=("rlc+sd",))
    (rec,) = run_error_matrix_match(tiny)
    assert rec.match_probability_by_L[0] == 1.0


def test_matrix_match_needs_guesser():
    with pytest.raises(ValueError, match="methods"):
        run_error_matrix_match(small(methods=("rlc",)))


def test_survey_kernel_matches_table1_per_run():
    params = params_from_stats(0.05, 4)
    a0, a1, f0, f1 = orientation(params.p01, params.p10)
    rng = np.random.default_rng(0)
    for _ in range(50):
        N, B = int(rng.integers(1, 25)), int(rng.integers(2, 20))
        E = (rng.random((N, B)) < 0.3).astype(np.uint8)
        L1 = E[:, :-1].sum(axis=0)
        L0 = N - L1
        ctr = np.zeros(2, dtype=np.int64)
        harness._survey_kernel(E, a0, a1, f0, f1, False, 8, ctr)
        assert ctr[0] == int(((L0 + 1) * (L1 + 1) + L0 + L1).sum())
        ctr[:] = 0
        harness._survey_kernel(E, a0, a1, f0, f1, True, 8, ctr)
        assert ctr[0] == int((np.minimum(8, (L0 + 1) * (L1 + 1)) + N).sum())


def test_opcount_survey_close_to_closed_form():
    cfg = ExperimentConfig(K=10, N_values=(20,), trials=400, master_seed=2)
    sort, trace = run_opcount_survey(cfg)
    assert sort.reference_additions == pytest.approx(3779.2)
    assert sort.mean_additions == pytest.approx(3779.2, rel=0.05)
    assert trace.mean_additions == trace.reference_additions == 64 * (8 + 20)


def test_steady_state_zero_count():
    params = params_from_stats(0.05, 4)
    burn = harness.steady_state_burn_in(params)
    assert abs(params.mu) ** burn < 1e-8
    rng = np.random.default_rng(5)
    N, B, runs = 20, 64, 200
    u = rng.random((runs * N, B + burn))
    E = harness.markov_chains(u, params.p01, params.p10)[:, burn:]
    zeros = (E == 0).reshape(runs, N, B).sum(axis=1)
    # Columns within a run are correlated, so judge the per-run means.
    per_run = zeros.mean(axis=1)
    sigma = per_run.std(ddof=1) / math.sqrt(runs)
    assert abs(per_run.mean() - N * 0.95) <= 3 * sigma


def rec(**kw):
    base = dict(experiment="decoding-probability", method="rlc", K=10, N=20, epsilon=0.05, lambda_burst=4.0, B=64,
                trials=100)
    base.update(kw)
    return ResultRecord(**base)


def test_emit_parse_round_trip(tmp_path):
    recs = [
        rec(decoding_probability=0.18, std_error=0.0384, mean_queries=0.0),
        rec(method="rlc+sd", decoding_probability=1 / 3, mean_additions=1e-17),
        rec(experiment="matrix-match", method="rlc+sd", match_probability_by_L={0: 1.0, 3: 0.25}),
    ]
    cfg = {"K": 10, "experiment": "decoding-probability"}
    for fmt in ("csv", "json"):
        path = tmp_path / f"out.{fmt}"
        emit_results(recs, fmt, path, config=cfg)
        text = path.read_text()
        got_cfg, got = parse_results(text)
        assert got == recs and got_cfg == cfg
        assert format_results(got, fmt, got_cfg) == text


def test_csv_layout():
    text = format_results([rec(decoding_probability=0.5)], "csv", {"K": 10})
    lines = text.split("\n")
    assert lines[0].startswith("# config: ")
    assert lines[1] == ",".join(COLUMNS)
    assert text.endswith("\n") and "\r" not in text
    assert set(COLUMNS) == set(ResultRecord.__dataclass_fields__)


def test_empty_records_header_only():
    text = format_results([], "csv")
    assert text == ",".join(COLUMNS) + "\n"
    assert parse_results(text) == (None, [])


def test_emit_reports_path(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_results([], "csv", bad)


def test_run_experiment_dispatch():
    with pytest.raises(ValueError):
        harness.run_experiment("fig9", small())
    assert harness.run_experiment("decoding-probability", small(trials=5)) == run_decoding_probability(small(trials=5))
