import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgrand.ordering import (
    CornerFrontier,
    alphas,
    calc_prob_and_sort,
    complement_corners,
    frontier_step,
    group_probability,
    trace_sorted_prob,
)


def sort_additions(L0, L1):
    return (L0 + 1) * (L1 + 1) + L0 + L1


def brute_order(p01, p10, L0, L1):
    """f values of every group, sorted descending."""
    return sorted(
        (group_probability(p01, p10, L0, L1, a, b) for a in range(L0 + 1) for b in range(L1 + 1)),
        reverse=True,
    )


def test_group_probability_fig2_values():
    assert group_probability(0.1, 0.4, 2, 3, 0, 2) == pytest.approx(0.0778, abs=5e-5)
    assert group_probability(0.1, 0.4, 2, 3, 0, 0) == pytest.approx(0.9**2 * 0.6**3)
    with pytest.raises(ValueError):
        group_probability(0.1, 0.4, 2, 3, 3, 0)


def test_group_probabilities_normalize():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p01, p10 = rng.uniform(0.01, 0.99, 2)
        L0, L1 = rng.integers(0, 9, 2)
        total = sum(
            math.comb(L0, a) * math.comb(L1, b) * group_probability(p01, p10, L0, L1, a, b)
            for a in range(L0 + 1)
            for b in range(L1 + 1)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


def test_sort_fig2():
    run = calc_prob_and_sort(0.1, 0.4, 2, 3)
    assert run.pairs[:3] == [(0, 0), (0, 1), (0, 2)]
    f = [group_probability(0.1, 0.4, 2, 3, *pq) for pq in run.pairs[:3]]
    assert f == pytest.approx([0.1750, 0.1166, 0.0778], abs=5e-5)
    assert run.counters.additions == 17


def test_sort_single_group():
    run = calc_prob_and_sort(0.3, 0.2, 0, 0)
    assert run.pairs == [(0, 0)]
    assert run.counters.additions == 1


def test_sort_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p01, p10 = rng.uniform(0.01, 0.99, 2)
        L0, L1 = rng.integers(0, 8, 2)
        run = calc_prob_and_sort(p01, p10, L0, L1)
        f = [group_probability(p01, p10, L0, L1, *pq) for pq in run.pairs]
        assert f == pytest.approx(brute_order(p01, p10, L0, L1), rel=1e-9)
        assert sorted(run.pairs) == sorted(itertools.product(range(L0 + 1), range(L1 + 1)))
        assert run.counters.additions == sort_additions(L0, L1)


def test_fig4_trace_path():
    a0, a1 = alphas(0.4, 0.3)
    assert (round(a0, 2), round(a1, 2)) == (0.58, 1.22) or (round(a0, 2), round(a1, 2)) == (0.59, 1.22)
    pairs = [(g.l0, g.l1) for g in itertools.islice(trace_sorted_prob(0.4, 0.3, 3, 3), 5)]
    assert pairs == [(0, 0), (1, 0), (2, 0), (0, 1), (3, 0)]


def test_second_step_compares_alphas():
    # With alpha1 < alpha0 the second group is (0, 1), otherwise (1, 0).
    g = list(itertools.islice(trace_sorted_prob(0.1, 0.4, 4, 4), 2))
    assert (g[1].l0, g[1].l1) == (0, 1)
    g = list(itertools.islice(trace_sorted_prob(0.4, 0.1, 4, 4), 2))
    assert (g[1].l0, g[1].l1) == (1, 0)


def test_mirrored_axis():
    # p01 > 1/2 makes alpha0 negative: flipping every zero is most likely.
    g = next(iter(trace_sorted_prob(0.8, 0.2, 5, 3)))
    assert (g.l0, g.l1) == (5, 0)
    assert calc_prob_and_sort(0.8, 0.2, 5, 3).pairs[0] == (5, 0)


def test_zero_alpha_axis():
    # p10 = 1/2: penalties ignore l1.
    phis = [g.phi for g in trace_sorted_prob(0.2, 0.5, 3, 4)]
    assert phis == sorted(phis)
    assert phis == pytest.approx([g.phi for g in calc_prob_and_sort(0.2, 0.5, 3, 4)], abs=1e-12)
    assert phis[:5] == pytest.approx([0.0] * 5)


def test_ties_break_on_smaller_l0():
    # p01 = p10 gives alpha0 = alpha1, so (1,0) and (0,1) tie.
    pairs = calc_prob_and_sort(0.2, 0.2, 3, 3).pairs
    assert pairs[1:3] == [(0, 1), (1, 0)]
    assert [(g.l0, g.l1) for g in trace_sorted_prob(0.2, 0.2, 3, 3)] == pairs


def test_complement_corners_fig3b():
    assert complement_corners([(0, 3), (1, 1), (2, 0)], 10, 10) == [(0, 4), (1, 2), (2, 1), (3, 0)]
    assert complement_corners([], 3, 3) == [(0, 0)]
    # Both conditional corners drop at the grid edge.
    assert complement_corners([(0, 3), (3, 0)], 3, 3) == [(1, 1)]


def test_frontier_initial_step():
    f = CornerFrontier(0.1, 0.4, 3, 3)
    assert f.corners_comp == [(0, 0)]
    g, f2 = frontier_step(f)
    assert (g.l0, g.l1) == (0, 0) and f2 is f


def check_frontier(p01, p10, L0, L1):
    f = CornerFrontier(p01, p10, L0, L1)
    seen = set()
    a0, a1 = alphas(p01, p10)
    while True:
        g = f.step()
        if g is None:
            break
        pair = (g.l0, g.l1)
        assert pair not in seen
        seen.add(pair)
        cl = f.corners_L
        # Corners form an antichain sorted by l0 ascending, l1 descending.
        for (x0, x1), (y0, y1) in zip(cl, cl[1:]):
            assert x0 < y0 and x1 > y1
        comp = f.corners_comp
        assert comp == complement_corners(cl, L0, L1)
        assert len(comp) <= min(L0 + 1, L1 + 1)
        f.settle()
        assert sorted(f.queue) == sorted(comp)
    assert len(seen) == (L0 + 1) * (L1 + 1)
    assert f.exhausted
    assert f.counters.additions == sort_additions(L0, L1)


def test_frontier_invariants_random():
    rng = np.random.default_rng(2)
    for _ in range(150):
        p01, p10 = rng.uniform(0.01, 0.99, 2)
        L0, L1 = (int(x) for x in rng.integers(0, 9, 2))
        check_frontier(p01, p10, L0, L1)


def test_degenerate_grids():
    for L0, L1 in [(0, 0), (0, 6), (6, 0)]:
        check_frontier(0.1, 0.3, L0, L1)
        trace = [(g.l0, g.l1) for g in trace_sorted_prob(0.1, 0.3, L0, L1)]
        assert trace == calc_prob_and_sort(0.1, 0.3, L0, L1).pairs


def test_table1_trace_counts():
    t = trace_sorted_prob(0.1, 0.3, 10, 10)
    list(itertools.islice(t, 8))
    assert t.counters.additions == 28


def test_laziness():
    full = [tuple(g) for g in trace_sorted_prob(0.07, 0.3, 9, 6)]
    for n in range(len(full) + 1):
        t = trace_sorted_prob(0.07, 0.3, 9, 6)
        prefix = [tuple(g) for g in itertools.islice(t, n)]
        assert prefix == full[:n]
        assert t.counters.additions == n + 15


@settings(max_examples=300, deadline=None)
@given(
    p01=st.floats(0.001, 0.999),
    p10=st.floats(0.001, 0.999),
    L0=st.integers(0, 12),
    L1=st.integers(0, 12),
    stop=st.integers(0, 200),
)
def test_trace_prefix_equals_sort(p01, p10, L0, L1, stop):
    ref = calc_prob_and_sort(p01, p10, L0, L1)
    t = trace_sorted_prob(p01, p10, L0, L1)
    got = list(itertools.islice(t, stop))
    n = len(got)
    assert n == min(stop, len(ref))
    assert [g.phi for g in got] == pytest.approx([g.phi for g in ref.groups[:n]], abs=1e-12)
    assert [(g.l0, g.l1) for g in got] == ref.pairs[:n]
    assert t.counters.additions == n + L0 + L1
    assert ref.counters.additions == sort_additions(L0, L1)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        calc_prob_and_sort(0.0, 0.3, 2, 2)
    with pytest.raises(ValueError):
        trace_sorted_prob(0.3, 1.0, 2, 2)
    with pytest.raises(ValueError):
        calc_prob_and_sort(0.3, 0.3, -1, 2)
