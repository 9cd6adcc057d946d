"""Randomized invariants of the allocator, the simulators and the metrics."""
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbandit import (
    EpisodeTrace,
    FairnessParams,
    Reason,
    gini,
    jain_index,
    make_policy,
    required_pulls,
    select_arm,
    ucb_index,
    update,
    violation_count,
)
from fairbandit.bandit import ArmStats


@st.composite
def feasible_setup(draw, max_k=10, max_t=600):
    k = draw(st.integers(1, max_k))
    q = draw(st.integers(1, 60))
    p = draw(st.integers(0, q // k))
    T = draw(st.integers(1, max_t))
    means = draw(st.lists(st.floats(0, 1), min_size=k, max_size=k))
    seed = draw(st.integers(0, 2**32 - 1))
    return k, Fraction(p, q), T, means, seed


def play(kind, k, v, T, means, seed):
    rng = np.random.default_rng(seed)
    rewards = (rng.random((T, k)) < np.asarray(means)).astype(float)
    state = make_policy(kind, k, FairnessParams(v))
    decisions = []
    for t in range(T):
        d = select_arm(state)
        update(state, d.arm, rewards[t, d.arm])
        decisions.append(d)
    return state, decisions


@settings(max_examples=150, deadline=None)
@given(feasible_setup())
def test_rate_guarantee(setup):
    k, v, T, means, seed = setup
    counts = [0] * k
    state = make_policy("strict_rate_ucb", k, FairnessParams(v))
    rng = np.random.default_rng(seed)
    for t in range(1, T + 1):
        d = select_arm(state)
        assert 0 <= d.arm < k
        update(state, d.arm, float(rng.random() < means[d.arm]))
        counts[d.arm] += 1
        quota = required_pulls(t, v)
        assert all(c >= quota - 1 for c in counts)
        assert sum(c < quota for c in counts) <= k - 1
        assert sum(state.counts) == state.rounds_elapsed == t
    assert all(c / T >= v - Fraction(2, T) for c in counts)


@settings(max_examples=100, deadline=None)
@given(feasible_setup(max_k=6, max_t=400))
def test_zero_rate_reduces_to_ucb1(setup):
    k, _, T, means, seed = setup
    _, fair = play("strict_rate_ucb", k, 0, T, means, seed)
    _, plain = play("ucb1", k, 0, T, means, seed)
    assert [d.arm for d in fair] == [d.arm for d in plain]
    assert all(d.reason is not Reason.FAIRNESS_OVERRIDE for d in fair)


@settings(max_examples=100, deadline=None)
@given(feasible_setup(max_k=5, max_t=300))
def test_override_only_when_starving(setup):
    k, v, T, means, seed = setup
    rng = np.random.default_rng(seed)
    state = make_policy("strict_rate_ucb", k, FairnessParams(v))
    for t in range(1, T + 1):
        d = select_arm(state)
        if d.reason is Reason.FAIRNESS_OVERRIDE:
            assert state.counts[d.arm] < required_pulls(t, v)
        update(state, d.arm, float(rng.random() < means[d.arm]))


@settings(max_examples=60, deadline=None)
@given(feasible_setup(max_k=6, max_t=500))
def test_audit_deficit_at_most_one(setup):
    k, v, T, means, seed = setup
    _, decisions = play("strict_rate_ucb", k, v, T, means, seed)
    trace = EpisodeTrace(k=k, min_rate=v)
    for d in decisions:
        trace.append(d.arm, d.reason, 0.0)
    quota = np.array([required_pulls(t, v) for t in range(1, T + 1)])
    deficits = quota[:, None] - trace.running_counts()
    assert deficits.max(initial=0) <= 1
    assert violation_count(trace) == int((deficits > 0).sum())


@given(st.integers(1, 10**6), st.integers(0, 50), st.integers(1, 50))
def test_quota_monotone(t, p, q):
    v = Fraction(min(p, q), q)
    assert required_pulls(t, v) <= required_pulls(t + 1, v)
    assert required_pulls(t, Fraction(0)) == 0
    if v < 1:
        assert required_pulls(t, v) <= required_pulls(t, v + Fraction(1, 10**6))


@given(st.integers(1, 1000), st.floats(0, 1), st.integers(2, 10**6))
def test_index_decreases_with_pulls(n, mean, t):
    a = ucb_index(ArmStats(n, mean * n), t)
    b = ucb_index(ArmStats(n + 1, mean * (n + 1)), t)
    assert b < a < float("inf")


counts_st = st.lists(st.integers(0, 1000), min_size=1, max_size=12).filter(lambda xs: any(xs))


@given(counts_st, st.integers(1, 50))
def test_indices_scale_invariant(counts, c):
    scaled = [x * c for x in counts]
    assert np.isclose(jain_index(scaled), jain_index(counts), rtol=1e-12)
    assert np.isclose(gini(scaled), gini(counts), rtol=1e-12, atol=1e-15)


@given(counts_st)
def test_index_bounds_and_equality(counts):
    k = len(counts)
    j, g = jain_index(counts), gini(counts)
    assert 1 / k - 1e-12 <= j <= 1 + 1e-12
    assert -1e-12 <= g <= 1 - 1 / k + 1e-12
    equal = len(set(counts)) == 1
    assert (abs(j - 1) < 1e-12) == equal
    assert (abs(g) < 1e-12) == equal
