from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fptjump import closed_form as cf
from fptjump.jump_law import JumpLaw
from fptjump.oracle import compare_histograms
from fptjump.path_sim import (
    HIT_CONT,
    HIT_JUMP,
    ModelParams,
    Status,
    crossed_on_interval,
    sample_crossing_time,
    sample_hitting,
    sample_skeleton,
    simulate_hitting,
)
from fptjump.quadrature import integrate


def rng(seed=0):
    return np.random.default_rng(seed)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelParams(0.0, 1.0, JumpLaw.exponential(1.0), 0.0)
    with pytest.raises(ValueError):
        ModelParams(0.0, -1.0, JumpLaw.exponential(1.0), 1.0)
    assert ModelParams(-0.5, 2.0, JumpLaw.exponential(1.0), 1.0).mean_slope == pytest.approx(1.5)


def test_crossed_frequency_matches_formula():
    r = rng(1)
    n = 200_000
    out = crossed_on_interval(np.zeros(n), np.full(n, 0.4), 1.0, 1.0, r)
    p = 1 - cf.no_cross_prob_given_endpoint(0.4, 1.0, 1.0)
    assert abs(out.mean() - p) < 4 * np.sqrt(p * (1 - p) / n)


def test_crossing_time_depth_zero_is_right_edge():
    assert sample_crossing_time(0.0, 1.5, 1.0, 2.0, depth=0, rng=rng()) == 2.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 0.9), st.floats(-1, 3), st.floats(0.05, 3), st.integers(0, 2**31))
def test_crossing_time_inside_interval(x0, x1, u, seed):
    t = sample_crossing_time(x0, x1, 1.0, u, depth=12, rng=rng(seed))
    assert 0 <= t <= u


def test_crossing_time_law_bridge_ending_on_barrier():
    # for a bridge from 0 ending exactly on the barrier c=1 over [0, 1], the passage
    # time has density f(s, 1) * p_{1-s}(0) / p_1(1) with p_u the centered normal density
    n = 100_000
    t = sample_crossing_time(np.zeros(n), np.ones(n), 1.0, 1.0, depth=20, rng=rng(2))
    dens = lambda s: cf.bm_fpt_density(s, 1.0) * np.exp(0.5) / np.sqrt(np.maximum(1 - s, 1e-300))  # noqa: E731
    assert integrate(dens, 0, 1, tol=1e-8) == pytest.approx(1.0, abs=1e-5)
    cmp = compare_histograms(t, edges=np.linspace(0, 1, 41), density=dens)
    assert cmp.passed, cmp.statistic


def test_no_jumps_passage_time_law():
    model = ModelParams(0.3, 0.0, JumpLaw.exponential(1.0), 1.0)
    b = simulate_hitting(model, 4.0, 100_000, rng(3))
    assert set(np.unique(b.status)) <= {0, HIT_CONT}
    cmp = compare_histograms(b.tau[b.hit], edges=np.linspace(0, 4, 81), density=lambda u: cf.bm_fpt_density(u, 1.0, 0.3))
    assert cmp.passed
    p = integrate(lambda u: cf.bm_fpt_density(u, 1.0, 0.3), 0, 4, tol=1e-12)
    assert abs(b.hit.mean() - p) < 4 * np.sqrt(p * (1 - p) / b.status.size)


def test_jump_bookkeeping():
    model = ModelParams(0.0, 1.0, JumpLaw.mixture([(2.0, 0.5), (-0.3, 0.5)], []), 1.0)
    b = simulate_hitting(model, 5.0, 20_000, rng(4))
    j = b.status == HIT_JUMP
    assert j.any()
    np.testing.assert_array_equal(b.K[j] + b.L[j], b.jump[j])
    assert np.all(b.K[j] >= 0) and np.all(b.L[j] > 0)
    c = b.status == HIT_CONT
    assert np.all(b.K[c] == 0) and np.all(b.L[c] == 0)
    assert np.all(b.tau[b.hit] <= 5.0)


def test_overshoot_memoryless_for_exponential_jumps():
    model = ModelParams(-0.5, 2.0, JumpLaw.exponential(2.0), 1.0)
    b = simulate_hitting(model, 20.0, 100_000, rng(5))
    k = b.K[b.status == HIT_JUMP]
    cmp = compare_histograms(k, edges=np.linspace(0, 3, 31), density=lambda v: 2 * np.exp(-2 * v))
    assert cmp.passed


def test_same_seed_same_record():
    model = ModelParams(0.1, 1.0, JumpLaw.gaussian(0, 1), 1.0)
    assert sample_hitting(model, 5.0, rng=rng(9)) == sample_hitting(model, 5.0, rng=rng(9))


def test_record_status_values():
    model = ModelParams(0.1, 1.0, JumpLaw.gaussian(0, 1), 1.0)
    recs = simulate_hitting(model, 2.0, 500, rng(1)).records()
    assert {r.status for r in recs} <= set(Status)
    assert all((r.tau is None) == (r.status is Status.SURVIVED) for r in recs)


def test_skeleton_structure():
    model = ModelParams(0.0, 3.0, JumpLaw.exponential(1.0), 1.0)
    sk = sample_skeleton(model, 2.0, rng(6))
    assert np.all(np.diff(sk.jump_times) > 0)
    np.testing.assert_allclose(sk.post_jump_values - sk.pre_jump_values, sk.jumps)
    assert sk.n_jumps == sk.jump_times.size
