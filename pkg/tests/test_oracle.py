from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from fptjump import closed_form as cf
from fptjump.errors import UsageError
from fptjump.jump_law import JumpLaw
from fptjump.oracle import (
    compare_histograms,
    grid_bridge_bias,
    grid_bridge_no_cross,
    grid_hitting,
    grid_hitting_batch,
    grid_path,
)
from fptjump.path_sim import HIT_JUMP, ModelParams, Status, simulate_hitting
from fptjump.quadrature import integrate


def rng(seed=0):
    return np.random.default_rng(seed)


def test_identical_samples_pass_with_zero_statistic():
    x = rng().normal(size=1000)
    cmp = compare_histograms(x, x, edges=np.linspace(-3, 3, 13))
    assert cmp.passed and cmp.statistic == 0.0


def test_gaussian_calibration_and_power():
    x = rng(1).normal(size=1_000_000)
    edges = np.linspace(-4, 4, 41)
    assert compare_histograms(x, edges=edges, density=stats.norm.pdf).passed
    assert not compare_histograms(x + 0.1, edges=edges, density=stats.norm.pdf).passed


def test_histogram_usage_errors():
    with pytest.raises(UsageError):
        compare_histograms([], [1.0], edges=[0, 1, 2])
    with pytest.raises(UsageError):
        compare_histograms([1.0], [1.0], edges=[0, 1])
    with pytest.raises(UsageError):
        compare_histograms([1.0], edges=[0, 1, 2])


def test_buckets_partition_range():
    cmp = compare_histograms(rng().normal(size=100), rng(1).normal(size=100), edges=np.linspace(-2, 2, 5))
    assert [b[1] for b in cmp.buckets[:-1]] == [b[0] for b in cmp.buckets[1:]]
    assert all(b[2] >= 0 and b[3] >= 0 for b in cmp.buckets)


def test_same_seed_same_grid_record():
    model = ModelParams(0.0, 1.0, JumpLaw.gaussian(0, 1), 1.0)
    assert grid_hitting(model, 2.0, 2**-8, rng(3)) == grid_hitting(model, 2.0, 2**-8, rng(3))


def test_grid_path_snaps_jumps():
    model = ModelParams(0.0, 2.0, JumpLaw.point_mass(5.0), 1.0)
    p = grid_path(model, 1.0, 0.01, rng(2))
    assert p.values.size == 101
    assert p.values[0] == 0.0
    np.testing.assert_allclose(p.times[-1], 1.0)


def test_big_jump_is_grid_exact():
    # Y = 2x: the first jump always crosses, so K and L agree with the skeleton walker exactly in law
    x = 1.0
    model = ModelParams(0.0, 1.0, JumpLaw.point_mass(2 * x), x)
    g = grid_hitting_batch(model, 3.0, 2**-10, 50_000, rng(4))
    s = simulate_hitting(model, 3.0, 50_000, rng(5))
    for b in (g, s):
        j = b.status == HIT_JUMP
        np.testing.assert_allclose(b.K[j] + b.L[j], 2 * x)
    gj, sj = g.status == HIT_JUMP, s.status == HIT_JUMP
    assert abs(gj.mean() - sj.mean()) < 4 * np.sqrt(0.5 / 50_000)
    cmp = compare_histograms(g.L[gj], s.L[sj], edges=np.linspace(0, 3, 31))
    assert cmp.passed


def test_no_jump_grid_bias_shrinks_with_step():
    model = ModelParams(0.0, 0.0, JumpLaw.exponential(1.0), 1.0)
    exact = integrate(lambda u: cf.bm_fpt_density(u, 1.0), 0, 2.0, tol=1e-12)
    gaps = []
    for step in (2**-6, 2**-8, 2**-10):
        g = grid_hitting_batch(model, 2.0, step, 40_000, rng(6))
        gaps.append(exact - g.hit.mean())
    assert gaps[0] > 0
    assert gaps[0] > gaps[1] > gaps[2]


def test_bridge_oracle_with_bias():
    a, c, u, step = 0.2, 1.0, 1.0, 2**-10
    p, se = grid_bridge_no_cross(a, c, u, step, 20_000, rng(7))
    bias = grid_bridge_bias(a, c, u, step)
    assert bias > 0
    assert abs(p - bias - cf.no_cross_prob_given_endpoint(a, c, u)) < 4 * se + 0.5 * bias


def test_status_enum_round_trip():
    model = ModelParams(0.0, 1.0, JumpLaw.gaussian(0, 1), 1.0)
    r = grid_hitting(model, 0.01, 2**-8, rng(8))
    assert r.status in set(Status)
