from __future__ import annotations

import numpy as np
import pytest

from fptjump import closed_form as cf
from fptjump import estimators as est
from fptjump.jump_law import JumpLaw
from fptjump.path_sim import ModelParams
from fptjump.quadrature import integrate

EXP = ModelParams(0.0, 1.0, JumpLaw.exponential(1.0), 1.0)


def phi(k):
    return np.exp(-np.asarray(k, dtype=float))


def psi(l):
    return 1.0 / (1.0 + np.asarray(l, dtype=float))


def test_no_jump_density_is_exact():
    model = ModelParams(0.0, 0.0, JumpLaw.exponential(1.0), 1.0)
    e = est.density(model, 1.0, 1000, seed=42)
    assert e.value == pytest.approx(0.241971, abs=1e-6) and e.stderr == 0.0


def test_density_rejects_nonpositive_t():
    with pytest.raises(ValueError):
        est.density(EXP, 0.0, 10)


def test_conditioned_and_plain_agree():
    a = est.density(EXP, 0.7, 200_000, seed=1)
    b = est.density(EXP, 0.7, 200_000, seed=2, conditioned=False)
    assert abs(a.value - b.value) < 4 * np.hypot(a.stderr, b.stderr)
    assert a.stderr < b.stderr


def test_density_integrates_to_mass():
    # a coarse time integral of the density matches the hit fraction
    ts = np.linspace(0.05, 3.0, 60)
    vals = [est.density(EXP, float(t), 20_000, seed=3).value for t in ts]
    area = np.trapezoid(vals, ts) if hasattr(np, "trapezoid") else np.trapz(vals, ts)
    head = est.total_mass(EXP, 0.05, 100_000, seed=4).value
    mass = est.total_mass(EXP, 3.0, 100_000, seed=5)
    assert abs(area + head - mass.value) < 0.02


def test_jump_kernel_integrates_to_survival():
    # integral over l of the killed Gaussian kernel is the segment's survival density mass
    c, u, m = 0.8, 0.5, 0.2
    total = integrate(lambda l: est.jump_kernel(c, u, m, l), 0.0, 40.0, tol=1e-12)
    expect = integrate(lambda a: np.exp(-((a - m * u) ** 2) / (2 * u)) / np.sqrt(2 * np.pi * u)
                       * cf.no_cross_prob_given_endpoint(a, c, u), -40.0, c, tol=1e-12)
    assert total == pytest.approx(expect, abs=1e-9)
    assert np.all(est.jump_kernel(c, u, m, np.linspace(0, 5, 50)) >= 0)


def test_joint_curve_integrates_to_jump_term():
    # sum over l of g(t, l) * f_Y(l) equals the jump part of the density
    t = 1.0
    ls = np.linspace(0, 12, 1201)
    curve = est.joint_density_curve(EXP, t, ls, 50_000, seed=6)
    g = np.array([p.g for p in curve])
    integ = np.sum(0.5 * (g[1:] * np.exp(-ls[1:]) + g[:-1] * np.exp(-ls[:-1])) * np.diff(ls))
    jump_term, _ = est.zero_limit_terms(EXP, t, 50_000, seed=6, conditioned=False)
    assert integ == pytest.approx(jump_term.value, rel=2e-3)


def test_analytic_functional_marginal():
    a = est.analytic_functional(EXP, 1.0, n=50_000, seed=7)
    d = est.density(EXP, 1.0, 200_000, seed=8)
    assert abs(a.value - d.value) < 3.5 * np.hypot(a.stderr, d.stderr)


def test_joint_functional_returns_both_routes():
    a, d = est.joint_functional(EXP, 1.0, 0.05, phi, psi, n=20_000, seed=9)
    assert a.method == "skeleton-quadrature"
    assert d.method.startswith("finite-difference")
    assert abs(a.value - d.value) < 4 * np.hypot(a.stderr, d.stderr) + 0.02


def test_finite_difference_at_zero_no_atom():
    # for Y ~ Exp(1), x = 1 the time-zero functional with phi = psi = 1 is P(Y > x) = e^-1
    fd = est.finite_difference_functional(EXP, 0.0, 0.005, 1_000_000, seed=10, shards=4)
    assert abs(fd.value - np.exp(-1.0)) < 4 * fd.stderr + 0.01


def test_mass_curve_monotone_and_nested():
    curve = est.mass_curve(EXP, [0.5, 1.0, 2.0, 4.0], 20_000, seed=11)
    vals = [e.value for e in curve]
    assert vals == sorted(vals)
    assert est.total_mass(EXP, 4.0, 20_000, seed=11).value == vals[-1]


def test_mass_rejects_bad_horizon():
    with pytest.raises(ValueError):
        est.mass_curve(EXP, [0.0], 10)
