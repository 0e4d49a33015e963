from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fptjump.jump_law import CustomDensity, Exponential, JumpLaw
from fptjump.quadrature import integrate


def rng(seed=0):
    return np.random.default_rng(seed)


def test_masses_must_sum_to_one():
    with pytest.raises(ValueError):
        JumpLaw.mixture([(1.0, 0.6)], [(0.5, Exponential(1.0))])


def test_bad_density_rejected():
    with pytest.raises(ValueError):
        JumpLaw(continuous=CustomDensity(lambda y: np.where((y > 0) & (y < 1), 2.0, 0.0), 0.0, 1.0), weight=1.0)


def test_atom_mass_and_left_limit():
    law = JumpLaw.mixture([(1.0, 0.5)], [(0.5, Exponential(1.0))])
    assert law.atom_mass(1.0) == 0.5
    assert law.atom_mass(0.9) == 0.0
    assert law.cdf(1.0) - law.cdf_left(1.0) == pytest.approx(0.5)
    assert law.cdf(1.0) == pytest.approx(0.5 + 0.5 * (1 - np.exp(-1)))


def test_mean():
    law = JumpLaw.mixture([(1.0, 0.5)], [(0.5, Exponential(2.0))])
    assert law.mean == pytest.approx(0.75)
    assert JumpLaw.kou(0.6, 1.0, 2.0).mean == pytest.approx(0.6 - 0.2)


@pytest.mark.parametrize(
    "law",
    [
        JumpLaw.exponential(1.5),
        JumpLaw.gaussian(0.2, 0.7),
        JumpLaw.kou(0.3, 2.0, 1.0),
        JumpLaw.mixture([(1.0, 0.3), (-0.5, 0.2)], [(0.5, Exponential(1.0))]),
    ],
)
def test_sampling_matches_cdf(law):
    y = law.sample(rng(1), 200_000)
    for q in (-0.5, 0.0, 0.5, 1.0, 2.0):
        emp = np.mean(y <= q)
        assert abs(emp - law.cdf(q)) < 4 * np.sqrt(0.25 / y.size) + 1e-12


def test_sample_scalar():
    assert isinstance(JumpLaw.point_mass(2.0).sample(rng()), float)
    assert JumpLaw.point_mass(2.0).sample(rng()) == 2.0


def test_integrate_image_atoms_and_density():
    law = JumpLaw.mixture([(1.0, 0.5), (2.0, 0.25)], [(0.25, Exponential(1.0))])
    phi = lambda k: np.exp(-np.asarray(k, dtype=float))  # noqa: E731
    # atoms at 1 (k=0) and 2 (k=1), density part: int_0^inf e^-k e^-(k+1) dk = e^-1 / 2
    expect = 0.5 * 1 + 0.25 * np.exp(-1) + 0.25 * np.exp(-1) / 2
    assert law.integrate_image(1.0, phi) == pytest.approx(expect, abs=1e-9)
    assert law.integrate_image(1.0) == pytest.approx(1 - law.cdf_left(1.0), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(-1.0, 3.0))
def test_cdf_is_integral_of_pdf(rate, y):
    law = JumpLaw.exponential(rate)
    pdf, w = law.density_part
    val = integrate(pdf, 0.0, max(y, 0.0)) if y > 0 else 0.0
    assert law.cdf(y) == pytest.approx(w * val, abs=1e-9)
