from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fptjump.errors import NumericalError
from fptjump.quadrature import integrate


def test_polynomial_exact():
    assert integrate(lambda x: 3 * x**2, 0.0, 2.0) == pytest.approx(8.0, abs=1e-12)


def test_half_line_heavy_tail():
    # integral of x^-1.5 over [1, inf) is 2
    assert integrate(lambda x: x**-1.5, 1.0, np.inf, tol=1e-10) == pytest.approx(2.0, abs=1e-8)


def test_reversed_and_empty_limits():
    assert integrate(np.sin, 1.0, 1.0) == 0.0
    assert integrate(np.sin, 2.0, 0.0) == pytest.approx(-(1 - np.cos(2.0)), abs=1e-10)


def test_vector_valued():
    out = integrate(lambda x: np.vstack([x, x**2]), 0.0, 1.0)
    np.testing.assert_allclose(out, [0.5, 1 / 3], atol=1e-12)


def test_failure_raises():
    with pytest.raises(NumericalError):
        integrate(lambda x: 1.0 / np.abs(x - 0.3), 0.0, 1.0, tol=1e-12, max_rounds=5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3))
def test_gaussian_mass(mu, sd):
    f = lambda x: np.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))  # noqa: E731
    assert integrate(f, mu - 12 * sd, mu + 12 * sd, tol=1e-11) == pytest.approx(1.0, abs=1e-9)
