"""Analytic kernels for a unit-variance drifted Brownian motion and the jump model.

Everything here is a pure function of its arguments.  Densities accept numpy
arrays and broadcast; scalar inputs give Python floats back.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from .errors import NumericalError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def bm_fpt_density(u, x, m: float = 0.0):
    """First-passage density of ``m*s + W_s`` to level ``x`` at time ``u``.

    ``|x| / sqrt(2 pi u^3) * exp(-(x - m u)^2 / (2u))``, extended by zero for
    ``u <= 0`` and ``x <= 0``.
    """
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    ok = (u > 0) & (x > 0)
    us = np.where(ok, u, 1.0)
    xs = np.where(ok, x, 1.0)
    val = xs / (_SQRT_2PI * us**1.5) * np.exp(-((xs - m * us) ** 2) / (2.0 * us))
    return _out(np.where(ok, val, 0.0))


def bm_never_hit_prob(x: float, m: float) -> float:
    """Probability that the drifted motion never reaches ``x > 0``."""
    if not x > 0:
        raise ValueError(f"level must be positive, got x={x!r}")
    return float(-np.expm1(m * x - abs(m * x)))


def sup_endpoint_density(b, a, t, m: float = 0.0):
    """Joint density of (running max, endpoint) of ``m*s + W_s`` on ``[0, t]``."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    ok = b > np.maximum(0.0, a)
    r = 2.0 * b - a
    val = 2.0 * r / (_SQRT_2PI * t**1.5) * np.exp(-(r * r) / (2.0 * t) + m * a - 0.5 * m * m * t)
    return _out(np.where(ok, val, 0.0))


def no_cross_prob_given_endpoint(a, c, u):
    """P(bridge stays strictly below ``c`` on ``[0, u]`` | start 0, end ``a``).

    The drift drops out once the endpoint is fixed.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(c <= 0):
        raise ValueError("barrier distance c must be positive")
    if np.any(u <= 0):
        raise ValueError("duration u must be positive")
    val = -np.expm1(-2.0 * c * np.maximum(c - a, 0.0) / u)
    return _out(np.where(a < c, val, 0.0))


class SquareCompletion(NamedTuple):
    """``(a - z)^2/u + (a - y)^2/v == (a - center)^2/scale + residual``."""

    center: float
    scale: float
    residual: float

    def rhs(self, a):
        return (np.asarray(a) - self.center) ** 2 / self.scale + self.residual


def square_completion(u, v, y, z) -> SquareCompletion:
    if np.any(np.asarray(u) <= 0) or np.any(np.asarray(v) <= 0):
        raise ValueError("u and v must be positive")
    s = u + v
    return SquareCompletion((v * z + u * y) / s, u * v / s, (z - y) ** 2 / s)


def positive_part_mean(mean, sd):
    """``E[(mean + sd*G)_+]`` for standard normal ``G``."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    safe = np.where(sd > 0, sd, 1.0)
    # tiny sd sends r to +-inf, where both terms have the right limits
    with np.errstate(over="ignore"):
        r = mean / safe
        val = mean * special.ndtr(r) + safe * np.exp(-0.5 * r * r) / _SQRT_2PI
    return _out(np.where(sd > 0, val, np.maximum(mean, 0.0)))


def gaussian_smoothed_fpt_density(u, mu, sigma, m: float = 0.0):
    """``E[bm_fpt_density(u, mu + sigma*G, m)]`` for standard normal ``G``, in closed form."""
    u = np.asarray(u, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u must be positive")
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    s2 = sigma * sigma + u
    shift = np.sqrt(u) * (mu + m * sigma * sigma) / np.sqrt(s2)
    pref = np.exp(-((mu - m * u) ** 2) / (2.0 * s2)) / (_SQRT_2PI * np.sqrt(u) * s2)
    return _out(pref * positive_part_mean(shift, sigma))


def _log_normal_pdf(x, mean, var):
    return -0.5 * (x - mean) ** 2 / var - 0.5 * np.log(2.0 * np.pi * var)


def _killed_passage_piece(u, s, k, upper, mean_z, m):
    """``log`` prefactor and bracket of ``int_{-inf}^{upper} N(z; mean_z, s) f(u, k - z) dz``."""
    v = s * u / (s + u)
    zhat = (u * mean_z + s * (k - m * u)) / (s + u)
    alpha = (upper - zhat) / np.sqrt(v)
    bracket = (k - zhat) * special.ndtr(alpha) + np.sqrt(v) * np.exp(-0.5 * alpha * alpha) / _SQRT_2PI
    return _log_normal_pdf(k, mean_z + m * u, s + u) - np.log(u), bracket


def bridge_smoothed_fpt_density(u, s, c, y, m: float = 0.0):
    """``E[1{no passage of c on [0, s]} f(u, c - X_s - y)]`` for ``X`` a drifted Brownian motion from 0.

    ``f`` is :func:`bm_fpt_density` (zero for nonpositive levels).  This is the
    passage density at time ``u`` after a jump of size ``y`` that happens at
    time ``s``, averaged over the Brownian segment before the jump, with that
    segment killed at ``c``.  Closed form: the killed density of ``X_s`` is a
    Gaussian minus its reflection, and each piece against ``f`` is a truncated
    Gaussian first moment.
    """
    u, s, c, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (u, s, c, y)))
    if np.any(u <= 0) or np.any(s <= 0):
        raise ValueError("u and s must be positive")
    if np.any(c <= 0):
        raise ValueError("c must be positive")
    k = c - y
    upper = np.minimum(c, k)
    lp, bp = _killed_passage_piece(u, s, k, upper, m * s, m)
    lr, br = _killed_passage_piece(u, s, k, upper, 2.0 * c + m * s, m)
    val = np.exp(lp) * bp - np.exp(lr + 2.0 * m * c) * br
    return _out(np.maximum(val, 0.0))


class GammaSeries(NamedTuple):
    value: float
    bound: float
    terms: int


def _log_series(log_term: Callable[[np.ndarray], np.ndarray], start: int, max_terms: int, rel=1e-15):
    """Sum ``exp(log_term(n))`` for ``n >= start`` until terms drop below ``rel`` past the peak."""
    n = np.arange(start, start + max_terms, dtype=float)
    logs = log_term(n)
    peak = int(np.argmax(logs))
    small = np.nonzero((np.arange(logs.size) > peak) & (logs < np.log(rel)))[0]
    if small.size == 0:
        raise NumericalError(f"series did not converge within {max_terms} terms")
    stop = int(small[0])
    return float(np.exp(logs[:stop]).sum()), stop


def gamma_tail_series(lam: float, t: float, beta: float, max_terms: int = 1000) -> GammaSeries:
    """``E[1{N_t >= 2} (t - T_{N_t})^beta]`` for a rate-``lam`` Poisson process, plus its bound.

    The bound ``t^(2+beta) * sum_{n>=1} lam^n e^t B(n, beta+1)/(n-1)!`` holds for
    ``t <= 1``; a violation raises :class:`NumericalError`.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    if not beta > -1:
        raise ValueError("beta must exceed -1")

    def value_term(n):
        return n * np.log(lam) - lam * t + (n + beta) * np.log(t) + special.betaln(n, beta + 1) - special.gammaln(n)

    def bound_term(n):
        return n * np.log(lam) + t + special.betaln(n, beta + 1) - special.gammaln(n)

    value, k1 = _log_series(value_term, 2, max_terms)
    bsum, k2 = _log_series(bound_term, 1, max_terms)
    bound = bsum * t ** (2.0 + beta)
    if value > bound * (1 + 1e-12):
        raise NumericalError(f"series {value!r} exceeds its bound {bound!r}")
    return GammaSeries(value, bound, max(k1, k2))


def density_at_zero(law, lam: float, x: float) -> float:
    """Value at ``t = 0`` of the hitting-time density."""
    if not x > 0:
        raise ValueError("x must be positive")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    f, f_left = law.cdf(x), law.cdf_left(x)
    return 0.5 * lam * (2.0 - f - f_left) + 0.25 * lam * law.atom_mass(x)


class ZeroTimeTerms(NamedTuple):
    """Components of the ``h -> 0`` limit of ``E[1{tau <= h} phi(K) psi(L)] / h``."""

    creep: float
    jump_over: float
    boundary_atom: float

    @property
    def total(self) -> float:
        return self.creep + self.jump_over + self.boundary_atom


def _at(fn, v: float) -> float:
    return float(np.asarray(fn(np.array([v], dtype=float))).reshape(-1)[0])


def zero_time_terms(law, lam: float, x: float, phi=None, psi=None) -> ZeroTimeTerms:
    """The three pieces of the time-zero limit, with ``phi``/``psi`` defaulting to one.

    ``creep`` is the diffusive crossing right after a jump landing exactly on
    ``x``, ``jump_over`` the jump strictly past ``x`` from the start, and
    ``boundary_atom`` a jump landing exactly on ``x``.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    one = lambda v: np.ones_like(np.asarray(v, dtype=float))  # noqa: E731
    phi = one if phi is None else phi
    psi = one if psi is None else psi
    dF = law.atom_mass(x)
    phi0 = _at(phi, 0.0)
    creep = 0.25 * lam * dF * phi0 * _at(psi, 0.0)
    beyond = law.integrate_image(x, phi) - dF * phi0
    jump_over = lam * _at(psi, x) * beyond
    boundary = 0.5 * lam * dF * phi0 * _at(psi, x)
    return ZeroTimeTerms(creep, jump_over, boundary)


def zero_time_functional(law, lam: float, x: float, phi=None, psi=None) -> float:
    return zero_time_terms(law, lam, x, phi, psi).total
