"""Monte Carlo estimators for the hitting-time density and the joint law of (tau, K, L).

The estimators condition on the jump skeleton: instead of counting crossings
in small windows they average closed-form kernels evaluated at the last jump
before ``t``.  Two pieces appear throughout:

* diffusive part: ``E[1{tau > T_N} f(t - T_N, x - X_{T_N})]`` with ``f`` the
  drifted Brownian passage density and ``T_N`` the last jump time before ``t``;
* jump part: ``lam E[1{tau > t} (1 - F_Y)(x - X_t)]``, or its refinement in the
  undershoot ``l`` with the killed Gaussian kernel of the final segment.

Every public estimator takes ``(n, seed, shards, workers)``; results depend on
``(seed, shards)`` only.  Direct finite-difference estimators are kept here too
since they are what the conditioned ones are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .closed_form import bm_fpt_density, bridge_smoothed_fpt_density
from .errors import NumericalError
from .path_sim import DEFAULT_DEPTH, SURVIVED, ModelParams, simulate_hitting
from .quadrature import integrate
from .sharding import Estimate, concat, estimate_from, map_shards

__all__ = [
    "Estimate",
    "JointDensityPoint",
    "density",
    "zero_limit_terms",
    "joint_density_jump_part",
    "joint_density_curve",
    "joint_functional",
    "finite_difference_functional",
    "analytic_functional",
    "total_mass",
    "mass_curve",
]

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_Z_SPAN = 8.5  # standard normal mass beyond this is ~1e-17


@dataclass(frozen=True)
class JointDensityPoint:
    """Jump-crossing density of ``(tau, L)`` at ``(t, l)`` per unit ``P(Y >= l)``."""

    t: float
    l: float
    g: float
    stderr: float
    n: int


# -- per-shard workers (module level so they pickle) ----------------------------


def _skeleton_terms(rng, k, model: ModelParams, t: float, conditioned: bool = True):
    """Per-path pieces of the density at ``t`` plus the final-segment state.

    Returns ``(jump_term, diffusive_term, r, c, u)`` where ``r`` flags paths
    alive at the last jump before ``t``, ``c`` is the distance to the barrier
    after that jump and ``u`` the time left until ``t``.  With ``conditioned``
    the diffusive term is averaged in closed form over the Brownian segment
    that precedes the last jump, which tames its heavy upper tail.
    """
    w = simulate_hitting(model, t, k, rng, locate=False, track_last_jump=conditioned, aligned=True)
    r = w.reached_final
    c = np.where(r, model.x - w.final_x0, np.nan)
    u = np.where(r, t - w.final_t0, np.nan)
    term1 = np.zeros(k)
    term2 = np.zeros(k)
    if model.lam > 0:
        s = w.status == SURVIVED
        term1[s] = model.lam * (1.0 - model.law.cdf(model.x - w.end_value[s]))
    if not conditioned:
        term2[r] = bm_fpt_density(u[r], c[r], model.m)
        return term1, term2, r, c, u
    no_jump = r & (w.final_t0 == 0.0)
    term2[no_jump] = bm_fpt_density(t, model.x, model.m)
    lj = w.last_jump
    v = lj.valid
    if v.any():
        seg = np.maximum(lj.t_jump[v] - lj.t_prev[v], np.finfo(float).tiny)
        term2[v] = bridge_smoothed_fpt_density(t - lj.t_jump[v], seg, model.x - lj.x_prev[v], lj.y[v], model.m)
    return term1, term2, r, c, u


def _hit_outcomes(rng, k, model: ModelParams, horizon: float, depth: int):
    w = simulate_hitting(model, horizon, k, rng, depth)
    tau = np.where(w.hit, w.tau, np.inf)
    return tau, w.K, w.L, w.status


# -- the killed Gaussian kernel ----------------------------------------------------------


def jump_kernel(c, u, m: float, l):
    """Density at undershoot ``l`` of ``x - X_t`` on the event of no crossing during the last segment.

    With ``c = x - X_{T_N} > 0`` and ``u = t - T_N`` this is
    ``N(l; c - m u, u) * (1 - exp(-2 c l / u))`` for ``l >= 0``, which is the
    Gaussian endpoint density minus its reflected image written so that it is
    visibly nonnegative.
    """
    c, u, l = np.broadcast_arrays(np.asarray(c, float), np.asarray(u, float), np.asarray(l, float))
    z = (l - (c - m * u)) / np.sqrt(u)
    kill = -np.expm1(-2.0 * c * np.maximum(l, 0.0) / u)
    return np.where(l >= 0, np.exp(-0.5 * z * z) / (_SQRT_2PI * np.sqrt(u)) * kill, 0.0)


# -- public estimators -----------------------------------------------------------------


def _check_t(t):
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}; use density_at_zero for t = 0")


def zero_limit_terms(model: ModelParams, t: float, n: int, seed: int = 0, shards: int = 1, workers: int = 1, conditioned: bool = True):
    """The jump term and the diffusive term of the density at ``t``, estimated separately."""
    _check_t(t)
    parts = map_shards(_skeleton_terms, n, seed, shards, workers, (model, t, conditioned))
    return (
        estimate_from(concat(parts, 0), "skeleton-jump-term"),
        estimate_from(concat(parts, 1), "skeleton-diffusive-term"),
    )


def density(model: ModelParams, t: float, n: int, seed: int = 0, shards: int = 1, workers: int = 1, conditioned: bool = True) -> Estimate:
    """Density of the first passage time at ``t > 0``.

    ``conditioned=False`` evaluates the Brownian passage density directly at
    the last jump (an unbiased but infinite-variance estimator); the default
    also integrates out the Brownian segment before that jump.
    """
    _check_t(t)
    parts = map_shards(_skeleton_terms, n, seed, shards, workers, (model, t, conditioned))
    method = "skeleton-conditioned" if conditioned else "skeleton"
    return estimate_from(concat(parts, 0) + concat(parts, 1), method)


def joint_density_curve(model: ModelParams, t: float, ls, n: int, seed: int = 0, shards: int = 1, workers: int = 1):
    """:func:`joint_density_jump_part` at several ``l`` from one set of paths."""
    _check_t(t)
    ls = np.atleast_1d(np.asarray(ls, dtype=float))
    if np.any(ls < 0):
        raise ValueError("l must be nonnegative")
    parts = map_shards(_skeleton_terms, n, seed, shards, workers, (model, t, False))
    r = concat(parts, 2)
    c, u = concat(parts, 3)[r], concat(parts, 4)[r]
    out = []
    for l in ls:
        vals = np.zeros(r.size)
        if model.lam > 0 and c.size:
            vals[r] = model.lam * jump_kernel(c, u, model.m, l)
        est = estimate_from(vals, "skeleton-kernel")
        out.append(JointDensityPoint(float(t), float(l), est.value, est.stderr, est.n))
    return out


def joint_density_jump_part(model: ModelParams, t: float, l: float, n: int, seed: int = 0, shards: int = 1, workers: int = 1) -> JointDensityPoint:
    """``g(t, l)``: jump-crossing density of ``(tau, L)`` with the ``F_l`` factor left out."""
    return joint_density_curve(model, t, [l], n, seed, shards, workers)[0]


def _ones(v):
    return np.ones_like(np.asarray(v, dtype=float))


def _scalar(fn, v):
    return float(np.asarray(fn(np.array([v], dtype=float))).reshape(-1)[0])


def _image_function(law, phi, l_hi: float):
    """Vectorized ``l -> E[phi(Y - l) 1{Y >= l}]`` on ``[0, l_hi]``.

    Atoms are summed exactly.  For a general ``phi`` the density part is
    tabulated by quadrature and interpolated with a cubic spline.
    """
    if phi is None:
        return lambda l: 1.0 - law.cdf_left(l)
    locs, masses = law.locations, law.masses

    def atoms(l):
        out = np.zeros_like(l)
        for y, w in zip(locs, masses):
            out = out + np.where(y >= l, w * phi(np.maximum(y - l, 0.0)), 0.0)
        return out

    if law.continuous is None:
        return atoms
    lo, hi = law.continuous.support
    pdf, weight = law.continuous.pdf, law.weight
    grid = np.linspace(0.0, max(l_hi, 1e-3), 1025)
    tab = np.empty(grid.size)
    for i, l in enumerate(grid):
        a = max(lo, l)
        tab[i] = 0.0 if a >= hi else float(integrate(lambda y, l=l: phi(y - l) * pdf(y), a, hi, tol=1e-10))
    spline = CubicSpline(grid, weight * tab)
    top = grid[-1]

    def image(l):
        l = np.asarray(l, dtype=float)
        cont = np.where(l <= top, spline(np.clip(l, 0.0, top)), 0.0)
        return atoms(l) + cont

    return image


def _analytic_functional(model: ModelParams, t, phi, psi, r, c, u, groups: int, tol: float):
    """Per-group values of ``lam * int psi(l) g(t, l) I_phi(l) dl``; ``r`` flags the paths alive at the last jump."""
    n = r.size
    gid = np.minimum(np.arange(n) * groups // n, groups - 1)
    sizes = np.bincount(gid, minlength=groups).astype(float)
    out = np.zeros(groups)
    if model.lam == 0 or not r.any():
        return out
    m = model.m
    no_jump = r & (u == t) & (c == model.x)
    some = r & ~no_jump
    l_hi = float(np.nanmax(np.where(r, c - m * u + (_Z_SPAN + 0.5) * np.sqrt(u), -np.inf)))
    image = _image_function(model.law, phi, max(l_hi, 0.0))

    def F(l):
        return psi(l) * image(l)

    # paths without any jump before t share one kernel; integrate it once with
    # breakpoints at the kink l = 0 and at the atoms of F_l
    if no_jump.any():
        cuts = [0.0] + [y for y in model.law.locations if 0.0 < y < l_hi] + [l_hi]
        j0 = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b > a:
                j0 += float(integrate(lambda l: F(l) * jump_kernel(model.x, t, m, l), a, b, tol=tol))
        out += j0 * np.bincount(gid[no_jump], minlength=groups)

    if some.any():
        cs, us, gs = c[some], u[some], gid[some]
        order = np.argsort(gs, kind="stable")
        cs, us, gs = cs[order], us[order], gs[order]
        present = np.unique(gs)
        starts = np.searchsorted(gs, present)
        centre, scale = cs - m * us, np.sqrt(us)
        # F is smooth between consecutive atoms; each piece is mapped per path onto
        # [0, 1] so that the group sums are smooth in the integration variable
        cuts = [0.0] + [y for y in model.law.locations if y > 0.0] + [np.inf]
        for a, b in zip(cuts[:-1], cuts[1:]):
            z_lo = np.clip((a - centre) / scale, -_Z_SPAN, _Z_SPAN)
            z_hi = np.clip((b - centre) / scale, -_Z_SPAN, _Z_SPAN)
            width = np.maximum(z_hi - z_lo, 0.0)
            if not np.any(width > 0):
                continue

            def integrand(v, z_lo=z_lo, width=width):
                res = np.zeros((groups, v.size))
                for j in range(0, v.size, 16):
                    z = z_lo[:, None] + width[:, None] * v[None, j:j + 16]
                    l = np.maximum(centre[:, None] + scale[:, None] * z, 0.0)
                    kill = -np.expm1(-2.0 * cs[:, None] * l / us[:, None])
                    vals = F(l) * kill * width[:, None] * np.exp(-0.5 * z * z) / _SQRT_2PI
                    res[present, j:j + 16] = np.add.reduceat(vals, starts, axis=0)
                return res

            try:
                out += integrate(integrand, 0.0, 1.0, tol=tol * n / groups, initial=4)
            except NumericalError as exc:
                raise NumericalError(f"undershoot quadrature failed: {exc}") from exc
    return model.lam * out / sizes


def finite_difference_functional(
    model: ModelParams, t: float, h: float, n: int, phi=None, psi=None, seed: int = 0, shards: int = 1,
    workers: int = 1, depth: int = DEFAULT_DEPTH, stream: int = 0,
) -> Estimate:
    """``E[1{t < tau <= t + h} phi(K) psi(L)] / h`` by direct simulation; ``t = 0`` is allowed."""
    if t < 0 or not h > 0:
        raise ValueError("need t >= 0 and h > 0")
    phi = _ones if phi is None else phi
    psi = _ones if psi is None else psi
    parts = map_shards(_hit_outcomes, n, seed, shards, workers, (model, t + h, depth), stream=stream)
    tau, K, L = concat(parts, 0), concat(parts, 1), concat(parts, 2)
    inside = (tau > t) & (tau <= t + h)
    vals = np.zeros(tau.size)
    vals[inside] = phi(K[inside]) * psi(L[inside]) / h
    return estimate_from(vals, f"finite-difference h={h:g}")


def joint_functional(
    model: ModelParams, t: float, h: float, phi=None, psi=None, n: int = 100_000, seed: int = 0,
    shards: int = 1, workers: int = 1, depth: int = DEFAULT_DEPTH, groups: int = 32, tol: float = 1e-6,
    n_direct: int | None = None,
):
    """``E[phi(K) psi(L); tau in dt] / dt`` at ``t``, conditioned and direct.

    ``analytic`` integrates ``psi(l) g(t, l) E[phi(Y - l); Y >= l]`` over ``l`` by
    adaptive quadrature and adds ``phi(0) psi(0)`` times the diffusive term.
    Its standard error comes from ``groups`` batch means.  ``direct`` is the
    finite-difference estimate over ``(t, t + h]`` on an independent stream,
    biased by ``O(h)``.
    """
    _check_t(t)
    phi_f = _ones if phi is None else phi
    psi_f = _ones if psi is None else psi
    analytic = analytic_functional(model, t, phi, psi, n, seed, shards, workers, groups, tol)
    direct = finite_difference_functional(
        model, t, h, n if n_direct is None else n_direct, phi_f, psi_f, seed, shards, workers, depth, stream=1
    )
    return analytic, direct


def analytic_functional(
    model: ModelParams, t: float, phi=None, psi=None, n: int = 100_000, seed: int = 0, shards: int = 1,
    workers: int = 1, groups: int = 32, tol: float = 1e-6,
) -> Estimate:
    """The conditioned half of :func:`joint_functional` on its own."""
    _check_t(t)
    psi_f = _ones if psi is None else psi
    state = map_shards(_skeleton_terms, n, seed, shards, workers, (model, t, True))
    term2, r, c, u = (concat(state, i) for i in range(1, 5))
    phi_f = _ones if phi is None else phi
    jump = _analytic_functional(model, t, phi, psi_f, r, c, u, groups, tol)
    gid = np.minimum(np.arange(r.size) * groups // r.size, groups - 1)
    sizes = np.bincount(gid, minlength=groups).astype(float)
    diff = _scalar(phi_f, 0.0) * _scalar(psi_f, 0.0) * np.bincount(gid, weights=term2, minlength=groups) / sizes
    per_group = jump + diff
    value = float(np.sum(per_group * sizes) / r.size)
    if np.all(per_group == per_group[0]):
        return Estimate(float(per_group[0]), 0.0, int(r.size), "skeleton-quadrature")
    se = float(per_group.std(ddof=1) / np.sqrt(groups))
    return Estimate(value, se, int(r.size), "skeleton-quadrature")


def mass_curve(model: ModelParams, horizons, n: int, seed: int = 0, shards: int = 1, workers: int = 1, depth: int = DEFAULT_DEPTH):
    """``P(tau <= h)`` for every ``h`` in ``horizons`` from one set of paths, hence exactly monotone."""
    horizons = np.atleast_1d(np.asarray(horizons, dtype=float))
    if np.any(horizons <= 0):
        raise ValueError("horizons must be positive")
    parts = map_shards(_hit_outcomes, n, seed, shards, workers, (model, float(horizons.max()), depth))
    tau = concat(parts, 0)
    return [estimate_from(tau <= h, "skeleton-hit-fraction") for h in horizons]


def total_mass(model: ModelParams, horizon: float, n: int, seed: int = 0, shards: int = 1, workers: int = 1, depth: int = DEFAULT_DEPTH) -> Estimate:
    """``P(tau <= horizon)``; the survived mass is ``1 - value``."""
    return mass_curve(model, [horizon], n, seed, shards, workers, depth)[0]
