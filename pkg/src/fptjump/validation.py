"""Acceptance checks shared by ``fpt validate`` and the test suite.

Each check returns a :class:`CheckResult` made of rows ``(name, value,
reference, tolerance, passed)``.  A check passes when every row does.
Statistical rows use three combined standard errors plus any stated
discretization allowance; deterministic rows use absolute tolerances.
``quick=True`` shrinks the Monte Carlo budgets by roughly 10x for smoke runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import closed_form as cf
from .estimators import (
    analytic_functional,
    density,
    finite_difference_functional,
    mass_curve,
    zero_limit_terms,
)
from .jump_law import JumpLaw
from .oracle import GRID_SHIFT, grid_bridge_bias, grid_bridge_no_cross, grid_hitting_batch
from .path_sim import ModelParams
from .quadrature import integrate
from .sharding import generators


@dataclass(frozen=True)
class Row:
    name: str
    value: float
    reference: float
    tolerance: float
    passed: bool


@dataclass
class CheckResult:
    number: int
    title: str
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.passed for r in self.rows)

    def add(self, name, value, reference, tolerance, passed=None):
        value, reference, tolerance = float(value), float(reference), float(tolerance)
        if passed is None:
            passed = abs(value - reference) <= tolerance
        self.rows.append(Row(name, value, reference, tolerance, bool(passed)))

    def summary(self) -> str:
        worst = max(self.rows, key=lambda r: (not r.passed, abs(r.value - r.reference) / r.tolerance if r.tolerance else 0.0))
        return (
            f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: "
            f"{sum(r.passed for r in self.rows)}/{len(self.rows)} rows, "
            f"worst {worst.name} value={worst.value:.6g} ref={worst.reference:.6g} tol={worst.tolerance:.3g}"
        )


def _n(full: int, quick: bool) -> int:
    return max(full // 10, 1000) if quick else full


def _phi(k):
    return np.exp(-np.asarray(k, dtype=float))


def _psi(l):
    return 1.0 / (1.0 + np.asarray(l, dtype=float))


def _wls_intercept(xs, ys, ses, basis):
    """Weighted least-squares intercept and its standard error."""
    X = np.column_stack([b(np.asarray(xs, dtype=float)) for b in basis])
    w = 1.0 / np.asarray(ses, dtype=float) ** 2
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    beta = cov @ (X.T @ (w * np.asarray(ys, dtype=float)))
    return float(beta[0]), float(np.sqrt(cov[0, 0]))


# -- 1 -----------------------------------------------------------------------


def check_mass_identity(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(1, "Brownian passage density integrates to the hit probability")
    for x in (0.5, 1.0, 2.0):
        for m in (-1.0, -0.3, 0.0, 0.7):
            total = integrate(lambda u: cf.bm_fpt_density(u, x, m), 0.0, np.inf, tol=1e-11)
            res.add(f"x={x:g},m={m:g}", total, np.exp(m * x - abs(m * x)), 1e-6)
    return res


# -- 2 -----------------------------------------------------------------------


def check_square_completion(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(2, "completing the square in two Gaussian exponents")
    rng = generators(seed, 1, stream=2)[0]
    k = 10_000
    u, v = rng.uniform(0.1, 10.0, (2, k))
    y, z, a = rng.uniform(-5.0, 5.0, (3, k))
    sq = cf.square_completion(u, v, y, z)
    err = np.abs((a - z) ** 2 / u + (a - y) ** 2 / v - sq.rhs(a))
    res.add("max abs error over 1e4 draws", err.max(), 0.0, 1e-10)
    return res


# -- 3 -----------------------------------------------------------------------


def check_bridge_no_cross(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(3, "bridge no-crossing probability vs reflection integral and grid bridges")
    worst = 0.0
    for a in (-1.0, 0.0, 0.5, 0.9):
        for c in (0.5, 1.0, 2.0):
            if a >= c:
                continue
            for u in (0.5, 1.0, 2.0):
                for m in (-1.0, 0.0, 0.7):
                    mass = integrate(lambda b: cf.sup_endpoint_density(b, a, u, m), max(a, 0.0), c, tol=1e-13)
                    endpoint = np.exp(-((a - m * u) ** 2) / (2 * u)) / np.sqrt(2 * np.pi * u)
                    worst = max(worst, abs(mass / endpoint - cf.no_cross_prob_given_endpoint(a, c, u)))
    res.add("max error on (a,c,u,m) grid", worst, 0.0, 1e-8)
    step = 2.0**-14
    n = _n(100_000, quick)
    rng = generators(seed, 1, stream=3)[0]
    for a, c, u in ((0.3, 1.0, 1.0), (-0.5, 0.6, 0.5)):
        p, se = grid_bridge_no_cross(a, c, u, step, n, rng)
        exact = cf.no_cross_prob_given_endpoint(a, c, u)
        res.add(f"grid bridge a={a:g},c={c:g},u={u:g}", p, exact, 3 * se + abs(grid_bridge_bias(a, c, u, step)))
    return res


# -- 4 -----------------------------------------------------------------------


def _last_gap_power(rng, lam, t, beta, n):
    """Samples of ``1{N_t >= 2} (t - T_{N_t})^beta`` by direct simulation."""
    counts = rng.poisson(lam * t, n)
    vals = np.zeros(n)
    many = counts >= 2
    # the largest of k uniforms on [0, t] is t * V^(1/k)
    gap = -t * np.expm1(np.log(rng.uniform(size=int(many.sum()))) / counts[many])
    vals[many] = gap**beta
    return vals


def check_gamma_series(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(4, "last-jump gap moment series vs simulation and its bound")
    n = _n(1_000_000, quick)
    for i, (lam, t, beta) in enumerate(((1.0, 0.5, -0.5), (2.0, 1.0, 0.0), (0.7, 0.3, 1.0))):
        rng = generators(seed, 1, stream=40 + i)[0]
        v = _last_gap_power(rng, lam, t, beta, n)
        se = v.std(ddof=1) / np.sqrt(n)
        res.add(f"series lam={lam:g},t={t:g},beta={beta:g}", cf.gamma_tail_series(lam, t, beta).value, v.mean(), 3 * se)
    rng = generators(seed, 1, stream=4)[0]
    slack = []
    for lam, t, beta in zip(rng.uniform(0.1, 5.0, 100), rng.uniform(0.01, 1.0, 100), rng.uniform(-0.9, 3.0, 100)):
        s = cf.gamma_tail_series(float(lam), float(t), float(beta))
        slack.append(s.value / s.bound)
    worst = max(slack)
    res.add("max series/bound over 100 triples", worst, 1.0, 0.0, passed=worst <= 1.0)
    return res


# -- 5 -----------------------------------------------------------------------


def check_density_vs_grid(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    """Oracle histogram over ``[t - w/2, t + w/2)`` against the Simpson bucket average.

    The allowance is the change in the density when the barrier is raised by
    the effective discrete-monitoring shift, estimated with common random numbers.
    """
    res = CheckResult(5, "density vs grid-oracle histogram")
    law = JumpLaw.gaussian(0.0, 1.0)
    model = ModelParams(0.0, 1.0, law, 1.0)
    step, width = 2.0**-12, 0.05
    n_grid = _n(1_000_000, quick)
    n_sk = _n(1_000_000, quick)
    times = (0.5, 1.0, 2.0)
    batch = grid_hitting_batch(model, max(times) + width, step, n_grid, generators(seed, 1, stream=5)[0])
    shifted = ModelParams(0.0, 1.0, law, 1.0 + GRID_SHIFT * np.sqrt(step))
    for t in times:
        p = np.mean((batch.tau >= t - width / 2) & (batch.tau < t + width / 2))
        hist, hist_se = p / width, np.sqrt(p * (1 - p) / n_grid) / width
        f = [density(model, s, n_sk, seed, shards) for s in (t - width / 2, t, t + width / 2)]
        avg = (f[0].value + 4 * f[1].value + f[2].value) / 6
        se = max(e.stderr for e in f)
        allowance = abs(density(shifted, t, n_sk, seed, shards).value - f[1].value)
        res.add(f"t={t:g}", avg, hist, 3 * np.hypot(se, hist_se) + allowance)
    return res


# -- 6 -----------------------------------------------------------------------


def check_time_zero(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    """Both density terms are fitted over small ``t`` and extrapolated to zero.

    The jump term is smooth in ``t``; the diffusive term carries a ``sqrt(t)``
    correction.  Times above ~0.02 are avoided since the no-jump contribution
    ``exp(-x^2/2t)`` there is not captured by either basis.
    """
    res = CheckResult(6, "time-zero limits of both density terms")
    lam, x = 1.0, 1.0
    law = JumpLaw.mixture([(1.0, 0.5)], [(0.5, JumpLaw.exponential(1.0).continuous)])
    model = ModelParams(0.0, lam, law, x)
    ts = np.array([0.02, 0.01, 0.005, 0.0025])
    n = _n(10_000_000, quick)
    jt, dt = [], []
    for t in ts:
        a, b = zero_limit_terms(model, float(t), n, seed, max(shards, 10))
        jt.append(a)
        dt.append(b)
    ref_jump = 0.5 * lam * (2.0 - law.cdf(x) - law.cdf_left(x))
    ref_diff = 0.25 * lam * law.atom_mass(x)
    v, se = _wls_intercept(ts, [e.value for e in jt], [e.stderr for e in jt], (np.ones_like, lambda s: s))
    res.add("jump term limit", v, ref_jump, 3 * se)
    v, se = _wls_intercept(ts, [e.value for e in dt], [e.stderr for e in dt], (np.ones_like, np.sqrt))
    res.add("diffusive term limit", v, ref_diff, 3 * se)
    res.add("mixture density at t=0", cf.density_at_zero(law, lam, x), ref_jump + ref_diff, 1e-12)
    for lam_ in (0.5, 1.0, 3.0):
        res.add(f"point mass at x, lambda={lam_:g}", cf.density_at_zero(JumpLaw.point_mass(x), lam_, x), 0.75 * lam_, 1e-12)
    return res


# -- 7 -----------------------------------------------------------------------


def _marginal_models():
    return {
        "exponential": ModelParams(0.0, 1.0, JumpLaw.exponential(1.0), 1.0),
        "atomic": ModelParams(0.2, 1.0, JumpLaw.mixture([(0.5, 0.5), (1.5, 0.5)], []), 1.0),
        "kou": ModelParams(-0.3, 1.5, JumpLaw.kou(0.6, 2.0, 3.0), 1.0),
    }


def check_marginal(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(7, "joint functional with unit test functions vs density")
    for i, (name, model) in enumerate(_marginal_models().items()):
        a = analytic_functional(model, 1.0, n=_n(1_000_000, quick), seed=seed + 2 * i, shards=shards)
        d = density(model, 1.0, _n(1_000_000, quick), seed + 2 * i + 1, shards)
        res.add(name, a.value, d.value, 3 * np.hypot(a.stderr, d.stderr))
    return res


# -- 8 -----------------------------------------------------------------------


def check_functional_fd(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    """Conditioned functional at ``t`` vs ``E[1{t < tau <= t+h} phi(K) psi(L)] / h``.

    The window average is off by about ``(A(t+h) - A(t)) / 2``; that amount,
    estimated with shared randomness, is the O(h) allowance.  A second row per
    ``h`` compares against the trapezoid ``(A(t) + A(t+h)) / 2`` with no
    allowance, which is second-order accurate.
    """
    res = CheckResult(8, "joint functional vs finite difference")
    model = ModelParams(0.0, 1.0, JumpLaw.exponential(1.0), 1.0)
    t = 1.0
    n = _n(1_000_000, quick)
    a = analytic_functional(model, t, _phi, _psi, n, seed, shards)
    for h in (0.05, 0.025):
        d = finite_difference_functional(model, t, h, n, _phi, _psi, seed, shards, stream=1)
        ahead = analytic_functional(model, t + h, _phi, _psi, n, seed, shards)
        allowance = abs(ahead.value - a.value) / 2
        res.add(f"h={h:g}", a.value, d.value, 3 * np.hypot(a.stderr, d.stderr) + allowance)
        trap = 0.5 * (a.value + ahead.value)
        res.add(f"h={h:g} trapezoid", trap, d.value, 3 * np.hypot(max(a.stderr, ahead.stderr), d.stderr))
    return res


# -- 9 -----------------------------------------------------------------------


def check_zero_time_functional(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(9, "time-zero functional with an atom at the barrier")
    law = JumpLaw.mixture([(1.0, 0.5), (2.0, 0.5)], [])
    model = ModelParams(0.0, 1.0, law, 1.0)
    terms = cf.zero_time_terms(law, model.lam, model.x, _phi, _psi)
    hs = np.array([0.02, 0.01, 0.005])
    n = _n(20_000_000, quick)
    fd = [finite_difference_functional(model, 0.0, float(h), n, _phi, _psi, seed, max(shards, 8)) for h in hs]
    v, se = _wls_intercept(hs, [e.value for e in fd], [e.stderr for e in fd], (np.ones_like, lambda s: s))
    res.add("extrapolated limit", v, terms.total, 3 * se)
    res.add("boundary term", terms.boundary_atom, 0.5 * model.lam * law.atom_mass(model.x) * _psi(model.x), 1e-15)
    return res


# -- 10 ----------------------------------------------------------------------


def check_finiteness(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    res = CheckResult(10, "hit probability by horizon 100, proper vs defective")
    horizons = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
    n = _n(100_000, quick)
    proper = {
        "exp m=0": ModelParams(0.0, 1.0, JumpLaw.exponential(1.0), 1.0),
        "gauss m=0.5": ModelParams(0.5, 1.0, JumpLaw.gaussian(0.0, 1.0), 1.0),
        "kou m=0": ModelParams(0.0, 1.0, JumpLaw.kou(0.6, 1.0, 2.0), 1.0),
    }
    for i, (name, model) in enumerate(proper.items()):
        curve = mass_curve(model, horizons, n, seed + i, shards)
        res.add(f"{name} P(tau<=100)", curve[-1].value, 0.99, 0.0, passed=curve[-1].value >= 0.99)
    defective = ModelParams(-1.0, 1.0, JumpLaw.exponential(2.0), 1.0)
    curve = mass_curve(defective, horizons, n, seed + 7, shards)
    vals = np.array([e.value for e in curve])
    res.add("defective P(tau<=100)", vals[-1], 0.9, 0.0, passed=vals[-1] < 0.9)
    res.add("defective P(tau<=100)-P(tau<=50)", vals[-1] - vals[-2], 0.0, 0.005)
    res.add("monotone in horizon", float(np.min(np.diff(vals))), 0.0, 0.0, passed=bool(np.all(np.diff(vals) >= 0)))
    return res


# -- 11 ----------------------------------------------------------------------


def check_continuity(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    """Neighbor differences on a 5x5 grid in ``(t, x)`` with spacing 0.01, all runs sharing their randomness.

    Differences are taken after removing the grid-wide mean step in each
    direction: the smooth gradient alone moves the density by about 0.004 per
    step, which would otherwise count as a violation for any precise estimator.
    A jump anywhere in the grid still shows up in the detrended differences.
    """
    res = CheckResult(11, "density continuity on a 5x5 (t, x) grid")
    law = JumpLaw.gaussian(0.0, 1.0)
    n = _n(100_000, quick)
    offsets = 0.01 * np.arange(-2, 3)
    grid = [[density(ModelParams(0.0, 1.0, law, 1.0 + dx), 1.0 + dt, n, seed, shards) for dx in offsets] for dt in offsets]
    vals = np.array([[e.value for e in row] for row in grid])
    tol = 4 * max(e.stderr for row in grid for e in row)
    d_t, d_x = np.diff(vals, axis=0), np.diff(vals, axis=1)
    res.add("max raw neighbor difference (informational)", np.abs(np.r_[d_t.ravel(), d_x.ravel()]).max(), 0.0, np.inf)
    detrended = np.r_[(d_t - d_t.mean()).ravel(), (d_x - d_x.mean()).ravel()]
    res.add("max detrended neighbor difference", np.abs(detrended).max(), 0.0, tol)
    return res


# -- 12 ----------------------------------------------------------------------

REPRO_CONFIG = """\
[model]
m = 0.1
lambda = 1
jump = mix 0.3*atom@1 + 0.7*exp rate=1.5
x = 1

[run]
seed = {seed}
shards = {shards}
n = {n}
t = 0.5, 1
l = 0.2, 0.8
horizon = 1, 5
h = 0.05
"""


def check_reproducibility(seed: int = 0, shards: int = 1, quick: bool = False) -> CheckResult:
    from .cli import COMMANDS, render
    from .config import parse_config

    res = CheckResult(12, "byte-identical CSV on repeated runs")
    cfg_text = REPRO_CONFIG.format(seed=seed, shards=max(shards, 2), n=_n(20_000, quick))
    for command in sorted(set(COMMANDS) - {"validate"}):
        first = render(command, parse_config(cfg_text))
        second = render(command, parse_config(cfg_text))
        res.add(command, float(first == second), 1.0, 0.0)
    return res


CHECKS = (
    check_mass_identity,
    check_square_completion,
    check_bridge_no_cross,
    check_gamma_series,
    check_density_vs_grid,
    check_time_zero,
    check_marginal,
    check_functional_fd,
    check_zero_time_functional,
    check_finiteness,
    check_continuity,
    check_reproducibility,
)


def run_all(seed: int = 0, shards: int = 1, quick: bool = False, only=None) -> list[CheckResult]:
    return [chk(seed, shards, quick) for i, chk in enumerate(CHECKS, 1) if only is None or i in only]
