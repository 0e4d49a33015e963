"""Exact skeleton simulation of a drifted Brownian motion with compound Poisson jumps.

Between jumps the path is a drifted Brownian motion, so its value at the next
jump time is an exact Gaussian draw.  Whether the barrier was touched in
between is decided from the endpoints alone: given the endpoints ``x0 < b`` and
``x1`` over a duration ``u``, the bridge stays below ``b`` with probability
``1 - exp(-2 (b - x0)(b - x1) / u)`` when ``x1 < b``.  Hit/no-hit and the
overshoot/undershoot of jump crossings therefore carry no discretization error.
Only the timestamp of a diffusive crossing is located approximately, by
recursive bisection of the bridge (``depth`` levels).

All simulators are vectorized over paths.  The scalar entry points
(:func:`sample_skeleton`, :func:`sample_hitting`) are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import NumericalError
from .jump_law import JumpLaw

DEFAULT_DEPTH = 20


@dataclass(frozen=True)
class ModelParams:
    """``X_t = m t + W_t + sum_{i <= N_t} Y_i`` with ``N`` Poisson(``lam``), ``Y ~ law``, barrier ``x``."""

    m: float
    lam: float
    law: JumpLaw
    x: float

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError(f"barrier must be positive, got x={self.x!r}")
        if not self.lam >= 0:
            raise ValueError(f"jump intensity must be nonnegative, got lam={self.lam!r}")
        if not np.isfinite(self.m):
            raise ValueError("drift must be finite")

    @property
    def mean_slope(self) -> float:
        """``m + lam E[Y]``; the passage time is a.s. finite iff this is nonnegative."""
        return self.m + (self.lam * self.law.mean if self.lam > 0 else 0.0)


class Status(str, Enum):
    HIT_CONTINUOUS = "hit_continuous"
    HIT_JUMP = "hit_jump"
    SURVIVED = "survived_horizon"


STATUS_CODES = (Status.SURVIVED, Status.HIT_CONTINUOUS, Status.HIT_JUMP)
SURVIVED, HIT_CONT, HIT_JUMP = 0, 1, 2


@dataclass(frozen=True)
class PathSkeleton:
    jump_times: np.ndarray
    pre_jump_values: np.ndarray
    post_jump_values: np.ndarray
    jumps: np.ndarray
    horizon: float
    end_value: float

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)


@dataclass(frozen=True)
class HittingRecord:
    status: Status
    tau: float | None
    K: float
    L: float
    n_jumps_before: int

    @property
    def hit(self) -> bool:
        return self.status is not Status.SURVIVED


@dataclass
class HittingBatch:
    """Outcomes of ``n`` independent paths, stored column-wise.

    ``status`` uses the codes ``SURVIVED``, ``HIT_CONT`` and ``HIT_JUMP``.
    ``tau`` is ``nan`` for survivors and, when the walk ran with
    ``locate=False``, also for diffusive crossings.  ``jump`` holds the size of
    the crossing jump on jump hits.  For every path that was still alive when
    the segment containing the horizon started, ``final_t0``/``final_x0`` hold
    that segment's start (the last jump time before the horizon and the value
    right after it); ``end_value`` is the value at the horizon for survivors.
    """

    status: np.ndarray
    tau: np.ndarray
    K: np.ndarray
    L: np.ndarray
    jump: np.ndarray
    n_jumps: np.ndarray
    reached_final: np.ndarray
    final_t0: np.ndarray
    final_x0: np.ndarray
    end_value: np.ndarray
    horizon: float
    last_jump: "LastJump | None" = None

    def __len__(self):
        return int(self.status.size)

    @property
    def hit(self) -> np.ndarray:
        return self.status != SURVIVED

    def record(self, i: int) -> HittingRecord:
        code = int(self.status[i])
        tau = None if code == SURVIVED else float(self.tau[i])
        return HittingRecord(STATUS_CODES[code], tau, float(self.K[i]), float(self.L[i]), int(self.n_jumps[i]))

    def records(self):
        return [self.record(i) for i in range(len(self))]


@dataclass
class LastJump:
    """State around the last jump before the horizon, for paths alive just before the segment leading to it.

    ``valid`` marks paths with at least one jump in ``(0, horizon]`` that were
    alive at ``t_prev`` (the jump before it, or 0).  ``x_prev`` is the value
    right after that earlier jump, ``t_jump``/``y`` the last jump's time and size.
    Paths killed during the segment ``[t_prev, t_jump]`` or by the jump itself
    are included: the conditioned estimators integrate that segment out.
    """

    valid: np.ndarray
    t_prev: np.ndarray
    x_prev: np.ndarray
    t_jump: np.ndarray
    y: np.ndarray


# -- crossing indicator ------------------------------------------------------------


def _crossed(x0, x1, b, u, uniforms):
    """Vectorized crossing indicator given endpoints; ``x0 < b`` assumed."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p_stay = -np.expm1(-2.0 * (b - x0) * (b - x1) / u)
    return (x1 >= b) | ((u > 0) & (uniforms >= p_stay))


def crossed_on_interval(x_start, x_end, barrier, u, rng: np.random.Generator):
    """Draw whether a Brownian bridge from ``x_start`` to ``x_end`` over ``u`` reaches ``barrier``.

    True with probability ``1 - no_cross_prob_given_endpoint(x_end - x_start, barrier - x_start, u)``.
    A start at or above the barrier counts as crossed.  Accepts arrays.
    """
    x0, x1, b, u = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x_start, x_end, barrier, u)))
    if np.any(u <= 0):
        raise ValueError("duration u must be positive")
    out = (x0 >= b) | _crossed(np.minimum(x0, b), x1, b, u, rng.random(x0.shape))
    return bool(out) if out.ndim == 0 else out


# -- locating the first crossing inside a bridge ------------------------------------


def _trunc_upper(rng, mean, sd, cut):
    """``N(mean, sd^2)`` conditioned on ``>= cut``."""
    z0 = (cut - mean) / sd
    logu = np.log(rng.random(mean.shape))
    return mean - sd * special.ndtri_exp(logu + special.log_ndtr(-z0))


def _trunc_lower(rng, mean, sd, cut):
    """``N(mean, sd^2)`` conditioned on ``< cut``."""
    z0 = (cut - mean) / sd
    logu = np.log(rng.random(mean.shape))
    return mean + sd * special.ndtri_exp(logu + special.log_ndtr(z0))


def _second_half_midpoint(rng, c, e, s, sigma, rounds=64):
    """Midpoint of a bridge given that the first half stays below ``c`` and the second half crosses.

    Target density on ``M < c``: ``N(e/2, sigma^2)(M) * (1 - exp(-2c(c-M)/s)) * P2(M)`` where
    ``P2 = 1`` if ``e >= c`` else ``exp(-2(c-M)(c-e)/s)``.  The Gaussian factors merge into a
    single Gaussian that serves as the rejection proposal.
    """
    mean = np.where(e >= c, 0.5 * e, c - 0.5 * e)
    out = np.empty_like(c)
    todo = np.arange(c.size)
    for _ in range(rounds):
        if todo.size == 0:
            return out
        prop = _trunc_lower(rng, mean[todo], sigma[todo], c[todo])
        acc = rng.random(todo.size) < -np.expm1(-2.0 * c[todo] * (c[todo] - prop) / s[todo])
        out[todo[acc]] = prop[acc]
        todo = todo[~acc]
    if todo.size:
        out[todo] = _second_half_bisect(rng, c[todo], mean[todo], sigma[todo], s[todo])
    return out


def _second_half_bisect(rng, c, mean, sigma, s, iters=200):
    """Inverse-cdf fallback for the rare paths where rejection keeps failing (tiny ``c``).

    Works with ``D = c - M > 0``; the unnormalized upper tail of ``D`` is
    ``Q(nu, d) - exp(kappa) Q(nu', d)`` with ``Q`` a Gaussian survival function.
    """
    nu = c - mean
    nu2 = nu - c  # shift produced by the exp(-2cD/s) factor, since sigma^2 = s/2
    kappa = (nu2**2 - nu**2) / (2.0 * sigma**2)

    def tail(d):
        return special.ndtr((nu - d) / sigma) - np.exp(kappa) * special.ndtr((nu2 - d) / sigma)

    total = tail(np.zeros_like(c))
    target = rng.random(c.shape) * total
    lo = np.zeros_like(c)
    hi = np.maximum(nu, 0.0) + 40.0 * sigma
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = tail(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    if np.any(~np.isfinite(lo)):
        raise NumericalError("crossing-time bisection produced non-finite values")
    return c - 0.5 * (lo + hi)


def _locate_crossing(x_start, x_end, barrier, u, depth, rng):
    """Vectorized core of :func:`sample_crossing_time` (offsets from the interval start)."""
    c = np.asarray(barrier - x_start, dtype=float).copy()
    e = np.asarray(x_end - x_start, dtype=float).copy()
    length = np.asarray(u, dtype=float).copy()
    lo = np.zeros_like(c)
    if depth == 0:
        return length
    for _ in range(depth):
        s = 0.5 * length
        sigma = np.sqrt(0.5 * s)
        with np.errstate(over="ignore", divide="ignore"):
            gap = c * (c - e) / s
            log_a = special.log_ndtr((0.5 * e - c) / sigma) + np.where(e < c, gap, 0.0)
            log_b = special.log_ndtr(-0.5 * e / sigma) + np.where(e >= c, -gap, 0.0)
            pa, pb = np.exp(log_a), np.exp(log_b)
        p_first = np.minimum(pa + pb, 1.0)
        first = rng.random(c.shape) < p_first
        new_e = np.empty_like(e)

        idx = np.nonzero(first)[0]
        if idx.size:
            # first crossing in [lo, lo + s]: midpoint either at/above c or below c having crossed
            take_a = rng.random(idx.size) * (pa[idx] + pb[idx]) < pa[idx]
            ia, ib = idx[take_a], idx[~take_a]
            if ia.size:
                new_e[ia] = _trunc_upper(rng, 0.5 * e[ia], sigma[ia], c[ia])
            if ib.size:
                new_e[ib] = _trunc_lower(rng, c[ib] + 0.5 * e[ib], sigma[ib], c[ib])

        idx = np.nonzero(~first)[0]
        if idx.size:
            mid = _second_half_midpoint(rng, c[idx], e[idx], s[idx], sigma[idx])
            lo[idx] += s[idx]
            new_e[idx] = e[idx] - mid
            c[idx] = c[idx] - mid
        e = new_e
        length = s
    return lo + rng.random(c.shape) * length


def sample_crossing_time(x_start, x_end, barrier, u, depth: int = DEFAULT_DEPTH, rng: np.random.Generator = None):
    """First time a bridge from ``x_start`` to ``x_end`` over ``[0, u]`` reaches ``barrier``.

    The bridge is assumed to cross.  Each level samples the bridge midpoint
    jointly with the half holding the first crossing; after ``depth`` levels the
    time is drawn uniformly in the remaining subinterval of length
    ``u * 2**-depth``.  With ``depth=0`` the right edge ``u`` is returned.
    Accepts arrays.
    """
    if rng is None:
        raise ValueError("an explicit numpy Generator is required")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    x0, x1, b, uu = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (x_start, x_end, barrier, u)))
    if np.any(uu <= 0):
        raise ValueError("duration u must be positive")
    out = np.zeros(x0.shape)
    started_above = x0 >= b
    rest = ~started_above
    if rest.any():
        out[rest] = _locate_crossing(x0[rest], x1[rest], b[rest], uu[rest], depth, rng)
    if np.ndim(x_start) == 0 and np.ndim(x_end) == 0 and np.ndim(barrier) == 0 and np.ndim(u) == 0:
        return float(out[0])
    return out


# -- path walkers --------------------------------------------------------------------


def simulate_hitting(
    model: ModelParams,
    horizon: float,
    n: int,
    rng: np.random.Generator,
    depth: int = DEFAULT_DEPTH,
    locate: bool = True,
    track_last_jump: bool = False,
    aligned: bool = False,
) -> HittingBatch:
    """Run ``n`` independent paths up to the first passage above ``model.x`` or ``horizon``.

    Alive paths advance one inter-jump segment per round.  With
    ``locate=False`` diffusive crossing times are not sampled, which is all the
    density estimators need.  ``track_last_jump`` fills :class:`LastJump`; it
    costs extra draws for paths killed before the horizon (whether another jump
    would still arrive, and the size of a jump they never reached), so it
    changes the random stream.

    With ``aligned`` every round draws its variates for all ``n`` paths and
    keeps those of the live ones, so a path's draws depend only on its index
    and round.  Runs that differ in ``horizon`` or ``model.x`` then share their
    randomness path by path, which makes finite differences across them far
    less noisy.  Crossing-time location is not aligned.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    b = float(model.x)
    status = np.zeros(n, dtype=np.int8)
    tau = np.full(n, np.nan)
    K = np.zeros(n)
    L = np.zeros(n)
    jump = np.zeros(n)
    n_jumps = np.zeros(n, dtype=np.int64)
    reached_final = np.zeros(n, dtype=bool)
    final_t0 = np.full(n, np.nan)
    final_x0 = np.full(n, np.nan)
    end_value = np.full(n, np.nan)

    alive = np.arange(n)
    t0 = np.zeros(n)
    x0 = np.zeros(n)
    scale = 1.0 / model.lam if model.lam > 0 else None
    if track_last_jump:
        lj = LastJump(np.zeros(n, dtype=bool), np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan))
        prev_t0 = np.full(n, np.nan)
        prev_x0 = np.full(n, np.nan)
        prev_y = np.full(n, np.nan)
    def draw(fn, rows):
        """``fn(size)`` for the live rows ``rows``; aligned runs draw for every path."""
        if aligned:
            return fn(n)[alive[rows]]
        return fn(rows.size)

    def exponential(size):
        return rng.exponential(scale, size)

    def jumps(size):
        return model.law.sample(rng, size)

    while alive.size:
        k = alive.size
        every = np.arange(k)
        if scale is None:
            t1 = np.full(k, float(horizon))
        else:
            t1 = t0 + draw(exponential, every)
        final = t1 >= horizon
        t1 = np.where(final, horizon, t1)
        du = t1 - t0
        x1 = x0 + model.m * du + np.sqrt(du) * draw(rng.standard_normal, every)
        crossed = _crossed(x0, x1, b, du, draw(rng.random, every))

        fin = alive[final]
        reached_final[fin] = True
        final_t0[fin] = t0[final]
        final_x0[fin] = x0[final]
        if track_last_jump:
            has = ~np.isnan(prev_t0[fin])
            ids = fin[has]
            lj.valid[ids] = True
            lj.t_prev[ids], lj.x_prev[ids] = prev_t0[ids], prev_x0[ids]
            lj.t_jump[ids], lj.y[ids] = t0[final][has], prev_y[ids]

        sel = np.nonzero(crossed)[0]
        if sel.size:
            ids = alive[sel]
            status[ids] = HIT_CONT
            if locate:
                tau[ids] = t0[sel] + sample_crossing_time(x0[sel], x1[sel], b, du[sel], depth, rng)

        sel = np.nonzero(final & ~crossed)[0]
        end_value[alive[sel]] = x1[sel]

        if track_last_jump:
            # killed inside a segment that ends at a jump: was that jump the last one?
            sel = np.nonzero(crossed & ~final)[0]
            if scale is not None and (sel.size or aligned):
                last = t1[sel] + draw(exponential, sel) >= horizon
                ghost = draw(jumps, sel)
                sel, ghost = sel[last], ghost[last]
                ids = alive[sel]
                lj.valid[ids] = True
                lj.t_prev[ids], lj.x_prev[ids] = t0[sel], x0[sel]
                lj.t_jump[ids], lj.y[ids] = t1[sel], ghost

        cont = np.nonzero(~final & ~crossed)[0]
        if cont.size == 0:
            break
        y = draw(jumps, cont)
        if track_last_jump:
            more = t1[cont] + draw(exponential, cont) >= horizon
        pre = x1[cont]
        under = b - pre
        hit = y >= under
        hs = np.nonzero(hit)[0]
        if hs.size:
            ids = alive[cont[hs]]
            yy, ll = y[hs], under[hs]
            kk = yy - ll
            # keep K + L == Y exactly in floating point
            for _ in range(4):
                bad = (kk + ll) != yy
                if not bad.any():
                    break
                ll = np.where(bad, yy - kk, ll)
                kk = np.where(bad, yy - ll, kk)
            status[ids] = HIT_JUMP
            tau[ids] = t1[cont[hs]]
            K[ids] = kk
            L[ids] = ll
            jump[ids] = yy
            if track_last_jump:
                src = cont[hs]
                last = more[hs]
                ids, src, yy = ids[last], src[last], yy[last]
                lj.valid[ids] = True
                lj.t_prev[ids], lj.x_prev[ids] = t0[src], x0[src]
                lj.t_jump[ids], lj.y[ids] = t1[src], yy
        keep = cont[~hit]
        n_jumps[alive[keep]] += 1
        if track_last_jump:
            ids = alive[keep]
            prev_t0[ids], prev_x0[ids], prev_y[ids] = t0[keep], x0[keep], y[~hit]
        x0 = pre[~hit] + y[~hit]
        t0 = t1[keep]
        alive = alive[keep]

    return HittingBatch(
        status, tau, K, L, jump, n_jumps, reached_final, final_t0, final_x0, end_value, float(horizon),
        lj if track_last_jump else None,
    )


def sample_hitting(model: ModelParams, horizon: float, depth: int = DEFAULT_DEPTH, rng: np.random.Generator = None) -> HittingRecord:
    """One path's first-passage record."""
    if rng is None:
        raise ValueError("an explicit numpy Generator is required")
    return simulate_hitting(model, horizon, 1, rng, depth).record(0)


def sample_skeleton(model: ModelParams, horizon: float, rng: np.random.Generator) -> PathSkeleton:
    """Jump times on ``[0, horizon]`` with the process value just before and after each jump."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    times = []
    if model.lam > 0:
        t = rng.exponential(1.0 / model.lam)
        while t <= horizon:
            times.append(t)
            t += rng.exponential(1.0 / model.lam)
    times = np.asarray(times, dtype=float)
    grid = np.concatenate([[0.0], times, [horizon]])
    du = np.diff(grid)
    incr = model.m * du + np.sqrt(du) * rng.standard_normal(du.size)
    jumps = model.law.sample(rng, times.size) if times.size else np.zeros(0)
    pre = np.empty(times.size)
    post = np.empty(times.size)
    x = 0.0
    for i in range(times.size):
        x += incr[i]
        pre[i] = x
        x += jumps[i]
        post[i] = x
    end = x + incr[-1]
    return PathSkeleton(times, pre, post, jumps, float(horizon), float(end))
