"""Brute-force reference simulators and histogram tests.

The grid simulator below discretizes time with a fixed step, draws exact
Gaussian increments and only looks at the path on grid points and at jump
injections.  It shares no crossing logic with :mod:`fptjump.path_sim`, so an
agreement between the two is evidence rather than a tautology.  The price is
a late bias for diffusive crossings, of order ``sqrt(step)``: a discretely
monitored Brownian motion behaves roughly like a continuously monitored one
facing a barrier raised by ``GRID_SHIFT * sqrt(step)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import UsageError
from .path_sim import HIT_CONT, HIT_JUMP, SURVIVED, HittingBatch, ModelParams
from .quadrature import integrate

# -zeta(1/2) / sqrt(2 pi): first-order barrier shift of discrete monitoring
GRID_SHIFT = 0.5825971579390106

THREE_SIGMA_P = 2.0 * stats.norm.sf(3.0)


@dataclass(frozen=True)
class GridPath:
    step: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.values.size)


@dataclass(frozen=True)
class HistogramComparison:
    buckets: list
    statistic: float
    threshold: float
    passed: bool
    dof: int

    @property
    def pass_(self) -> bool:
        return self.passed


def _jump_plan(model: ModelParams, horizon: float, step: float, n: int, rng):
    """Jumps of ``n`` paths as flat arrays sorted by (grid index, path, time)."""
    n_steps = int(round(horizon / step))
    if model.lam > 0:
        counts = rng.poisson(model.lam * horizon, n)
    else:
        counts = np.zeros(n, dtype=np.int64)
    total = int(counts.sum())
    path = np.repeat(np.arange(n), counts)
    times = rng.uniform(0.0, horizon, total)
    sizes = model.law.sample(rng, total) if total else np.zeros(0)
    idx = np.clip(np.rint(times / step).astype(np.int64), 0, n_steps)
    order = np.lexsort((times, path, idx))
    path, idx, sizes = path[order], idx[order], sizes[order]
    # running sum of the jumps sharing a grid point, in time order
    key = idx * n + path
    start = np.ones(total, dtype=bool)
    start[1:] = key[1:] != key[:-1]
    cs = np.cumsum(sizes)
    first = np.maximum.accumulate(np.where(start, np.arange(total), 0))
    after = cs - (cs[first] - sizes[first])
    return n_steps, path, idx, sizes, after


def grid_hitting_batch(
    model: ModelParams,
    horizon: float,
    step: float,
    n: int,
    rng: np.random.Generator,
    chunk: int = 32768,
    block: int = 256,
) -> HittingBatch:
    """Discretely monitored first passage for ``n`` paths.

    Jump times are snapped to the nearest grid point.  At a grid point the
    diffusive move is applied and checked first, then the jumps there in time
    order.  ``tau`` is the grid time of detection.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    status = np.zeros(n, dtype=np.int8)
    tau = np.full(n, np.nan)
    K = np.zeros(n)
    L = np.zeros(n)
    jump = np.zeros(n)
    end = np.full(n, np.nan)
    for lo in range(0, n, chunk):
        k = min(chunk, n - lo)
        res = _grid_chunk(model, horizon, step, k, rng, block)
        for dst, src in zip((status, tau, K, L, jump, end), res):
            dst[lo:lo + k] = src
    nan = np.full(n, np.nan)
    return HittingBatch(status, tau, K, L, jump, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=bool), nan, nan, end, float(horizon))


def _grid_chunk(model, horizon, step, n, rng, block):
    b = float(model.x)
    n_steps, jpath, jidx, jsize, jafter = _jump_plan(model, horizon, step, n, rng)
    status = np.zeros(n, dtype=np.int8)
    tau = np.full(n, np.nan)
    K = np.zeros(n)
    L = np.zeros(n)
    jump = np.zeros(n)
    value = np.zeros(n)
    alive = np.arange(n)
    row_of = np.full(n, -1)
    drift = model.m * step
    sd = np.sqrt(step)
    j0 = 0  # grid index of the first column of the block
    while alive.size and j0 <= n_steps:
        width = min(block, n_steps + 1 - j0)
        a = alive.size
        path_v = rng.standard_normal((a, width))
        path_v *= sd
        if drift:
            path_v += drift
        if j0 == 0:
            path_v[:, 0] = 0.0
        path_v[:, 0] += value[alive]
        row_of[alive] = np.arange(a)
        lo_e, hi_e = np.searchsorted(jidx, [j0, j0 + width])
        er = row_of[jpath[lo_e:hi_e]]
        keep = er >= 0
        er, ei, es, ea = er[keep], jidx[lo_e:hi_e][keep] - j0, jsize[lo_e:hi_e][keep], jafter[lo_e:hi_e][keep]
        np.add.at(path_v, (er, ei), es)
        np.cumsum(path_v, axis=1, out=path_v)  # now the value after the jumps at each grid point
        over = path_v >= b
        if er.size:
            # at grid points carrying jumps: diffusive check on the pre-jump value, then the running jump sums
            # entries are sorted by (column, row), so groups are contiguous
            gkey = ei * a + er
            starts = np.flatnonzero(np.r_[True, gkey[1:] != gkey[:-1]])
            gsize = np.diff(np.r_[starts, gkey.size])
            gsum = np.repeat(ea[np.r_[starts[1:], gkey.size] - 1], gsize)
            gmax = np.repeat(np.maximum.reduceat(ea, starts), gsize)
            pre_e = path_v[er, ei] - gsum
            over[er, ei] = (pre_e >= b) | (pre_e + gmax >= b)
        col = np.argmax(over, axis=1)
        hit = over[np.arange(a), col]
        rows = np.nonzero(hit)[0]
        hc = col[rows]
        ids = alive[rows]
        tau[ids] = (j0 + hc) * step
        status[ids] = HIT_CONT
        if er.size and rows.size:
            target_col = np.full(a, -1)
            target_col[rows] = hc
            at_hit = target_col[er] == ei
            pre_row = np.zeros(a)
            pre_row[er[at_hit]] = pre_e[at_hit]
            is_jump = np.zeros(a, dtype=bool)
            is_jump[er[at_hit]] = pre_e[at_hit] < b
            # first jump at that grid point whose running sum reaches the barrier
            cand = at_hit & is_jump[er] & (pre_row[er] + ea >= b)
            uniq, first = np.unique(er[cand], return_index=True)
            sel = np.nonzero(cand)[0][first]
            before = pre_row[uniq] + ea[sel] - es[sel]
            pid = alive[uniq]
            status[pid] = HIT_JUMP
            L[pid] = b - before
            K[pid] = (pre_row[uniq] + ea[sel]) - b
            jump[pid] = es[sel]
        row_of[alive] = -1
        survivors = ~hit
        value[alive[survivors]] = path_v[survivors, -1]
        alive = alive[survivors]
        j0 += width
    return status, tau, K, L, jump, np.where(status == SURVIVED, value, np.nan)


def grid_path(model: ModelParams, horizon: float, step: float, rng: np.random.Generator) -> GridPath:
    """One unmonitored grid path (values after the jumps at each grid point)."""
    n_steps, _, jidx, jsize, _ = _jump_plan(model, horizon, step, 1, rng)
    incr = model.m * step + np.sqrt(step) * rng.standard_normal(n_steps + 1)
    incr[0] = 0.0
    np.add.at(incr, jidx, jsize)
    return GridPath(float(step), np.cumsum(incr))


def grid_hitting(model: ModelParams, horizon: float, step: float, rng: np.random.Generator):
    """Single-path version of :func:`grid_hitting_batch`."""
    return grid_hitting_batch(model, horizon, step, 1, rng).record(0)


def grid_bridge_no_cross(a: float, c: float, u: float, step: float, n: int, rng: np.random.Generator, chunk: int = 1024):
    """Fraction of grid Brownian bridges from 0 to ``a`` over ``[0, u]`` staying below ``c`` at every grid point."""
    n_steps = int(round(u / step))
    grid_t = np.arange(1, n_steps + 1) / n_steps
    stay = 0
    for lo in range(0, n, chunk):
        k = min(chunk, n - lo)
        w = np.cumsum(rng.standard_normal((k, n_steps)), axis=1) * np.sqrt(u / n_steps)
        bridge = w - grid_t[None, :] * (w[:, -1] - a)[:, None]
        stay += int(np.count_nonzero(bridge.max(axis=1) < c))
    p = stay / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


def grid_bridge_bias(a: float, c: float, u: float, step: float) -> float:
    """First-order excess of the grid no-cross frequency over the continuous value."""
    shift = GRID_SHIFT * np.sqrt(step)
    exact = -np.expm1(-2.0 * c * max(c - a, 0.0) / u)
    shifted = -np.expm1(-2.0 * (c + shift) * max(c + shift - a, 0.0) / u)
    return float(shifted - exact)


def compare_histograms(samples_a, samples_b=None, edges=None, density=None, p_value: float = THREE_SIGMA_P) -> HistogramComparison:
    """Chi-square comparison of ``samples_a`` against ``samples_b`` or against ``density``.

    The two-sample form uses the usual unequal-size Pearson statistic.  The
    density form conditions on the samples falling in the bucket range and
    integrates ``density`` over every bucket.  The threshold is the chi-square
    quantile matching a two-sided 3-sigma Gaussian tail.
    """
    if edges is None:
        raise UsageError("bucket edges are required")
    edges = np.asarray(edges, dtype=float)
    if edges.size < 3 or np.any(np.diff(edges) <= 0):
        raise UsageError("need at least two buckets with increasing edges")
    a = np.asarray(samples_a, dtype=float).ravel()
    if a.size == 0:
        raise UsageError("samples_a is empty")
    ca, _ = np.histogram(a, edges)
    if samples_b is not None:
        b = np.asarray(samples_b, dtype=float).ravel()
        if b.size == 0:
            raise UsageError("samples_b is empty")
        cb, _ = np.histogram(b, edges)
        na, nb = ca.sum(), cb.sum()
        if na == 0 or nb == 0:
            raise UsageError("no samples inside the bucket range")
        used = (ca + cb) > 0
        num = (np.sqrt(nb / na) * ca - np.sqrt(na / nb) * cb) ** 2
        stat = float(np.sum(num[used] / (ca + cb)[used]))
        dof = max(int(used.sum()) - 1, 1)
        buckets = [(float(lo), float(hi), int(x), int(y)) for lo, hi, x, y in zip(edges[:-1], edges[1:], ca, cb)]
    elif density is not None:
        na = ca.sum()
        if na == 0:
            raise UsageError("no samples inside the bucket range")
        probs = np.array([float(integrate(density, lo, hi, tol=1e-10)) for lo, hi in zip(edges[:-1], edges[1:])])
        expected = na * probs / probs.sum()
        used = expected > 0
        stat = float(np.sum((ca[used] - expected[used]) ** 2 / expected[used]))
        dof = max(int(used.sum()) - 1, 1)
        buckets = [(float(lo), float(hi), int(x), float(e)) for lo, hi, x, e in zip(edges[:-1], edges[1:], ca, expected)]
    else:
        raise UsageError("give either samples_b or density")
    threshold = float(stats.chi2.isf(p_value, dof))
    return HistogramComparison(buckets, stat, threshold, stat <= threshold, dof)
