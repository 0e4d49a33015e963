"""Deterministic seed fan-out for sharded Monte Carlo runs.

A run is fixed by ``(seed, shards)``: shard ``i`` owns the ``i``-th child of
``SeedSequence(seed)`` and a fixed slice of the path budget, and results are
reassembled in shard order.  The worker count never changes the output.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int
    method: str

    def __iter__(self):
        return iter((self.value, self.stderr))


def estimate_from(samples, method: str) -> Estimate:
    """Sample mean with ``std / sqrt(n)``; a constant sample gets stderr exactly zero."""
    v = np.asarray(samples, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise ValueError("no samples")
    if np.all(v == v[0]):
        return Estimate(float(v[0]), 0.0, n, method)
    se = float(v.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return Estimate(float(v.mean()), se, n, method)


def generators(seed: int, shards: int, stream: int = 0) -> list[np.random.Generator]:
    """One generator per shard; distinct ``stream`` values give independent families."""
    if shards < 1:
        raise ValueError("shards must be at least 1")
    root = np.random.SeedSequence(seed) if stream == 0 else np.random.SeedSequence((seed, stream))
    return [np.random.Generator(np.random.PCG64(s)) for s in root.spawn(shards)]


def split(n: int, shards: int) -> list[int]:
    base, extra = divmod(int(n), shards)
    return [base + (i < extra) for i in range(shards)]


def _call(job):
    fn, rng, k, args = job
    return fn(rng, k, *args)


def map_shards(fn, n: int, seed: int, shards: int = 1, workers: int = 1, args: tuple = (), stream: int = 0) -> list:
    """Evaluate ``fn(rng, n_shard, *args)`` for every shard, in shard order.

    ``fn`` must be a module-level function when ``workers > 1``.
    """
    jobs = [(fn, g, k, args) for g, k in zip(generators(seed, shards, stream), split(n, shards))]
    jobs = [j for j in jobs if j[2] > 0]
    if workers <= 1 or len(jobs) == 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


def concat(parts, key=None):
    """Concatenate per-shard arrays (or the ``key`` entry of per-shard tuples)."""
    if key is not None:
        parts = [p[key] for p in parts]
    return np.concatenate([np.asarray(p) for p in parts])
