"""Jump-size laws: a finite set of atoms plus an optional density part.

Atoms are kept as exact ``(location, mass)`` pairs so that the jump of the
distribution function at a point is available without differencing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import NumericalError
from .quadrature import integrate

TAIL_MASS = 1e-12
QUAD_TOL = 1e-9


# -- continuous families -------------------------------------------------------
#
# Every family exposes pdf, cdf, sample(rng, size), mean and a support interval
# outside of which it carries less than TAIL_MASS.  They are plain dataclasses so
# laws pickle cleanly into worker processes.


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("exponential rate must be positive")

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, self.rate * np.exp(-self.rate * np.maximum(y, 0.0)), 0.0)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, -np.expm1(-self.rate * np.maximum(y, 0.0)), 0.0)

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def support(self):
        return 0.0, -np.log(TAIL_MASS) / self.rate


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("gaussian sigma must be positive")

    def pdf(self, y):
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * np.sqrt(2 * np.pi))

    def cdf(self, y):
        return special.ndtr((np.asarray(y, dtype=float) - self.mu) / self.sigma)

    def sample(self, rng, size):
        return self.mu + self.sigma * rng.standard_normal(size)

    @property
    def mean(self):
        return self.mu

    @property
    def support(self):
        k = -special.ndtri(TAIL_MASS / 2)
        return self.mu - k * self.sigma, self.mu + k * self.sigma


@dataclass(frozen=True)
class Kou:
    """Double exponential: up with probability ``p`` at rate ``eta1``, down at rate ``eta2``."""

    p: float
    eta1: float
    eta2: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("kou p must lie in [0, 1]")
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise ValueError("kou rates must be positive")

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        up = self.p * self.eta1 * np.exp(-self.eta1 * np.maximum(y, 0.0))
        down = (1 - self.p) * self.eta2 * np.exp(self.eta2 * np.minimum(y, 0.0))
        return np.where(y >= 0, up, down)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        down = (1 - self.p) * np.exp(self.eta2 * np.minimum(y, 0.0))
        up = (1 - self.p) + self.p * -np.expm1(-self.eta1 * np.maximum(y, 0.0))
        return np.where(y >= 0, up, down)

    def sample(self, rng, size):
        upward = rng.random(size) < self.p
        mag = rng.exponential(1.0, size)
        return np.where(upward, mag / self.eta1, -mag / self.eta2)

    @property
    def mean(self):
        return self.p / self.eta1 - (1 - self.p) / self.eta2

    @property
    def support(self):
        return np.log(TAIL_MASS) / self.eta2, -np.log(TAIL_MASS) / self.eta1


@dataclass(frozen=True)
class CustomDensity:
    """User-supplied density on ``[lo, hi]``; cdf and sampling by quadrature.

    ``pdf`` must be vectorized and, for multi-process runs, picklable.
    """

    pdf_fn: Callable[[np.ndarray], np.ndarray]
    lo: float
    hi: float
    _grid: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.linspace(self.lo, self.hi, 2049)
        cum = [0.0]
        for a, b in zip(grid[:-1], grid[1:]):
            cum.append(cum[-1] + float(integrate(self.pdf_fn, a, b, tol=QUAD_TOL / 2048)))
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "_cum", np.asarray(cum))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.lo) & (y <= self.hi)
        return np.where(inside, self.pdf_fn(np.clip(y, self.lo, self.hi)), 0.0)

    def cdf(self, y):
        return np.interp(np.asarray(y, dtype=float), self._grid, self._cum, left=0.0, right=1.0)

    def sample(self, rng, size):
        # piecewise-linear inverse of the tabulated cdf
        return np.interp(rng.random(size) * self._cum[-1], self._cum, self._grid)

    @property
    def mean(self):
        return float(integrate(lambda y: y * self.pdf_fn(y), self.lo, self.hi, tol=QUAD_TOL))

    @property
    def support(self):
        return self.lo, self.hi


@dataclass(frozen=True)
class Mixture:
    """Finite mixture of continuous families; weights sum to one."""

    parts: tuple
    weights: tuple

    def pdf(self, y):
        return sum(w * p.pdf(y) for w, p in zip(self.weights, self.parts))

    def cdf(self, y):
        return sum(w * p.cdf(y) for w, p in zip(self.weights, self.parts))

    def sample(self, rng, size):
        which = np.searchsorted(np.cumsum(self.weights)[:-1], rng.random(size), side="right")
        out = np.empty(size)
        for k, part in enumerate(self.parts):
            sel = which == k
            out[sel] = part.sample(rng, int(sel.sum()))
        return out

    @property
    def mean(self):
        return sum(w * p.mean for w, p in zip(self.weights, self.parts))

    @property
    def support(self):
        return min(p.support[0] for p in self.parts), max(p.support[1] for p in self.parts)


# -- the law -----------------------------------------------------------------------


@dataclass(frozen=True)
class JumpLaw:
    """Law of a jump ``Y``: ``sum_i mass_i * delta(loc_i) + weight * density``.

    Immutable; sampling takes an explicit ``numpy.random.Generator``.
    """

    atoms: tuple = ()
    continuous: object = None
    weight: float = 0.0
    name: str = ""

    def __post_init__(self):
        atoms = tuple((float(loc), float(mass)) for loc, mass in self.atoms)
        atoms = tuple(sorted(atoms))
        locs = [a[0] for a in atoms]
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise ValueError("atom locations must be distinct")
        if any(not np.isfinite(loc) for loc in locs):
            raise ValueError("atom locations must be finite")
        if any(not 0 < m <= 1 for _, m in atoms):
            raise ValueError("atom masses must lie in (0, 1]")
        if self.continuous is None and self.weight != 0:
            raise ValueError("weight given without a density part")
        if self.continuous is not None and not 0 < self.weight <= 1:
            raise ValueError("density weight must lie in (0, 1]")
        total = sum(m for _, m in atoms) + self.weight
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        if self.continuous is not None:
            lo, hi = self.continuous.support
            mass = float(integrate(self.continuous.pdf, lo, hi, tol=1e-10))
            if abs(mass - 1.0) > 1e-9:
                raise ValueError(f"density part integrates to {mass!r}, not 1")

    # constructors

    @classmethod
    def exponential(cls, rate):
        return cls(continuous=Exponential(rate), weight=1.0, name=f"exp(rate={rate:g})")

    @classmethod
    def gaussian(cls, mu, sigma):
        return cls(continuous=Gaussian(mu, sigma), weight=1.0, name=f"gauss(mu={mu:g}, sigma={sigma:g})")

    @classmethod
    def kou(cls, p, eta1, eta2):
        return cls(continuous=Kou(p, eta1, eta2), weight=1.0, name=f"kou(p={p:g}, eta1={eta1:g}, eta2={eta2:g})")

    @classmethod
    def point_mass(cls, loc):
        return cls(atoms=((loc, 1.0),), name=f"atom@{loc:g}")

    @classmethod
    def mixture(cls, atoms: Sequence[tuple[float, float]] = (), parts: Sequence[tuple[float, object]] = ()):
        """Atoms ``[(loc, mass)]`` plus weighted continuous families ``[(w, family)]``."""
        parts = [(float(w), p) for w, p in parts]
        weight = sum(w for w, _ in parts)
        if not parts:
            continuous = None
        elif len(parts) == 1:
            continuous = parts[0][1]
        else:
            continuous = Mixture(tuple(p for _, p in parts), tuple(w / weight for w, _ in parts))
        return cls(atoms=tuple(atoms), continuous=continuous, weight=weight)

    # queries

    @property
    def locations(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms])

    @property
    def masses(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms])

    @property
    def density_part(self):
        """``(pdf, weight)`` of the absolutely continuous part, or ``None``."""
        if self.continuous is None:
            return None
        return self.continuous.pdf, self.weight

    @property
    def mean(self) -> float:
        m = float(sum(loc * mass for loc, mass in self.atoms))
        if self.continuous is not None:
            m += self.weight * self.continuous.mean
        return m

    def _cont_cdf(self, y):
        if self.continuous is None:
            return np.zeros_like(y)
        return self.weight * self.continuous.cdf(y)

    def cdf(self, y):
        """``P(Y <= y)``."""
        y = np.asarray(y, dtype=float)
        out = self._cont_cdf(y)
        for loc, mass in self.atoms:
            out = out + np.where(y >= loc, mass, 0.0)
        return out if out.ndim else float(out)

    def cdf_left(self, y):
        """``P(Y < y)``, the left limit of the distribution function."""
        y = np.asarray(y, dtype=float)
        out = self._cont_cdf(y)
        for loc, mass in self.atoms:
            out = out + np.where(y > loc, mass, 0.0)
        return out if out.ndim else float(out)

    def atom_mass(self, y: float) -> float:
        """Exact jump of the distribution function at ``y``."""
        for loc, mass in self.atoms:
            if loc == y:
                return mass
        return 0.0

    def sample(self, rng: np.random.Generator, size=None):
        scalar = size is None
        n = 1 if scalar else int(size)
        out = np.empty(n)
        if self.atoms:
            cum = np.cumsum(self.masses)
            idx = np.searchsorted(cum, rng.random(n), side="right")
            if self.continuous is None:
                idx = np.minimum(idx, len(self.atoms) - 1)
            cont = idx >= len(self.atoms)
            out[~cont] = self.locations[idx[~cont]]
            if cont.any():
                out[cont] = self.continuous.sample(rng, int(cont.sum()))
        else:
            out[:] = self.continuous.sample(rng, n)
        return float(out[0]) if scalar else out

    def integrate_image(self, l: float, phi: Callable | None = None) -> float:
        """``E[phi(Y - l) 1{Y >= l}]``: integral of ``phi`` against the law of ``Y - l`` on ``[0, inf)``.

        ``phi=None`` stands for the constant one.
        """
        if l < 0:
            raise ValueError("l must be nonnegative")
        total = 0.0
        for loc, mass in self.atoms:
            if loc >= l:
                total += mass * (1.0 if phi is None else float(phi(np.array([loc - l]))[0]))
        if self.continuous is None:
            return total
        if phi is None:
            return total + self.weight * (1.0 - float(self.continuous.cdf(l)))
        lo, hi = self.continuous.support
        lo = max(lo, l)
        if hi <= lo:
            return total
        pdf = self.continuous.pdf
        try:
            part = integrate(lambda y: phi(y - l) * pdf(y), lo, hi, tol=QUAD_TOL)
        except NumericalError as exc:
            raise NumericalError(f"integrate_image(l={l}) failed: {exc}") from exc
        return total + self.weight * float(part)

    def __str__(self):
        if self.name:
            return self.name
        terms = [f"{m:g}*atom@{loc:g}" for loc, m in self.atoms]
        if self.continuous is not None:
            terms.append(f"{self.weight:g}*{self.continuous}")
        return " + ".join(terms)
