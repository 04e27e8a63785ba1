"""Finite representations of laws on the real line and the metrics between them.

Three concrete representations share one interface:

* :class:`GridDistribution` -- probabilities on a uniform grid,
* :class:`AtomDistribution` -- arbitrary weighted atoms (e.g. a pushed-forward grid),
* :class:`EmpiricalDistribution` -- sorted samples with equal weights.

Wasserstein distances use the one-dimensional quantile coupling, which is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LengthMismatch, WeightSumInvalid

# relative slack (in grid spacings) for treating a point as lying on the grid
_SNAP = 1e-9


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("grid needs x_min < x_max")
        if self.n < 2:
            raise ValueError("grid needs at least 2 points")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    def split(self, values):
        """Linear two-point split of unit masses at ``values`` onto the grid.

        Returns ``(lo, w_lo, w_hi, clamped)``: index of the left neighbour,
        the weights on ``lo`` and ``lo + 1``, and a mask of values that fell
        outside the grid and were clamped to a boundary point.
        """
        values = np.asarray(values, dtype=float)
        h = self.spacing
        pos = (values - self.x_min) / h
        near = np.rint(pos)
        pos = np.where(np.abs(pos - near) < _SNAP, near, pos)
        clamped = (pos < 0) | (pos > self.n - 1)
        pos = np.clip(pos, 0.0, self.n - 1)
        lo = np.minimum(np.floor(pos).astype(np.int64), self.n - 2)
        frac = pos - lo
        return lo, 1.0 - frac, frac, clamped

    def cdf_index(self, x):
        """Number of grid points <= x (with on-grid snapping)."""
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.points, x + _SNAP * self.spacing, side="right")


class _Law:
    """Shared behaviour for representations reducible to sorted atoms."""

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def cdf(self, x):
        v, p = self.atoms()
        cum = np.concatenate([[0.0], np.cumsum(p)])
        idx = np.searchsorted(v, np.asarray(x, dtype=float), side="right")
        return np.minimum(cum[idx], 1.0)[()]

    def quantile(self, u):
        """Generalised (left-continuous) inverse of the CDF."""
        v, p = self.atoms()
        cum = np.cumsum(p)
        idx = np.searchsorted(cum, np.asarray(u, dtype=float), side="left")
        return v[np.minimum(idx, len(v) - 1)][()]

    def tail_above(self, x):
        """P[X > x]."""
        return 1.0 - self.cdf(x)

    def tail_below(self, x):
        """P[X < -x]."""
        v, p = self.atoms()
        cum = np.concatenate([[0.0], np.cumsum(p)])
        idx = np.searchsorted(v, -np.asarray(x, dtype=float), side="left")
        return np.minimum(cum[idx], 1.0)[()]

    def moment(self, k: int) -> float:
        v, p = self.atoms()
        return float(np.dot(v**k, p))

    def mean(self) -> float:
        return self.moment(1)


@dataclass(frozen=True, eq=False)
class GridDistribution(_Law):
    grid: Grid
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.grid.n,):
            raise ValueError("probs must have one entry per grid point")
        if np.any(probs < -1e-15) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("grid probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def x_min(self):
        return self.grid.x_min

    @property
    def x_max(self):
        return self.grid.x_max

    @property
    def n(self):
        return self.grid.n

    def atoms(self):
        return self.grid.points, self.probs

    @classmethod
    def point(cls, grid: Grid, x: float) -> GridDistribution:
        return project_to_grid(([x], [1.0]), grid)[0]

    @classmethod
    def uniform(cls, grid: Grid) -> GridDistribution:
        return cls(grid, np.full(grid.n, 1.0 / grid.n))


@dataclass(frozen=True, eq=False)
class AtomDistribution(_Law):
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        if v.shape != p.shape or v.size == 0:
            raise ValueError("values and probs must be nonempty and of equal length")
        order = np.argsort(v, kind="stable")
        object.__setattr__(self, "values", v[order])
        object.__setattr__(self, "probs", p[order])

    def atoms(self):
        return self.values, self.probs

    @classmethod
    def point(cls, x: float) -> AtomDistribution:
        return cls([x], [1.0])


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution(_Law):
    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("empirical distribution needs at least one sample")
        object.__setattr__(self, "samples", s)

    def atoms(self):
        return self.samples, np.full(self.samples.size, 1.0 / self.samples.size)

    def cdf(self, x):
        idx = np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right")
        return (idx / self.samples.size)[()]

    def tail_below(self, x):
        idx = np.searchsorted(self.samples, -np.asarray(x, dtype=float), side="left")
        return (idx / self.samples.size)[()]


class ReturnVector:
    """Length-d vector of return-distribution representations."""

    def __init__(self, components):
        self.components = list(components)
        if not self.components:
            raise ValueError("a return vector needs at least one component")
        if self.is_grid:
            g = self.components[0].grid
            if any(c.grid != g for c in self.components):
                raise ValueError("grid-backed components must share one grid")

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def is_grid(self) -> bool:
        return all(isinstance(c, GridDistribution) for c in self.components)

    @property
    def grid(self) -> Grid | None:
        return self.components[0].grid if self.is_grid else None

    def probs_matrix(self) -> np.ndarray:
        return np.stack([c.probs for c in self.components])

    @classmethod
    def from_matrix(cls, grid: Grid, probs) -> ReturnVector:
        return cls([GridDistribution(grid, row) for row in np.asarray(probs)])

    @classmethod
    def point_masses(cls, grid: Grid, xs) -> ReturnVector:
        return cls([GridDistribution.point(grid, x) for x in xs])

    def means(self) -> list[float]:
        return [c.mean() for c in self.components]


def _as_atoms(dist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dist, _Law):
        return dist.atoms()
    v, p = dist
    return AtomDistribution(v, p).atoms()


# -- operations ------------------------------------------------------------------


def push_affine(dist, r: float, gamma: float):
    """Exact law of ``r + gamma * X``; grids come back as off-grid atoms."""
    if isinstance(dist, EmpiricalDistribution):
        return EmpiricalDistribution(r + gamma * dist.samples)
    v, p = _as_atoms(dist)
    return AtomDistribution(r + gamma * v, p)


def mixture(parts):
    """Convex combination of ``[(weight, distribution), ...]``."""
    parts = list(parts)
    weights = [w for w, _ in parts]
    if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
        raise WeightSumInvalid(f"mixture weights {weights} must be nonnegative and sum to 1")
    dists = [d for _, d in parts]
    if all(isinstance(d, GridDistribution) for d in dists):
        grid = dists[0].grid
        if all(d.grid == grid for d in dists):
            probs = sum(w * d.probs for w, d in parts)
            return GridDistribution(grid, probs / probs.sum())
    values = np.concatenate([_as_atoms(d)[0] for d in dists])
    probs = np.concatenate([w * _as_atoms(d)[1] for w, d in parts])
    uniq, inv = np.unique(values, return_inverse=True)
    return AtomDistribution(uniq, np.bincount(inv, weights=probs))


def project_to_grid(atoms, grid: Grid) -> tuple[GridDistribution, float]:
    """Split each atom linearly between its two neighbouring grid points.

    Mean-preserving for atoms inside ``[x_min, x_max]``; atoms outside are
    clamped to the nearest boundary point and their total mass is returned.
    """
    v, p = _as_atoms(atoms)
    lo, w_lo, w_hi, clamped = grid.split(v)
    probs = np.bincount(lo, weights=p * w_lo, minlength=grid.n)
    probs += np.bincount(lo + 1, weights=p * w_hi, minlength=grid.n)
    probs = probs / probs.sum()
    return GridDistribution(grid, probs), float(p[clamped].sum())


def _quantile_pieces(d1, d2):
    """Common refinement of both quantile functions as (lengths, q1, q2)."""
    v1, p1 = _as_atoms(d1)
    v2, p2 = _as_atoms(d2)
    c1 = np.cumsum(p1)
    c2 = np.cumsum(p2)
    c1[-1] = c2[-1] = 1.0
    breaks = np.unique(np.concatenate([[0.0], c1, c2]))
    breaks = breaks[(breaks >= 0) & (breaks <= 1)]
    lengths = np.diff(breaks)
    mids = 0.5 * (breaks[1:] + breaks[:-1])
    q1 = v1[np.minimum(np.searchsorted(c1, mids, side="left"), v1.size - 1)]
    q2 = v2[np.minimum(np.searchsorted(c2, mids, side="left"), v2.size - 1)]
    return lengths, q1, q2


def wasserstein(p_order: float, d1, d2) -> float:
    """p-Wasserstein distance as the L_p norm of the quantile-function difference."""
    if p_order < 1:
        raise ValueError("Wasserstein order must be >= 1")
    if (
        p_order == 1
        and isinstance(d1, GridDistribution)
        and isinstance(d2, GridDistribution)
        and d1.grid == d2.grid
    ):
        diff = np.cumsum(d1.probs - d2.probs)[:-1]
        return float(d1.grid.spacing * np.abs(diff).sum())
    lengths, q1, q2 = _quantile_pieces(d1, d2)
    return float(np.dot(lengths, np.abs(q1 - q2) ** p_order) ** (1.0 / p_order))


def sup_wasserstein(p_order: float, v1, v2) -> float:
    """max_i of the componentwise Wasserstein distances."""
    if len(v1) != len(v2):
        raise LengthMismatch(f"return vectors of length {len(v1)} and {len(v2)}")
    return max(wasserstein(p_order, a, b) for a, b in zip(v1, v2))


def ks_distance(d1, d2) -> float:
    """Kolmogorov-Smirnov distance sup_x |F1(x) - F2(x)|."""
    xs = np.union1d(_as_atoms(d1)[0], _as_atoms(d2)[0])
    return float(np.max(np.abs(d1.cdf(xs) - d2.cdf(xs))))


def ks_to_cdf(dist, cdf) -> float:
    """KS distance between a finite representation and a continuous CDF callable."""
    v, p = _as_atoms(dist)
    right = np.minimum(np.cumsum(p), 1.0)
    left = right - p
    f = np.asarray(cdf(v), dtype=float)
    return float(max(np.max(np.abs(right - f)), np.max(np.abs(left - f))))


def sup_ks(v1, v2) -> float:
    if len(v1) != len(v2):
        raise LengthMismatch(f"return vectors of length {len(v1)} and {len(v2)}")
    return max(ks_distance(a, b) for a, b in zip(v1, v2))


def to_csv(dist, path) -> None:
    """Write ``support,prob`` rows, or one ``sample`` column for empirical laws."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if isinstance(dist, EmpiricalDistribution):
            writer.writerow(["sample"])
            writer.writerows([repr(float(x))] for x in dist.samples)
        else:
            v, p = _as_atoms(dist)
            writer.writerow(["support", "prob"])
            writer.writerows([repr(float(a)), repr(float(b))] for a, b in zip(v, p))


def read_csv(path):
    """Inverse of :func:`to_csv` (grid laws come back as atoms)."""
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header == ["sample"]:
        return EmpiricalDistribution([float(r[0]) for r in body])
    return AtomDistribution([float(r[0]) for r in body], [float(r[1]) for r in body])
