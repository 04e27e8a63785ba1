"""Coupled (affine) view of the Bellman system.

All d pairs (R_i, J_i) are drawn at once each step, giving a random matrix
J with J[i, j] = gamma * 1(J_i = j) and a reward vector R.  The return
vector is the series G = sum_t (J^(0) ... J^(t-1)) R^(t).

Every product of such matrices has exactly one nonzero per row, equal to
gamma^n, so it is stored as a column-index map plus the scalar gamma^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .montecarlo import _cum_rows, _next_index, draw_rewards, sample_returns
from .mrp import MarkovRewardSystem
from .returns import EmpiricalDistribution, ks_distance
from .rng import blocks, stream


class Independence:
    """Rows drawn independently of each other."""

    name = "independence"

    def draw(self, rng: np.random.Generator, n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniforms driving the index choice and the reward of each row, each (n, d)."""
        uj = rng.random((n, d))
        ur = rng.random((n, d))
        return uj, ur


@dataclass(frozen=True, eq=False)
class AffinePairSample:
    J: np.ndarray
    R: np.ndarray


def _draw_rows(mrs: MarkovRewardSystem, coupling, rng, n: int, cum_p=None):
    d = mrs.d
    cum_p = _cum_rows(mrs.p) if cum_p is None else cum_p
    uj, ur = coupling.draw(rng, n, d)
    src = np.broadcast_to(np.arange(d), (n, d)).ravel()
    dst = _next_index(cum_p, src, uj.ravel())
    r = draw_rewards(mrs, src, dst, ur.ravel())
    return dst.reshape(n, d), r.reshape(n, d)


def sample_pair(mrs: MarkovRewardSystem, coupling, rng: np.random.Generator) -> AffinePairSample:
    idx, r = _draw_rows(mrs, coupling, rng, 1)
    J = np.zeros((mrs.d, mrs.d))
    J[np.arange(mrs.d), idx[0]] = mrs.gamma
    return AffinePairSample(J, r[0])


def simulate_series(mrs: MarkovRewardSystem, coupling, T: int, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Partial sums over t < T of the series; shape (d,) or (n, d) when ``n`` is given."""
    size = 1 if n is None else n
    d = mrs.d
    cum_p = _cum_rows(mrs.p)
    colmap = np.broadcast_to(np.arange(d), (size, d)).copy()
    rows = np.arange(size)[:, None]
    total = np.zeros((size, d))
    disc = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(T):
            idx, r = _draw_rows(mrs, coupling, rng, size, cum_p)
            total += disc * r[rows, colmap]
            colmap = idx[rows, colmap]
            disc *= mrs.gamma
    return total[0] if n is None else total


def product_map(mrs: MarkovRewardSystem, coupling, n: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Compact form (column map, gamma^n) of J^(0) ... J^(n-1) for one realisation."""
    cum_p = _cum_rows(mrs.p)
    colmap = np.arange(mrs.d)
    for _ in range(n):
        idx, _ = _draw_rows(mrs, coupling, rng, 1, cum_p)
        colmap = idx[0][colmap]
    return colmap, mrs.gamma**n


def lyapunov_estimate(mrs: MarkovRewardSystem, coupling, n: int, rng: np.random.Generator) -> float:
    """(1/n) log of the spectral norm of an n-fold product.

    The norm is gamma^n * sqrt(largest column multiplicity), so the estimate
    lies in [log gamma, log gamma + log(sqrt d) / n].
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    colmap, _ = product_map(mrs, coupling, n, rng)
    mult = int(np.bincount(colmap, minlength=mrs.d).max())
    return math.log(mrs.gamma) + 0.5 * math.log(mult) / n


def marginal_check(mrs: MarkovRewardSystem, coupling, n_samples: int, T: int, seed) -> np.ndarray:
    """Per-state KS distance between series marginals and independent scalar returns.

    The series uses streams (seed, 0, block); the scalar returns use
    (seed, 1, state, block), so the two samples share no randomness.
    """
    series = np.concatenate(
        [simulate_series(mrs, coupling, T, stream(seed, 0, b), n=size) for b, size in blocks(n_samples)]
    )
    out = np.zeros(mrs.d)
    for i in range(mrs.d):
        scalar = np.concatenate(
            [sample_returns(mrs, i, T, size, stream(seed, 1, i, b)) for b, size in blocks(n_samples)]
        )
        out[i] = ks_distance(EmpiricalDistribution(series[:, i]), EmpiricalDistribution(scalar))
    return out
