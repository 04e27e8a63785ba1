"""The distributional Bellman operator on grid-backed return vectors.

Component i of the operator maps eta to the law of R_i + gamma * G_{J_i},
i.e. ``sum_j p_ij * E_{r ~ mu_ij}[law of r + gamma G_j]``.  The reward
integral is replaced by a finite quadrature (exact atoms for discrete laws,
quantile midpoints otherwise) and every pushed-forward atom is split linearly
onto the shared grid.  For a fixed grid and quadrature that whole map is a
sparse linear operator on the stacked probability vectors, which is built
once and reused across iterations.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse

from .chain import existence_check
from .errors import GridMissing, NoFixedPoint, NotConverged
from .mrp import MarkovRewardSystem
from .returns import Grid, ReturnVector

DEFAULT_REWARD_ATOMS = 64
DEFAULT_GRID_SIZE = 1024


@dataclass
class ConvergenceReport:
    iterations: int = 0
    gap_history: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = math.nan
    residuals: list = field(default_factory=list)
    clamped_mass: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


class BellmanOperator:
    """Precomputed grid discretisation of the operator for one system."""

    def __init__(self, mrs: MarkovRewardSystem, grid: Grid, n_reward_atoms: int = DEFAULT_REWARD_ATOMS):
        self.mrs = mrs
        self.grid = grid
        self.n_reward_atoms = n_reward_atoms
        d, n = mrs.d, grid.n
        x = grid.points
        rows, cols, data = [], [], []
        clamp = np.zeros((d, d * n))
        for i in range(d):
            for j in mrs.successors(i):
                vals, wts = mrs.mu[i][j].discretize(n_reward_atoms)
                targets = vals[:, None] + mrs.gamma * x[None, :]
                lo, w_lo, w_hi, clamped = grid.split(targets.ravel())
                mass = (mrs.p[i, j] * wts)[:, None] * np.ones((1, n))
                mass = mass.ravel()
                src = np.tile(np.arange(n), len(vals)) + j * n
                rows += [i * n + lo, i * n + lo + 1]
                cols += [src, src]
                data += [mass * w_lo, mass * w_hi]
                np.add.at(clamp[i], src[clamped], mass[clamped])
        self.matrix = sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(d * n, d * n),
        )
        self.clamp = clamp

    def apply(self, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One application to a (d, n) probability matrix; returns (new, clamped mass per state)."""
        flat = np.asarray(probs, dtype=float).ravel()
        out = (self.matrix @ flat).reshape(probs.shape)
        out = np.maximum(out, 0.0)
        out /= out.sum(axis=1, keepdims=True)
        return out, self.clamp @ flat

    def __call__(self, eta: ReturnVector) -> ReturnVector:
        out, _ = self.apply(_grid_probs(eta, self.grid))
        return ReturnVector.from_matrix(self.grid, out)


def _grid_probs(eta: ReturnVector, grid: Grid | None = None) -> np.ndarray:
    if not isinstance(eta, ReturnVector) or not eta.is_grid:
        raise GridMissing("the Bellman operator acts on grid-backed return vectors")
    if grid is not None and eta.grid != grid:
        raise GridMissing("return vector lives on a different grid than the operator")
    return eta.probs_matrix()


def _require_existence(mrs: MarkovRewardSystem):
    report = existence_check(mrs)
    if not report.exists:
        labels = [mrs.labels[i] for i in report.offending_states]
        raise NoFixedPoint(
            f"E log+|R_i| is infinite on essential states {labels}; no fixed point exists",
            report.offending_states,
        )


def apply_operator(
    mrs: MarkovRewardSystem,
    eta: ReturnVector,
    n_reward_atoms: int = DEFAULT_REWARD_ATOMS,
    check_existence: bool = True,
) -> ReturnVector:
    """One application of the operator; pass ``check_existence=False`` for diagnostics."""
    grid = eta.grid if isinstance(eta, ReturnVector) else None
    if grid is None:
        raise GridMissing("the Bellman operator acts on grid-backed return vectors")
    if check_existence:
        _require_existence(mrs)
    return BellmanOperator(mrs, grid, n_reward_atoms)(eta)


def _w1_gaps(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    return h * np.abs(np.cumsum(a - b, axis=1)[:, :-1]).sum(axis=1)


def iterate(
    mrs: MarkovRewardSystem,
    init: ReturnVector,
    n_steps: int,
    n_reward_atoms: int = DEFAULT_REWARD_ATOMS,
    operator: BellmanOperator | None = None,
    check_existence: bool = True,
    tol: float | None = None,
) -> tuple[ReturnVector, ConvergenceReport]:
    """Apply the operator ``n_steps`` times, recording sup-W1 gaps between iterates.

    With ``tol`` set, stops early once a gap drops to ``tol`` or below.
    """
    grid = init.grid if isinstance(init, ReturnVector) else None
    probs = _grid_probs(init)
    if check_existence:
        _require_existence(mrs)
    op = operator or BellmanOperator(mrs, grid, n_reward_atoms)
    report = ConvergenceReport()
    h = grid.spacing
    for _ in range(n_steps):
        new, clamped = op.apply(probs)
        gap = float(np.max(_w1_gaps(new, probs, h)))
        probs = new
        report.iterations += 1
        report.gap_history.append(gap)
        report.clamped_mass = float(np.max(clamped))
        if tol is not None and gap <= tol:
            report.converged = True
            break
    result = ReturnVector.from_matrix(grid, probs)
    report.residuals = cdf_residual(mrs, result, n_reward_atoms).tolist()
    report.final_residual = max(report.residuals)
    return result, report


def cdf_residual(mrs: MarkovRewardSystem, eta: ReturnVector, n_reward_atoms: int = DEFAULT_REWARD_ATOMS) -> np.ndarray:
    """Per-state sup over grid points of |F_i(x) - sum_j p_ij int F_j((x - r)/gamma) dmu_ij(r)|."""
    probs = _grid_probs(eta)
    grid = eta.grid
    x = grid.points
    cums = np.concatenate([np.zeros((mrs.d, 1)), np.cumsum(probs, axis=1)], axis=1)
    cums = np.minimum(cums, 1.0)
    out = np.zeros(mrs.d)
    for i in range(mrs.d):
        rhs = np.zeros(grid.n)
        for j in mrs.successors(i):
            vals, wts = mrs.mu[i][j].discretize(n_reward_atoms)
            y = (x[:, None] - vals[None, :]) / mrs.gamma
            rhs += mrs.p[i, j] * (cums[j][grid.cdf_index(y)] @ wts)
        out[i] = np.max(np.abs(cums[i][1:] - rhs))
    return out


def default_grid(
    mrs: MarkovRewardSystem,
    n: int = DEFAULT_GRID_SIZE,
    seed: int | None = 0,
    pilot_samples: int = 10_000,
) -> Grid:
    """Grid covering the returns of ``mrs``.

    Bounded rewards give the exact range [lo, hi] / (1 - gamma); otherwise the
    1e-5 and 1 - 1e-5 quantiles of a Monte Carlo pilot run, widened by 10%.
    """
    laws = [mrs.reward_law(i) for i in range(mrs.d)]
    if all(law.is_bounded for law in laws):
        lo = min(law.bounds()[0] for law in laws) / (1.0 - mrs.gamma)
        hi = max(law.bounds()[1] for law in laws) / (1.0 - mrs.gamma)
        lo, hi = min(lo, 0.0), max(hi, 0.0)
    else:
        from .montecarlo import empirical_return_vector

        if seed is None:
            raise ValueError("a seed is required to size the grid for unbounded rewards")
        pilot = empirical_return_vector(mrs, None, pilot_samples, seed)
        pooled = np.concatenate([c.samples for c in pilot])
        pooled = pooled[np.isfinite(pooled)]
        lo, hi = np.quantile(pooled, [1e-5, 1 - 1e-5])
        span = hi - lo
        lo, hi = lo - 0.1 * span, hi + 0.1 * span
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    return Grid(float(lo), float(hi), n)


def solve_fixed_point(
    mrs: MarkovRewardSystem,
    tol: float = 1e-8,
    max_iter: int = 1000,
    grid: Grid | None = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    n_reward_atoms: int = DEFAULT_REWARD_ATOMS,
    init: ReturnVector | None = None,
    seed: int | None = 0,
    raise_on_failure: bool = True,
) -> tuple[ReturnVector, ConvergenceReport]:
    """Iterate from the all-delta_0 vector until the sup-W1 gap is at most ``tol``.

    Raises NoFixedPoint when the log-moment criterion fails on an essential
    state and NotConverged when ``max_iter`` is exhausted first.
    """
    _require_existence(mrs)
    if init is None:
        grid = grid or default_grid(mrs, grid_size, seed)
        init = ReturnVector.point_masses(grid, [0.0] * mrs.d)
    result, report = iterate(
        mrs, init, max_iter, n_reward_atoms, check_existence=False, tol=tol
    )
    if not report.converged and raise_on_failure:
        raise NotConverged(
            f"gap {report.gap_history[-1] if report.gap_history else math.nan:.3g} > tol {tol} "
            f"after {report.iterations} iterations",
            result,
            report,
        )
    return result, report
