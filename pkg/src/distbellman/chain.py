"""Structure of the index chain: accessibility, essential states, visit weights,
and the log-moment existence criterion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import NotStochastic
from .mrp import MarkovRewardSystem


@dataclass(frozen=True, eq=False)
class ChainClassification:
    sccs: tuple  # tuple of sorted index tuples
    essential: np.ndarray  # bool, per state
    reach: np.ndarray  # bool (d, d), reach[i, j] iff i -> j

    def reachable_from(self, i: int) -> set:
        return set(np.flatnonzero(self.reach[i]).tolist())


@dataclass(frozen=True)
class ExistenceReport:
    exists: bool
    offending_states: tuple
    per_state_log_moment: tuple
    essential: tuple


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    alpha: float
    w: np.ndarray


def _check_stochastic(p: np.ndarray):
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise NotStochastic("transition matrix must be square")
    if np.any(p < 0) or np.any(p > 1):
        raise NotStochastic("transition probabilities must lie in [0, 1]")
    bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > 1e-12)
    if bad.size:
        raise NotStochastic(f"rows {bad.tolist()} do not sum to 1")


def classify(p) -> ChainClassification:
    """SCCs, essential (sink-SCC) states and reachability of the chain with kernel ``p``.

    Edges are the strictly positive entries of ``p``; no tolerance is applied.
    """
    p = np.asarray(p, dtype=float)
    _check_stochastic(p)
    d = p.shape[0]
    graph = csr_matrix(p > 0)
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    reach = np.zeros((d, d), dtype=bool)
    for i in range(d):
        reach[i, breadth_first_order(graph, i, directed=True, return_predecessors=False)] = True
    # a component is essential iff no edge leaves it
    leaves = np.zeros(n_comp, dtype=bool)
    rows, cols = graph.nonzero()
    leaves[labels[rows][labels[rows] != labels[cols]]] = True
    essential = ~leaves[labels]
    comps = {}
    for i, lab in enumerate(labels):
        comps.setdefault(lab, []).append(i)
    sccs = tuple(sorted(tuple(c) for c in comps.values()))
    return ChainClassification(sccs, essential, reach)


def reachable_from(classification: ChainClassification, i: int) -> set:
    return classification.reachable_from(i)


def existence_check(mrs: MarkovRewardSystem) -> ExistenceReport:
    """A fixed point exists iff E log+|R_i| < inf for every essential i."""
    cls = classify(mrs.p)
    flags = tuple(mrs.reward_law(i).moment_profile().log_moment_finite for i in range(mrs.d))
    offending = tuple(i for i in range(mrs.d) if cls.essential[i] and not flags[i])
    return ExistenceReport(
        exists=not offending,
        offending_states=offending,
        per_state_log_moment=flags,
        essential=tuple(bool(e) for e in cls.essential),
    )


def geometric_visit_weights(p, gamma: float, alpha: float) -> WeightMatrix:
    """w_ij = P[I_N = j | I_0 = i] with N ~ Geometric(1 - gamma^alpha).

    Solved directly as (1 - g) (Id - g p)^-1 with g = gamma^alpha < 1.
    """
    if not 0.0 < gamma < 1.0 or not alpha > 0:
        raise ValueError("need gamma in (0, 1) and alpha > 0")
    p = np.asarray(p, dtype=float)
    g = gamma**alpha
    d = p.shape[0]
    w = np.linalg.solve(np.eye(d) - g * p, (1.0 - g) * np.eye(d))
    return WeightMatrix(alpha=float(alpha), w=w)


def truncated_visit_weights(p, gamma: float, alpha: float, horizon: int = 200) -> np.ndarray:
    """Series form of the visit weights, summed up to ``horizon`` terms."""
    p = np.asarray(p, dtype=float)
    g = gamma**alpha
    term = np.eye(p.shape[0])
    total = np.zeros_like(term)
    for t in range(horizon + 1):
        total += (1.0 - g) * g**t * term
        term = term @ p
    return total
