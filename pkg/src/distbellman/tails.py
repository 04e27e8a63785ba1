"""Closed-form tail predictions for the return vector.

Pareto-like tail constants come from the visit weights of the index chain at
an independent Geometric(1 - gamma^alpha) time:

    P[G_i > x] ~ x^-alpha * sum_j w_ij q_j c_j / (1 - gamma^alpha)
    P[G_i < -x] ~ x^-alpha * sum_j w_ij (1 - q_j) c_j / (1 - gamma^alpha)

Only constant slowly varying factors are handled (they are absorbed into c).
Moment and boundedness properties transfer from the rewards of every state
reachable from i to G_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import WeightMatrix, classify, geometric_visit_weights
from .errors import IncompatibleTailIndex, NoHeavyState
from .mrp import MarkovRewardSystem
from .reward_dists import RegVarDescriptor, Supremum, sup_min


@dataclass(frozen=True, eq=False)
class TailReport:
    alpha: float
    right: np.ndarray
    left: np.ndarray
    weights: WeightMatrix
    descriptors: tuple  # RegVarDescriptor per state

    @property
    def per_state(self) -> list[tuple[float, float]]:
        return list(zip(self.right.tolist(), self.left.tolist()))

    def to_json(self, labels=None) -> dict:
        labels = labels or [str(i) for i in range(len(self.right))]
        return {
            "alpha": self.alpha,
            "states": [
                {
                    "state": lab,
                    "right_const": float(r),
                    "left_const": float(l),
                    "c": d.c,
                    "q": d.q,
                }
                for lab, r, l, d in zip(labels, self.right, self.left, self.descriptors)
            ],
            "weights": self.weights.w.tolist(),
        }


@dataclass(frozen=True)
class TransferReport:
    """What transfers to G_i: a bound on |G_i|, and exponent sups for E exp(beta|G_i|) and E|G_i|^p."""

    bound: float | None
    exp_beta_sup: Supremum | None
    p_moment_sup: Supremum

    def to_json(self) -> dict:
        def sup(s):
            return None if s is None else {"value": _finite_or_str(s.value), "inclusive": s.inclusive}

        return {
            "bound": self.bound,
            "exp_beta_sup": sup(self.exp_beta_sup),
            "p_moment_sup": sup(self.p_moment_sup),
        }


def _finite_or_str(x: float):
    return x if math.isfinite(x) else "inf"


def _descriptors_at(mrs: MarkovRewardSystem, alpha: float) -> list[RegVarDescriptor | None]:
    return [mrs.reward_law(j).reg_var(alpha) for j in range(mrs.d)]


def validate_reg_var_inputs(mrs: MarkovRewardSystem, alpha: float, starts=None) -> list[RegVarDescriptor]:
    """Descriptors of every reward law R_j at index ``alpha``.

    Only states reachable from ``starts`` (default: all states) are required
    to have a descriptor; the others are returned as None.  Raises
    IncompatibleTailIndex for the first reachable state whose tail is heavier
    than ``alpha`` or not Pareto-like, and NoHeavyState when every reachable
    constant is zero.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    starts = range(mrs.d) if starts is None else starts
    reach = classify(mrs.p).reach
    needed = sorted(set(np.flatnonzero(reach[list(starts)].any(axis=0)).tolist()))
    descs = _descriptors_at(mrs, alpha)
    for j in needed:
        if descs[j] is None:
            raise IncompatibleTailIndex(
                f"reward law of state {mrs.labels[j]} has no Pareto-like descriptor at alpha={alpha}",
                j,
            )
    if all(descs[j].c == 0.0 for j in needed):
        raise NoHeavyState("no reachable reward law has a nonzero tail constant at this alpha")
    return [descs[j] if j in needed else None for j in range(mrs.d)]


def predict_tails(mrs: MarkovRewardSystem, alpha: float) -> TailReport:
    """Right and left tail constants of every G_i at index ``alpha``."""
    descs = validate_reg_var_inputs(mrs, alpha)
    weights = geometric_visit_weights(mrs.p, mrs.gamma, alpha)
    c = np.array([d.c for d in descs])
    q = np.array([d.q for d in descs])
    scale = 1.0 - mrs.gamma**alpha
    right = weights.w @ (q * c) / scale
    left = weights.w @ ((1.0 - q) * c) / scale
    # the solve can leave -1e-17 on states with no heavy successor
    return TailReport(alpha, np.maximum(right, 0.0), np.maximum(left, 0.0), weights, tuple(descs))


def transfer_bounds(mrs: MarkovRewardSystem, i: int) -> TransferReport:
    reach = sorted(classify(mrs.p).reachable_from(i))
    laws = [mrs.reward_law(j) for j in reach]
    bound = None
    if all(law.is_bounded for law in laws):
        bound = max(law.abs_bound() for law in laws) / (1.0 - mrs.gamma)
    profiles = [law.moment_profile() for law in laws]
    beta = sup_min(pr.exp_moment_beta_sup for pr in profiles)
    return TransferReport(
        bound=bound,
        exp_beta_sup=beta if beta.value > 0 else None,
        p_moment_sup=sup_min(pr.p_moment_sup for pr in profiles),
    )
