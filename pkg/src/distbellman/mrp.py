"""MDP and policy data model, and the reductions to a Markov reward system.

A :class:`MarkovRewardSystem` is the tuple (gamma, p, mu) on index set
``range(d)``: ``p[i][j]`` is the probability that index ``i`` moves to ``j``
and ``mu[i][j]`` the conditional reward law on that move (``PointMass(0)``
when ``p[i][j] == 0``).  Both the state view and the state-action view of an
MDP under a stationary policy produce one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, PolicyIncomplete
from .reward_dists import PointMass, RewardLaw, law_from_json, mixture_of

SEP = "|"
_TOL = 1e-12


@dataclass(frozen=True)
class Branch:
    prob: float
    next_state: str
    reward: RewardLaw


@dataclass(frozen=True, eq=False)
class MDPSpec:
    states: tuple
    actions: tuple
    gamma: float
    branches: dict = field(hash=False)
    # strict=False skips the gamma and branch-sum checks so `validate` can report it as a violation
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.strict and not 0.0 < self.gamma < 1.0:
            raise FormatError(f"gamma must lie in (0, 1), got {self.gamma}")
        if len(set(self.states)) != len(self.states) or len(set(self.actions)) != len(self.actions):
            raise FormatError("state and action labels must be unique")
        for label in self.states + self.actions:
            if SEP in str(label):
                raise FormatError(f"label {label!r} contains the separator {SEP!r}")
        known = set(self.states)
        for (s, a), blist in self.branches.items():
            if s not in known or a not in self.actions:
                raise FormatError(f"transition key ({s!r}, {a!r}) uses an unknown label")
            if not blist:
                raise FormatError(f"no branches for ({s!r}, {a!r})")
            for b in blist:
                if b.next_state not in known:
                    raise FormatError(f"unknown next state {b.next_state!r} from ({s!r}, {a!r})")
                if b.prob < 0:
                    raise FormatError(f"negative branch probability from ({s!r}, {a!r})")
            total = math.fsum(b.prob for b in blist)
            if self.strict and abs(total - 1.0) > _TOL:
                raise FormatError(f"branch probabilities of ({s!r}, {a!r}) sum to {total}")

    def available(self, s) -> list:
        """Actions with transitions defined at ``s``, in declaration order."""
        return [a for a in self.actions if (s, a) in self.branches]

    def pairs(self) -> list:
        """Defined (state, action) pairs in lexicographic declaration order."""
        return [(s, a) for s in self.states for a in self.actions if (s, a) in self.branches]


@dataclass(frozen=True)
class PolicySpec:
    """Stationary policy: ``probs[state][action]`` is the probability of ``action``."""

    probs: dict

    def __post_init__(self):
        for s, dist in self.probs.items():
            if any(p < 0 for p in dist.values()):
                raise FormatError(f"negative action probability at state {s!r}")
            total = math.fsum(dist.values())
            if abs(total - 1.0) > _TOL:
                raise FormatError(f"action probabilities at state {s!r} sum to {total}")

    def __getitem__(self, s):
        return self.probs[s]

    @classmethod
    def deterministic(cls, choice: dict) -> PolicySpec:
        return cls({s: {a: 1.0} for s, a in choice.items()})

    def is_deterministic(self) -> bool:
        return all(sum(1 for p in d.values() if p > 0) == 1 for d in self.probs.values())

    def action(self, s):
        """The action of a deterministic policy at ``s``."""
        return max(self.probs[s].items(), key=lambda kv: kv[1])[0]


@dataclass(frozen=True, eq=False)
class MarkovRewardSystem:
    gamma: float
    p: np.ndarray
    mu: tuple
    labels: tuple = ()

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("p must be a square matrix")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "mu", tuple(tuple(row) for row in self.mu))
        if len(self.mu) != p.shape[0] or any(len(row) != p.shape[0] for row in self.mu):
            raise ValueError("mu must have the same shape as p")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(p.shape[0])))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def d(self) -> int:
        return self.p.shape[0]

    def reward_law(self, i: int) -> RewardLaw:
        """Law of R_i, the mixture of ``mu[i][j]`` with weights ``p[i][j]``."""
        return mixture_of([(self.p[i, j], self.mu[i][j]) for j in range(self.d)])

    def successors(self, i: int) -> list:
        return [j for j in range(self.d) if self.p[i, j] > 0]

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "labels": list(self.labels),
            "p": self.p.tolist(),
            "mu": [[law.to_json() for law in row] for row in self.mu],
        }


@dataclass(frozen=True)
class Violation:
    kind: str
    i: int | None = None
    j: int | None = None
    detail: str = ""

    def __str__(self):
        where = ", ".join(f"{n}={v}" for n, v in (("i", self.i), ("j", self.j)) if v is not None)
        text = f"{self.kind}({where})"
        return f"{text}: {self.detail}" if self.detail else text


def validate(mrs: MarkovRewardSystem) -> list[Violation]:
    """All invariant violations of ``mrs``; empty when the system is valid."""
    out = []
    if not 0.0 < mrs.gamma < 1.0:
        out.append(Violation("GammaOutOfRange", detail=f"gamma={mrs.gamma}"))
    for i in range(mrs.d):
        row = mrs.p[i]
        for j in range(mrs.d):
            if not 0.0 <= row[j] <= 1.0:
                out.append(Violation("EntryOutOfRange", i, j, f"p={row[j]}"))
        total = math.fsum(row)
        if abs(total - 1.0) > _TOL:
            out.append(Violation("RowNotStochastic", i, detail=f"row sum {total}"))
        for j in range(mrs.d):
            if row[j] == 0.0 and mrs.mu[i][j] != PointMass(0.0):
                out.append(Violation("DeltaZeroConventionViolated", i, j))
    return out


def _check_policy(mdp: MDPSpec, policy: PolicySpec):
    for s in mdp.states:
        if s not in policy.probs or not policy.probs[s]:
            raise PolicyIncomplete(f"policy has no action distribution for state {s!r}")
        for a, prob in policy.probs[s].items():
            if prob > 0 and (s, a) not in mdp.branches:
                raise PolicyIncomplete(f"policy uses action {a!r} without transitions at {s!r}")


def _conditional_laws(pieces: dict, d: int):
    """Turn ``{(i, j): [(weight, law), ...]}`` into (p, mu) matrices."""
    p = np.zeros((d, d))
    mu = [[PointMass(0.0)] * d for _ in range(d)]
    for (i, j), parts in pieces.items():
        mass = math.fsum(w for w, _ in parts)
        if mass <= 0:
            continue
        p[i, j] = mass
        mu[i][j] = mixture_of(parts)
    return p, mu


def from_state_view(mdp: MDPSpec, policy: PolicySpec) -> MarkovRewardSystem:
    """Index set = states; p and mu averaged over the policy's actions."""
    _check_policy(mdp, policy)
    index = {s: k for k, s in enumerate(mdp.states)}
    pieces: dict = {}
    for s in mdp.states:
        for a, pa in policy.probs[s].items():
            if pa <= 0:
                continue
            for b in mdp.branches[(s, a)]:
                if b.prob > 0:
                    pieces.setdefault((index[s], index[b.next_state]), []).append((pa * b.prob, b.reward))
    p, mu = _conditional_laws(pieces, len(mdp.states))
    return MarkovRewardSystem(mdp.gamma, p, mu, tuple(str(s) for s in mdp.states))


def from_state_action_view(mdp: MDPSpec, policy: PolicySpec) -> MarkovRewardSystem:
    """Index set = defined (state, action) pairs in lexicographic order.

    The move (s, a) -> (s', a') has probability rho_(s,a)(s') * pi_s'(a'); its
    reward law is that of the branches from (s, a) landing in s'.
    """
    _check_policy(mdp, policy)
    pairs = mdp.pairs()
    index = {sa: k for k, sa in enumerate(pairs)}
    pieces: dict = {}
    for sa in pairs:
        for b in mdp.branches[sa]:
            if b.prob <= 0:
                continue
            for a2, pa2 in policy.probs[b.next_state].items():
                if pa2 > 0:
                    key = (index[sa], index[(b.next_state, a2)])
                    pieces.setdefault(key, []).append((b.prob * pa2, b.reward))
    p, mu = _conditional_laws(pieces, len(pairs))
    return MarkovRewardSystem(mdp.gamma, p, mu, tuple(f"{s}{SEP}{a}" for s, a in pairs))


# -- JSON ---------------------------------------------------------------------


def mdp_from_json(obj: dict, strict: bool = True) -> MDPSpec:
    try:
        gamma = float(obj["gamma"])
        states = [str(s) for s in obj["states"]]
        actions = [str(a) for a in obj["actions"]]
        branches = {}
        for key, blist in obj["transitions"].items():
            if key.count(SEP) != 1:
                raise FormatError(f"transition key {key!r} must be 'state{SEP}action'")
            s, a = key.split(SEP)
            branches[(s, a)] = tuple(
                Branch(float(b["prob"]), str(b["next"]), law_from_json(b["reward"])) for b in blist
            )
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed MDP: {exc!r}") from exc
    return MDPSpec(states, actions, gamma, branches, strict)


def mdp_to_json(mdp: MDPSpec) -> dict:
    return {
        "gamma": mdp.gamma,
        "states": list(mdp.states),
        "actions": list(mdp.actions),
        "transitions": {
            f"{s}{SEP}{a}": [
                {"prob": b.prob, "next": b.next_state, "reward": b.reward.to_json()} for b in blist
            ]
            for (s, a), blist in mdp.branches.items()
        },
    }


def policy_from_json(obj: dict) -> PolicySpec:
    if not isinstance(obj, dict):
        raise FormatError("policy must be a JSON object")
    try:
        return PolicySpec({str(s): {str(a): float(p) for a, p in d.items()} for s, d in obj.items()})
    except (AttributeError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed policy: {exc!r}") from exc


def _read_json(path) -> dict:
    try:
        with Path(path).open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def load_mdp(path, strict: bool = True) -> MDPSpec:
    return mdp_from_json(_read_json(path), strict)


def load_policy(path) -> PolicySpec:
    return policy_from_json(_read_json(path))
