"""Ordinary Bellman equations, policy improvement and policy iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedMean
from .mrp import MDPSpec, PolicySpec


@dataclass(frozen=True, eq=False)
class ReducedMDP:
    """Expected reward r[(s, a)] and next-state distribution p[(s, a)] (vector over states)."""

    expected_reward: dict
    next_state: dict


@dataclass
class PolicyIterationResult:
    policy: PolicySpec
    values: dict
    iterations: int
    value_history: list = field(default_factory=list)


def reduce(mdp: MDPSpec) -> ReducedMDP:
    index = {s: k for k, s in enumerate(mdp.states)}
    rewards, nexts = {}, {}
    for sa, blist in mdp.branches.items():
        total = 0.0
        vec = np.zeros(len(mdp.states))
        for b in blist:
            m = b.reward.mean()
            if m is None:
                raise UndefinedMean(
                    f"reward law {b.reward.kind!r} at {sa} has no mean; ordinary values do not "
                    "exist, though distributional evaluation may still apply"
                )
            total += b.prob * m
            vec[index[b.next_state]] += b.prob
        rewards[sa] = total
        nexts[sa] = vec
    return ReducedMDP(rewards, nexts)


def _policy_system(mdp: MDPSpec, red: ReducedMDP, policy: PolicySpec):
    n = len(mdp.states)
    r_pi = np.zeros(n)
    P_pi = np.zeros((n, n))
    for k, s in enumerate(mdp.states):
        for a, pa in policy.probs[s].items():
            if pa > 0:
                r_pi[k] += pa * red.expected_reward[(s, a)]
                P_pi[k] += pa * red.next_state[(s, a)]
    return r_pi, P_pi


def _solve_v(mdp: MDPSpec, red: ReducedMDP, policy: PolicySpec) -> np.ndarray:
    r_pi, P_pi = _policy_system(mdp, red, policy)
    return np.linalg.solve(np.eye(len(mdp.states)) - mdp.gamma * P_pi, r_pi)


def _q_from_v(mdp: MDPSpec, red: ReducedMDP, v: np.ndarray) -> dict:
    return {sa: red.expected_reward[sa] + mdp.gamma * float(red.next_state[sa] @ v) for sa in mdp.pairs()}


def solve_v(mdp: MDPSpec, policy: PolicySpec) -> dict:
    """State values: the solution of v = r_pi + gamma P_pi v."""
    v = _solve_v(mdp, reduce(mdp), policy)
    return dict(zip(mdp.states, v.tolist()))


def solve_q(mdp: MDPSpec, policy: PolicySpec) -> dict:
    """State-action values by one-step lookahead on the state values."""
    red = reduce(mdp)
    return _q_from_v(mdp, red, _solve_v(mdp, red, policy))


def improve(mdp: MDPSpec, q: dict) -> PolicySpec:
    """Greedy deterministic policy; ties go to the earliest declared action."""
    choice = {}
    for s in mdp.states:
        best, best_q = None, -math.inf
        for a in mdp.available(s):
            if q[(s, a)] > best_q:
                best, best_q = a, q[(s, a)]
        choice[s] = best
    return PolicySpec.deterministic(choice)


def policy_iteration(mdp: MDPSpec, init_policy: PolicySpec | None = None, max_rounds: int | None = None) -> PolicyIterationResult:
    """Alternate evaluation and greedy improvement until the policy is stable."""
    red = reduce(mdp)
    if init_policy is None:
        init_policy = PolicySpec.deterministic({s: mdp.available(s)[0] for s in mdp.states})
    policy = init_policy
    limit = max_rounds or max(1, len(mdp.actions)) ** len(mdp.states) + 1
    history = []
    for rounds in range(1, limit + 1):
        v = _solve_v(mdp, red, policy)
        history.append(dict(zip(mdp.states, v.tolist())))
        new = improve(mdp, _q_from_v(mdp, red, v))
        if new == policy:
            return PolicyIterationResult(policy, history[-1], rounds, history)
        policy = new
    raise RuntimeError("policy iteration did not stabilise")


def enumerate_deterministic_policies(mdp: MDPSpec):
    """Every deterministic stationary policy (exhaustive; small MDPs only)."""
    from itertools import product

    for combo in product(*(mdp.available(s) for s in mdp.states)):
        yield PolicySpec.deterministic(dict(zip(mdp.states, combo)))
