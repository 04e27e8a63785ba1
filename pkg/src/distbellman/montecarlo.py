"""Simulation oracle: trajectories, truncated returns, divergence and tail diagnostics."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientTailSamples
from .mrp import MarkovRewardSystem, MDPSpec, PolicySpec
from .returns import EmpiricalDistribution, ReturnVector
from .rng import blocks, stream

HEAVY_TAIL_HORIZON = 60
MAX_HORIZON = 100_000


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    actions: tuple
    rewards: tuple

    @property
    def length(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class DivergenceReport:
    fraction_large_terms: float
    late_fraction: float
    suspected_divergence: bool


@dataclass(frozen=True)
class TailEstimate:
    alpha_hat: float
    k: int
    ratios: tuple  # (x, x^alpha * P[G > x])


def sample_trajectory(mdp: MDPSpec, policy: PolicySpec, s0, T: int, rng: np.random.Generator) -> Trajectory:
    """Roll the MDP forward ``T`` steps from ``s0`` under ``policy``."""
    states, actions, rewards = [s0], [], []
    s = s0
    for _ in range(T):
        acts = [a for a in mdp.actions if policy.probs[s].get(a, 0.0) > 0]
        probs = np.array([policy.probs[s][a] for a in acts])
        a = acts[_choose(probs, rng.random())]
        blist = mdp.branches[(s, a)]
        b = blist[_choose(np.array([br.prob for br in blist]), rng.random())]
        rewards.append(b.reward.sample(rng))
        actions.append(a)
        s = b.next_state
        states.append(s)
    return Trajectory(tuple(states), tuple(actions), tuple(rewards))


def _choose(probs: np.ndarray, u: float) -> int:
    cum = np.cumsum(probs)
    return int(min(np.searchsorted(cum / cum[-1], u, side="right"), len(probs) - 1))


def _next_index(cum_p: np.ndarray, idx: np.ndarray, u: np.ndarray) -> np.ndarray:
    return (u[:, None] >= cum_p[idx]).sum(axis=1)


def _cum_rows(p: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p, axis=1)
    # normalising makes the last entry exactly 1, so zero-probability columns stay unreachable
    return cum / cum[:, -1:]


def draw_rewards(mrs: MarkovRewardSystem, src: np.ndarray, dst: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Rewards for moves ``src -> dst`` from uniforms ``u`` (same shape)."""
    out = np.zeros(u.shape)
    codes = src * mrs.d + dst
    for code in np.unique(codes):
        i, j = divmod(int(code), mrs.d)
        sel = codes == code
        out[sel] = mrs.mu[i][j].from_uniform(u[sel])
    return out


def _rollout(mrs: MarkovRewardSystem, start: np.ndarray, T: int, rng: np.random.Generator, keep: bool = False):
    """Truncated returns sum_{t<T} gamma^t R_t for chains started at ``start``."""
    n = start.size
    cum_p = _cum_rows(mrs.p)
    idx = start.astype(np.int64).copy()
    total = np.zeros(n)
    kept = np.zeros((n, T)) if keep else None
    disc = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            nxt = _next_index(cum_p, idx, rng.random(n))
            r = draw_rewards(mrs, idx, nxt, rng.random(n))
            total += disc * r
            if keep:
                kept[:, t] = r
            disc *= mrs.gamma
            idx = nxt
    return total, kept


def sample_return(mrs: MarkovRewardSystem, i: int, T: int, rng: np.random.Generator) -> float:
    """One draw of sum_{t<T} gamma^t R_{I_t, I_{t+1}, t} with I_0 = i."""
    return float(_rollout(mrs, np.array([i]), T, rng)[0][0])


def sample_returns(mrs: MarkovRewardSystem, i: int, T: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return _rollout(mrs, np.full(n, i), T, rng)[0]


def default_horizon(mrs: MarkovRewardSystem, eps: float = 1e-9) -> int:
    """Truncation horizon so that gamma^T K / (1 - gamma) <= eps.

    Bounded rewards use their bound K; unbounded light-tailed rewards use the
    1e-9 quantiles as K; Pareto-like or log-heavy rewards use a fixed horizon.
    """
    laws = [mrs.reward_law(i) for i in range(mrs.d)]
    if all(law.is_bounded for law in laws):
        K = max(law.abs_bound() for law in laws)
    else:
        for law in laws:
            desc = law.reg_var()
            if desc is None or not desc.light:
                return HEAVY_TAIL_HORIZON
        K = max(float(np.max(np.abs(law.from_uniform(np.array([1e-9, 1 - 1e-9]))))) for law in laws)
    if K <= 0:
        return 1
    T = math.ceil(math.log(eps * (1.0 - mrs.gamma) / K) / math.log(mrs.gamma))
    return int(min(max(T, 1), MAX_HORIZON))


def empirical_return_vector(
    mrs: MarkovRewardSystem,
    T: int | None,
    n_samples: int,
    seed,
    workers: int = 1,
) -> ReturnVector:
    """``n_samples`` truncated returns per start index.

    Block ``b`` of start index ``i`` is drawn from stream ``(seed, i, b)``;
    the result is identical for every worker count.
    """
    T = default_horizon(mrs) if T is None else T
    tasks = [(i, b, size) for i in range(mrs.d) for b, size in blocks(n_samples)]

    def run(task):
        i, b, size = task
        return sample_returns(mrs, i, T, size, stream(seed, i, b))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(t) for t in tasks]
    per_state = [[] for _ in range(mrs.d)]
    for (i, _, _), chunk in zip(tasks, chunks):
        per_state[i].append(chunk)
    return ReturnVector([EmpiricalDistribution(np.concatenate(c)) for c in per_state])


def divergence_diagnostic(mrs: MarkovRewardSystem, i: int, T: int, rng: np.random.Generator, threshold: float = 0.05) -> DivergenceReport:
    """Heuristic root-test probe of almost-sure convergence of the return series.

    Counts the terms with gamma^t |R_t| > 1 along one path of length ``T``;
    divergence is suspected when more than ``threshold`` of the last T/2
    terms are large.  Only informative for gamma close to 1, where the
    frequency of large terms decays slowly.
    """
    if T < 100:
        raise ValueError("divergence diagnostic needs T >= 100")
    _, rewards = _rollout(mrs, np.array([i]), T, rng, keep=True)
    with np.errstate(divide="ignore"):
        log_terms = np.arange(T) * math.log(mrs.gamma) + np.log(np.abs(rewards[0]))
    large = log_terms > 0
    late = large[T // 2 :]
    late_fraction = float(late.mean())
    return DivergenceReport(float(large.mean()), late_fraction, late_fraction > threshold)


def hill_estimator(samples, k: int) -> float:
    """Hill estimate of the right-tail index from the top ``k`` order statistics."""
    x = np.sort(np.asarray(samples, dtype=float))
    x = x[x > 0]
    if not 1 <= k < x.size:
        raise InsufficientTailSamples(f"need 1 <= k < {x.size} positive samples, got k={k}")
    top = x[-k:]
    base = x[-k - 1]
    s = float(np.sum(np.log(top / base)))
    if not s > 0 or not math.isfinite(s):
        raise InsufficientTailSamples("top order statistics carry no tail information")
    return k / s


def tail_ratio(samples, probes) -> list[tuple[float, float, float]]:
    """Empirical ``(x, P[G > x], P[G < -x])`` at each probe point."""
    dist = samples if isinstance(samples, EmpiricalDistribution) else EmpiricalDistribution(samples)
    return [(float(x), float(dist.tail_above(x)), float(dist.tail_below(x))) for x in probes]


def estimate_tail(samples, alpha: float | None = None, k: int | None = None, probes=None) -> TailEstimate:
    """Hill index plus x^alpha * P[G > x] at probe points (default: 0.99/0.999/0.9999 quantiles)."""
    x = np.sort(np.asarray(samples, dtype=float))
    k = int(math.floor(x.size**0.6)) if k is None else k
    alpha_hat = hill_estimator(x, k)
    a = alpha_hat if alpha is None else alpha
    if probes is None:
        probes = np.quantile(x[np.isfinite(x)], [0.99, 0.999, 0.9999])
    ratios = tuple((xp, xp**a * right) for xp, right, _ in tail_ratio(x, probes))
    return TailEstimate(alpha_hat, k, ratios)
