from pathlib import Path

import numpy as np
import pytest

from distbellman.mrp import MarkovRewardSystem, PolicySpec, from_state_view, load_mdp
from distbellman.reward_dists import DiscreteAtoms, PointMass, Uniform

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def fixture_system(name: str, policy=None) -> MarkovRewardSystem:
    """State-view system of a fixture MDP (first action everywhere unless a policy is given)."""
    mdp = load_mdp(fixture_path(name))
    if policy is None:
        policy = PolicySpec.deterministic({s: mdp.available(s)[0] for s in mdp.states})
    return from_state_view(mdp, policy)


def swap_system(gamma=0.5, r12=PointMass(1.0), r21=PointMass(0.0)) -> MarkovRewardSystem:
    p = [[0.0, 1.0], [1.0, 0.0]]
    mu = [[PointMass(0.0), r12], [r21, PointMass(0.0)]]
    return MarkovRewardSystem(gamma, p, mu)


def bernoulli_system(gamma=0.5) -> MarkovRewardSystem:
    return MarkovRewardSystem(gamma, [[1.0]], [[DiscreteAtoms(((0.0, 0.5), (1.0, 0.5)))]])


def random_stochastic(rng, d, sparsity=0.4) -> np.ndarray:
    p = rng.random((d, d)) * (rng.random((d, d)) > sparsity)
    for i in range(d):
        if p[i].sum() == 0:
            p[i, rng.integers(d)] = 1.0
    p /= p.sum(axis=1, keepdims=True)
    return p


def random_bounded_system(rng, d, gamma=None, continuous=False) -> MarkovRewardSystem:
    """Random system with rewards in [-1, 1]: discrete atoms, or uniforms when ``continuous``."""
    p = random_stochastic(rng, d)
    gamma = float(rng.uniform(0.2, 0.8)) if gamma is None else gamma
    mu = [[PointMass(0.0)] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            if p[i, j] > 0:
                if continuous:
                    lo = float(rng.uniform(-1.0, 0.5))
                    mu[i][j] = Uniform(lo, float(rng.uniform(lo + 0.1, 1.0)))
                else:
                    vals = np.round(np.sort(rng.choice(np.linspace(-1, 1, 9), size=2, replace=False)), 6)
                    w = float(rng.uniform(0.2, 0.8))
                    mu[i][j] = DiscreteAtoms(((float(vals[0]), w), (float(vals[1]), 1.0 - w)))
    return MarkovRewardSystem(gamma, p, mu)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
