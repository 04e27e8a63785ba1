"""Return distributions of finite Markov decision processes.

Grid solver for the distributional Bellman equation, Monte Carlo and coupled
series samplers used as independent checks, existence and tail analysis of
the index chain, and ordinary policy evaluation and iteration.
"""

__version__ = "0.1.0"

from .bellman import ConvergenceReport, apply_operator, default_grid, iterate, solve_fixed_point
from .chain import classify, existence_check, geometric_visit_weights
from .classic import policy_iteration, reduce, solve_q, solve_v
from .mrp import MarkovRewardSystem, MDPSpec, PolicySpec, from_state_action_view, from_state_view, load_mdp, load_policy
from .montecarlo import empirical_return_vector, sample_returns
from .returns import Grid, ReturnVector, ks_distance, wasserstein
from .tails import predict_tails, transfer_bounds

__all__ = [
    "ConvergenceReport",
    "Grid",
    "MDPSpec",
    "MarkovRewardSystem",
    "PolicySpec",
    "ReturnVector",
    "apply_operator",
    "classify",
    "default_grid",
    "empirical_return_vector",
    "existence_check",
    "from_state_action_view",
    "from_state_view",
    "geometric_visit_weights",
    "iterate",
    "ks_distance",
    "load_mdp",
    "load_policy",
    "policy_iteration",
    "predict_tails",
    "reduce",
    "sample_returns",
    "solve_fixed_point",
    "solve_q",
    "solve_v",
    "transfer_bounds",
    "wasserstein",
]
