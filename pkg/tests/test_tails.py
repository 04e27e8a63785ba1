import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distbellman.chain import geometric_visit_weights
from distbellman.errors import IncompatibleTailIndex, NoHeavyState
from distbellman.montecarlo import empirical_return_vector, tail_ratio
from distbellman.mrp import MarkovRewardSystem
from distbellman.reward_dists import (
    Cauchy,
    Exponential,
    Normal,
    PointMass,
    Supremum,
    TwoSidedPareto,
    Uniform,
)
from distbellman.tails import predict_tails, transfer_bounds, validate_reg_var_inputs

from conftest import random_stochastic

SWAP = [[0.0, 1.0], [1.0, 0.0]]


def per_state(p, laws, gamma=0.5):
    """System whose reward depends only on the departing state."""
    d = len(laws)
    return MarkovRewardSystem(gamma, p, [[laws[i]] * d for i in range(d)])


def test_validate_examples():
    descs = validate_reg_var_inputs(per_state(SWAP, [TwoSidedPareto(1.5, 2.0)] * 2), 1.5)
    assert [d.c for d in descs] == pytest.approx([2.0**1.5] * 2)
    descs = validate_reg_var_inputs(per_state(SWAP, [TwoSidedPareto(1.0, 3.0), Normal(0.0, 1.0)]), 1.0)
    assert [d.c for d in descs] == [3.0, 0.0]
    with pytest.raises(IncompatibleTailIndex) as info:
        validate_reg_var_inputs(per_state(SWAP, [TwoSidedPareto(0.5, 1.0), Normal(0.0, 1.0)]), 1.0)
    assert info.value.state == 0
    with pytest.raises(NoHeavyState):
        validate_reg_var_inputs(per_state(SWAP, [Normal(0.0, 1.0)] * 2), 1.0)
    with pytest.raises(ValueError):
        validate_reg_var_inputs(per_state(SWAP, [TwoSidedPareto(1.0, 1.0)] * 2), 0.0)


def test_validate_ignores_unreachable_states():
    funnel = [[0.0, 1.0], [0.0, 1.0]]
    mrs = per_state(funnel, [Cauchy(0.0, 1.0), TwoSidedPareto(2.0, 1.0)])
    with pytest.raises(IncompatibleTailIndex):
        validate_reg_var_inputs(mrs, 2.0)
    descs = validate_reg_var_inputs(mrs, 2.0, starts=[1])
    assert descs[0] is None and descs[1].c == 1.0


def test_predict_examples():
    rep = predict_tails(MarkovRewardSystem(0.5, [[1.0]], [[TwoSidedPareto(1.0, 1.0, 1.0)]]), 1.0)
    assert rep.per_state == [(2.0, 0.0)]

    alpha = 1.0  # gamma = 1/2 gives gamma^alpha = 1/2
    rep = predict_tails(per_state(SWAP, [TwoSidedPareto(alpha, 1.0, 1.0), Uniform(-1.0, 1.0)]), alpha)
    assert rep.right == pytest.approx([4 / 3, 2 / 3], abs=1e-12)
    assert np.all(rep.left == 0.0)

    rng = np.random.default_rng(0)
    p = random_stochastic(rng, 4)
    laws = [TwoSidedPareto(1.3, float(s), 0.5) for s in rng.uniform(0.5, 2.0, 4)]
    rep = predict_tails(per_state(p, laws, 0.8), 1.3)
    assert np.array_equal(rep.right, rep.left)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(0.2, 3.0),
    scale=st.floats(0.1, 10.0),
    q=st.floats(0.0, 1.0),
    gamma=st.floats(0.05, 0.95),
)
def test_single_state_reproduces_perpetuity_constant(alpha, scale, q, gamma):
    law = TwoSidedPareto(alpha, scale, q)
    if law.reg_var(alpha).c == 0.0:
        return
    ((right, left),) = predict_tails(MarkovRewardSystem(gamma, [[1.0]], [[law]]), alpha).per_state
    c = law.reg_var(alpha).c
    assert right == pytest.approx(q * c / (1 - gamma**alpha), rel=1e-12, abs=1e-300)
    assert left == pytest.approx((1 - q) * c / (1 - gamma**alpha), rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.integers(1, 6), lam=st.floats(0.1, 10.0))
def test_scale_equivariance_and_total(seed, d, lam):
    rng = np.random.default_rng(seed)
    p = random_stochastic(rng, d)
    gamma = float(rng.uniform(0.1, 0.95))
    alpha = 1.5
    scales = rng.uniform(0.5, 2.0, d)
    qs = rng.uniform(0, 1, d)
    base = predict_tails(per_state(p, [TwoSidedPareto(alpha, s, q) for s, q in zip(scales, qs)], gamma), alpha)
    # c = scale^alpha, so scaling by lam^(1/alpha) multiplies c by lam
    k = lam ** (1 / alpha)
    scaled = predict_tails(
        per_state(p, [TwoSidedPareto(alpha, s * k, q) for s, q in zip(scales, qs)], gamma), alpha
    )
    assert scaled.right == pytest.approx(lam * base.right, rel=1e-9)
    assert scaled.left == pytest.approx(lam * base.left, rel=1e-9)
    w = geometric_visit_weights(p, gamma, alpha).w
    c = scales**alpha
    assert base.right + base.left == pytest.approx(w @ c / (1 - gamma**alpha), rel=1e-12)


def test_mixture_of_lighter_and_heavy_component():
    from distbellman.reward_dists import Mixture

    law = Mixture(((0.25, TwoSidedPareto(1.0, 2.0, 1.0)), (0.75, Normal(0.0, 1.0))))
    ((right, left),) = predict_tails(MarkovRewardSystem(0.5, [[1.0]], [[law]]), 1.0).per_state
    assert right == pytest.approx(0.25 * 2.0 / 0.5) and left == 0.0


def test_report_json():
    rep = predict_tails(per_state(SWAP, [TwoSidedPareto(1.0, 1.0), PointMass(0.0)]), 1.0)
    out = rep.to_json(["s1", "s2"])
    assert out["alpha"] == 1.0 and [s["state"] for s in out["states"]] == ["s1", "s2"]
    assert np.allclose(out["weights"], [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])


def test_transfer_examples():
    rep = transfer_bounds(per_state([[0.5, 0.5], [0.5, 0.5]], [Uniform(-1.0, 1.0), PointMass(-1.0)], 0.9), 0)
    assert rep.bound == pytest.approx(10.0)

    rep = transfer_bounds(per_state(SWAP, [Normal(0.0, 1.0), Exponential(2.0)]), 0)
    assert rep.bound is None and rep.exp_beta_sup == Supremum(2.0, False)

    rep = transfer_bounds(per_state(SWAP, [Cauchy(0.0, 1.0), PointMass(0.0)]), 1)
    assert rep.p_moment_sup == Supremum(1.0, False) and rep.bound is None and rep.exp_beta_sup is None
    assert rep.to_json()["p_moment_sup"] == {"value": 1.0, "inclusive": False}


def test_transfer_only_sees_reachable_states():
    funnel = [[0.0, 1.0], [0.0, 1.0]]
    rep = transfer_bounds(per_state(funnel, [Cauchy(0.0, 1.0), Uniform(0.0, 2.0)], 0.5), 1)
    assert rep.bound == 4.0 and math.isinf(rep.p_moment_sup.value)


@pytest.mark.slow
def test_swap_tails_match_simulation():
    mrs = per_state(SWAP, [TwoSidedPareto(1.0, 1.0, 1.0), Uniform(-1.0, 1.0)])
    pred = predict_tails(mrs, 1.0)
    emp = empirical_return_vector(mrs, 60, 400_000, seed=11)
    for i in range(2):
        x = float(np.quantile(emp[i].samples, 0.999))
        ((_, right, _),) = tail_ratio(emp[i].samples, [x])
        assert x * right == pytest.approx(pred.right[i], rel=0.3)
