"""Acceptance criteria, one test each.

Every test records a single ``PASS``/``FAIL`` line; the lines are printed
together at the end of the pytest run (see conftest.py), or directly when
this file is run as a script.
"""

import math
import time

import numpy as np

from distbellman.affine import Independence, lyapunov_estimate, marginal_check, product_map, sample_pair
from distbellman.bellman import default_grid, solve_fixed_point
from distbellman.chain import existence_check, geometric_visit_weights, truncated_visit_weights
from distbellman.classic import enumerate_deterministic_policies, policy_iteration, solve_v
from distbellman.montecarlo import (
    divergence_diagnostic,
    empirical_return_vector,
    hill_estimator,
    sample_returns,
    tail_ratio,
)
from distbellman.mrp import PolicySpec, from_state_view, load_mdp
from distbellman.returns import AtomDistribution, Grid, ks_to_cdf, wasserstein
from distbellman.rng import blocks, stream
from distbellman.tails import predict_tails

from conftest import (
    ACCEPTANCE_LINES,
    bernoulli_system,
    fixture_path,
    fixture_system,
    random_bounded_system,
    random_stochastic,
)
from test_classic import random_mdp


def record(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def uniform02(x):
    return np.clip(np.asarray(x) / 2.0, 0.0, 1.0)


def test_1_uniform_fixed_point():
    start = time.perf_counter()
    eta, _ = solve_fixed_point(bernoulli_system(), grid=Grid(0.0, 2.0, 2048))
    ks_grid = ks_to_cdf(eta[0], uniform02)
    emp = empirical_return_vector(bernoulli_system(), 40, 100_000, seed=2024)
    ks_mc = ks_to_cdf(emp[0], uniform02)
    elapsed = time.perf_counter() - start
    ok = ks_grid <= 0.01 and ks_mc <= 0.01 and elapsed < 5.0
    assert record(1, "uniform fixed point", ok, f"KS grid {ks_grid:.2e}, KS MC {ks_mc:.2e}, {elapsed:.2f}s")


def test_2_deterministic_cycle():
    start = time.perf_counter()
    mdp = load_mdp(fixture_path("swap.json"))
    policy = PolicySpec.deterministic({s: "a" for s in mdp.states})
    mrs = from_state_view(mdp, policy)
    eta, _ = solve_fixed_point(mrs)
    h = eta.grid.spacing
    exact = (4 / 3, 2 / 3)
    d1 = [wasserstein(1, eta[i], AtomDistribution.point(exact[i])) for i in range(2)]
    v = solve_v(mdp, policy)
    v_err = max(abs(v["s1"] - exact[0]), abs(v["s2"] - exact[1]))
    mean_err = max(abs(m - v[s]) for m, s in zip(eta.means(), mdp.states))
    elapsed = time.perf_counter() - start
    ok = max(d1) <= 2 * h and v_err <= 1e-10 and mean_err <= 2 * h and elapsed < 1.0
    assert record(
        2,
        "deterministic cycle",
        ok,
        f"d1 {max(d1):.2e} (2h={2 * h:.2e}), |v-exact| {v_err:.1e}, |mean-v| {mean_err:.2e}, {elapsed:.2f}s",
    )


def test_3_existence_trichotomy():
    start = time.perf_counter()
    cauchy = fixture_system("cauchy.json")
    tol = 1e-8
    _, rep = solve_fixed_point(cauchy, tol=tol, max_iter=200, grid=default_grid(cauchy, seed=3))
    ok_a = existence_check(cauchy).exists and rep.converged and rep.gap_history[-1] <= tol

    ok_b = existence_check(fixture_system("superheavy_inessential.json")).exists

    heavy = fixture_system("superheavy_essential.json")
    flagged = sum(
        divergence_diagnostic(heavy, 0, 1000, stream(seed, 0)).suspected_divergence for seed in range(100)
    )
    ok_c = not existence_check(heavy).exists and flagged >= 95
    elapsed = time.perf_counter() - start
    ok = ok_a and ok_b and ok_c and elapsed < 30.0
    assert record(
        3,
        "existence trichotomy",
        ok,
        f"(a) converged in {rep.iterations} iterations, (b) exists={ok_b}, "
        f"(c) flagged {flagged}/100, {elapsed:.2f}s",
    )


def test_4_visit_weights():
    w = geometric_visit_weights([[0.0, 1.0], [1.0, 0.0]], 0.5, 1.0).w
    swap_err = float(np.max(np.abs(w - [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])))
    rng = np.random.default_rng(44)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 9))
        p = random_stochastic(rng, d)
        gamma, alpha = float(rng.uniform(0.1, 0.95)), float(rng.uniform(0.3, 3.0))
        g = gamma**alpha
        horizon = math.ceil(math.log(1e-14) / math.log(g))
        series = truncated_visit_weights(p, gamma, alpha, horizon)
        worst = max(worst, float(np.max(np.abs(geometric_visit_weights(p, gamma, alpha).w - series))))
    ok = swap_err <= 1e-12 and worst <= 1e-8
    assert record(4, "visit weights", ok, f"swap error {swap_err:.1e}, worst series gap {worst:.1e} over 100 systems")


def test_5_tail_constants():
    start = time.perf_counter()
    mrs = fixture_system("pareto.json")
    right = float(predict_tails(mrs, 1.0).right[0])
    x = np.concatenate([sample_returns(mrs, 0, 60, size, stream(5, 0, b)) for b, size in blocks(1_000_000)])
    alpha_hat = hill_estimator(x, int(x.size**0.6))
    probe = float(np.quantile(x, 0.999))
    ((_, tail, _),) = tail_ratio(x, [probe])
    ratio = probe * tail
    elapsed = time.perf_counter() - start
    ok = right == 2.0 and 0.85 <= alpha_hat <= 1.15 and 1.4 <= ratio <= 2.6 and elapsed < 90.0
    assert record(
        5,
        "tail constants",
        ok,
        f"rightConst {right!r}, Hill alpha {alpha_hat:.4f}, x*P[G>x] {ratio:.4f} at x={probe:.1f}, {elapsed:.2f}s",
    )


def test_6_property_transfer():
    mrs = fixture_system("bounded.json")
    emp = empirical_return_vector(mrs, None, 1_000_000, seed=6)
    extreme = max(float(np.max(np.abs(e.samples))) for e in emp)
    _, rep = solve_fixed_point(mrs, grid=Grid(-10.0, 10.0, 1024))
    ok = extreme <= 10.0 and rep.clamped_mass == 0.0
    assert record(6, "property transfer", ok, f"max |G| over 1e6 samples/state {extreme:.4f}, clamped mass {rep.clamped_mass}")


def test_7_contraction():
    rng = np.random.default_rng(77)
    failures, checked = 0, 0
    for _ in range(100):
        mrs = random_bounded_system(rng, int(rng.integers(1, 6)), gamma=float(rng.uniform(0.1, 0.95)))
        _, rep = solve_fixed_point(mrs, grid_size=512, max_iter=2000)
        h = default_grid(mrs, 512).spacing
        gaps = rep.gap_history
        for k in range(len(gaps) - 1):
            checked += 1
            failures += gaps[k + 1] > mrs.gamma * gaps[k] + 2 * h
    assert record(7, "contraction", failures == 0, f"{failures} failures over {checked} consecutive gap pairs")


def test_8_coupling_equivalence():
    rng = np.random.default_rng(88)
    coupling = Independence()
    worst_ks, row_failures, lyap_failures = 0.0, 0, 0
    for k in range(10):
        d = int(rng.integers(1, 5))
        mrs = random_bounded_system(rng, d, continuous=bool(k % 2))
        worst_ks = max(worst_ks, float(np.max(marginal_check(mrs, coupling, 100_000, 40, seed=k))))
        for n in (1, 2, 5, 17, 50):
            pr = stream(k, 10, n)
            dense = np.eye(d)
            for _ in range(n):
                dense = dense @ sample_pair(mrs, coupling, pr).J
            nonzero = dense != 0
            colmap, scale = product_map(mrs, coupling, n, stream(k, 10, n))
            row_failures += not (
                np.all(nonzero.sum(axis=1) == 1)
                and np.allclose(dense[nonzero], mrs.gamma**n, rtol=1e-12, atol=0)
                and np.array_equal(np.argmax(nonzero, axis=1), colmap)
                and scale == mrs.gamma**n
            )
        for n in (1, 10, 100, 1000):
            est = lyapunov_estimate(mrs, coupling, n, stream(k, 11, n))
            lg = math.log(mrs.gamma)
            lyap_failures += not (lg - 1e-12 <= est <= lg + math.log(math.sqrt(d)) / n + 1e-12)
    ok = worst_ks <= 0.02 and row_failures == 0 and lyap_failures == 0
    assert record(
        8,
        "coupling equivalence",
        ok,
        f"worst KS {worst_ks:.4f}, row-structure failures {row_failures}, Lyapunov failures {lyap_failures}",
    )


def test_9_policy_iteration():
    rng = np.random.default_rng(99)
    worst, non_monotone = 0.0, 0
    for _ in range(20):
        mdp = random_mdp(rng)
        res = policy_iteration(mdp)
        best = None
        for pol in enumerate_deterministic_policies(mdp):
            v = np.array([solve_v(mdp, pol)[s] for s in mdp.states])
            best = v if best is None else np.maximum(best, v)
        got = np.array([res.values[s] for s in mdp.states])
        worst = max(worst, float(np.max(np.abs(got - best))))
        hist = [np.array([h[s] for s in mdp.states]) for h in res.value_history]
        non_monotone += sum(bool(np.any(b < a - 1e-12)) for a, b in zip(hist, hist[1:]))
    ok = worst <= 1e-8 and non_monotone == 0
    assert record(9, "policy iteration", ok, f"worst gap to enumeration {worst:.1e}, non-monotone rounds {non_monotone}")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
