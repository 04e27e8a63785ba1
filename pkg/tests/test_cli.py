import json

import numpy as np
import pytest

from distbellman.classic import policy_iteration
from distbellman.cli import main
from distbellman.mrp import load_mdp

from conftest import fixture_path


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:  # argparse errors
        return exc.code


def report(capsys, *argv):
    code = run(*argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def fx(name):
    return fixture_path(name)


def test_validate_exit_codes(tmp_path, capsys):
    code, rep, _ = report(capsys, "validate", "--mdp", fx("swap.json"))
    assert code == 0 and rep["valid"]
    code, rep, err = report(capsys, "validate", "--mdp", fx("row_sum.json"))
    assert code == 1 and not rep["valid"]
    assert any(v["kind"] == "RowNotStochastic" for v in rep["violations"]["state"])
    assert "RowNotStochastic" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert run("validate", "--mdp", bad) == 2
    assert run("validate", "--mdp", tmp_path / "missing.json") == 2


def test_missing_policy_for_multi_action_mdp():
    assert run("validate", "--mdp", fx("toy_mdp.json")) == 2
    assert run("validate", "--mdp", fx("toy_mdp.json"), "--policy", fx("toy_policy.json")) == 0


def test_check_existence(capsys):
    code, rep, _ = report(capsys, "check-existence", "--mdp", fx("bounded.json"))
    assert code == 0 and rep["exists"]
    assert all(s["transfer"]["bound"] == pytest.approx(10.0) for s in rep["states"])
    code, rep, err = report(capsys, "check-existence", "--mdp", fx("superheavy_essential.json"))
    assert code == 3 and rep["offending_states"] == ["s"] and "no fixed point" in err
    code, rep, err = report(capsys, "check-existence", "--mdp", fx("superheavy_inessential.json"))
    assert code == 0 and rep["exists"] and rep["notes"] and "warning" in err
    code, rep, _ = report(capsys, "check-existence", "--mdp", fx("cauchy.json"))
    assert code == 0 and rep["exists"]


def test_evaluate_swap(capsys):
    code, rep, _ = report(capsys, "evaluate", "--mdp", fx("swap.json"))
    assert code == 0
    means = [s["mean"] for s in rep["states"]]
    h = rep["grid"]["spacing"]
    assert means == pytest.approx([4 / 3, 2 / 3], abs=2 * h)
    assert rep["convergence"]["converged"] and rep["config"]["grid_size"] == 1024


def test_evaluate_bernoulli_csv(tmp_path):
    out = tmp_path / "eta.csv"
    code = run(
        "evaluate", "--mdp", fx("bernoulli.json"), "--grid-size", 2048, "--grid-min", 0, "--grid-max", 2,
        "--format", "csv", "--output", out,
    )
    assert code == 0
    data = np.genfromtxt(out, delimiter=",", names=True, dtype=None, encoding="utf-8")
    assert list(data.dtype.names) == ["state", "support", "prob"]
    cdf = np.cumsum(data["prob"])
    assert np.max(np.abs(cdf - np.clip(data["support"] / 2, 0, 1))) <= 0.01
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["command"] == "evaluate" and side["convergence"]["converged"]


def test_evaluate_failure_codes(capsys):
    code, rep, _ = report(capsys, "evaluate", "--mdp", fx("bernoulli.json"), "--max-iter", 1)
    assert code == 4 and not rep["convergence"]["converged"]
    assert run("evaluate", "--mdp", fx("superheavy_essential.json")) == 3
    assert run("evaluate", "--mdp", fx("cauchy.json")) == 2  # unbounded grid needs --seed or explicit range
    assert run("evaluate", "--mdp", fx("swap.json"), "--tol", 0) == 2
    assert run("evaluate", "--mdp", fx("swap.json"), "--grid-size", 1) == 2


def test_values(tmp_path, capsys):
    one = tmp_path / "one.json"
    one.write_text(
        json.dumps(
            {
                "gamma": 0.5,
                "states": ["s"],
                "actions": ["a"],
                "transitions": {"s|a": [{"prob": 1.0, "next": "s", "reward": {"kind": "pointmass", "value": 1.0}}]},
            }
        )
    )
    code, rep, _ = report(capsys, "values", "--mdp", one)
    assert code == 0 and rep["v"]["s"] == pytest.approx(2.0)
    code, _, err = report(capsys, "values", "--mdp", fx("cauchy.json"))
    assert code == 5 and "mean" in err


def test_policy_iter_matches_library(capsys):
    code, rep, err = report(capsys, "policy-iter", "--mdp", fx("toy_mdp.json"))
    assert code == 0 and "round 1" in err
    res = policy_iteration(load_mdp(fx("toy_mdp.json")))
    assert rep["values"] == pytest.approx(res.values, abs=1e-12)
    assert rep["policy"] == {s: res.policy.action(s) for s in res.values}


def test_sampling_commands_need_seed():
    for cmd in ("mc", "affine-check"):
        assert run(cmd, "--mdp", fx("swap.json")) == 2
    assert run("tails", "--mdp", fx("pareto.json"), "--alpha", 1) == 2


def test_mc_and_byte_identical_reruns(tmp_path):
    a = tmp_path / "a.json"
    args = ["mc", "--mdp", fx("bounded.json"), "--seed", 5, "--samples", 5000]
    assert run(*args, "--output", a) == 0
    first = a.read_bytes()
    assert run(*args, "--output", a) == 0
    assert a.read_bytes() == first
    c = tmp_path / "c.json"
    assert run(*args, "--workers", 3, "--output", c) == 0
    strip = lambda p: {k: v for k, v in json.loads(p.read_text()).items() if k != "config"}  # noqa: E731
    assert strip(a) == strip(c)
    rep = json.loads(a.read_text())
    assert rep["config"]["seed"] == 5 and rep["config"]["view"] == "state"
    assert all(abs(q) <= 10 for s in rep["states"] for q in s["quantiles"].values())


def test_tails(capsys):
    code, rep, err = report(
        capsys, "tails", "--mdp", fx("pareto.json"), "--alpha", 1, "--seed", 0, "--samples", 200_000
    )
    assert code == 0
    (state,) = rep["states"]
    assert state["right_const"] == 2.0 and state["left_const"] == 0.0
    assert 0.7 <= state["empirical"]["hill_alpha"] <= 1.3
    assert "predicted right 2" in err
    assert run("tails", "--mdp", fx("mixed_alpha.json"), "--alpha", 1, "--seed", 0) == 6


def test_affine_check_swap(capsys):
    code, rep, _ = report(capsys, "affine-check", "--mdp", fx("swap.json"), "--seed", 1, "--samples", 2000)
    assert code == 0
    assert all(s["ks"] == 0.0 for s in rep["states"])
    assert rep["lyapunov"]["estimate"] == pytest.approx(np.log(0.5), abs=1e-15)
    assert rep["product_scale"] == 0.5**50


def test_state_action_view(capsys):
    code, rep, _ = report(
        capsys, "evaluate", "--mdp", fx("toy_mdp.json"), "--policy", fx("toy_policy.json"), "--view", "state-action",
        "--seed", 0,
    )
    assert code == 0 and all("|" in s["state"] for s in rep["states"])


def test_figures(tmp_path):
    figs = tmp_path / "figs"
    assert run("evaluate", "--mdp", fx("swap.json"), "--figures", figs, "--output", tmp_path / "r.json") == 0
    assert (figs / "evaluate_cdf.png").stat().st_size > 0
    assert (figs / "evaluate_gaps.png").stat().st_size > 0
    first = (figs / "evaluate_cdf.png").read_bytes()
    assert run("evaluate", "--mdp", fx("swap.json"), "--figures", figs, "--output", tmp_path / "r.json") == 0
    assert (figs / "evaluate_cdf.png").read_bytes() == first
