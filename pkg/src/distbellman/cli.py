"""Command-line front end.

Every command reads an MDP (and usually a policy) from JSON, runs one
analysis and writes a report.  JSON reports have sorted keys and carry the
fully resolved configuration; with ``--format csv`` the command's table is
written instead, and when ``--output`` is a file the JSON report is written
next to it with a ``.json`` suffix.  ``--figures DIR`` additionally renders
PNG figures for the commands that produce distributions.

Exit codes: 0 ok, 1 invariant violation, 2 parse error, 3 no fixed point,
4 not converged, 5 undefined mean, 6 tail-index incompatibility.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affine import Independence, lyapunov_estimate, marginal_check, product_map
from .bellman import DEFAULT_GRID_SIZE, DEFAULT_REWARD_ATOMS, default_grid, solve_fixed_point
from .chain import existence_check
from .classic import improve, policy_iteration, solve_q, solve_v
from .errors import (
    FormatError,
    IncompatibleTailIndex,
    InsufficientTailSamples,
    NoFixedPoint,
    NoHeavyState,
    NotConverged,
    PolicyIncomplete,
    UndefinedMean,
)
from .montecarlo import default_horizon, empirical_return_vector, estimate_tail
from .mrp import PolicySpec, from_state_action_view, from_state_view, load_mdp, load_policy, validate
from .returns import Grid
from .rng import stream
from .tails import predict_tails, transfer_bounds

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_PARSE = 2
EXIT_NO_FIXED_POINT = 3
EXIT_NOT_CONVERGED = 4
EXIT_UNDEFINED_MEAN = 5
EXIT_TAIL_INDEX = 6

SAMPLING_COMMANDS = {"mc", "tails", "affine-check"}


# -- output helpers -------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _table_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _emit(args, report: dict, table: tuple | None = None) -> None:
    """Write the report (json) or the table (csv) to --output or stdout."""
    report = {"command": args.command, "config": resolved_config(args), **report}
    if args.format == "csv" and table is not None:
        text = _table_text(*table)
        if args.output:
            out = Path(args.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text, encoding="utf-8")
            out.with_suffix(".json").write_text(dumps(report), encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    text = dumps(report)
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def resolved_config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- loading --------------------------------------------------------------------


def _load_policy(args, mdp):
    if args.policy:
        return load_policy(args.policy)
    if all(len(mdp.available(s)) == 1 for s in mdp.states):
        return PolicySpec.deterministic({s: mdp.available(s)[0] for s in mdp.states})
    raise PolicyIncomplete("--policy is required when some state has several actions")


def _load_system(args):
    mdp = load_mdp(args.mdp)
    policy = _load_policy(args, mdp)
    view = from_state_action_view if args.view == "state-action" else from_state_view
    return mdp, policy, view(mdp, policy)


def _horizon(args, mrs) -> int:
    return default_horizon(mrs) if args.horizon is None else args.horizon


# -- commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    mdp = load_mdp(args.mdp, strict=False)
    policy = _load_policy(args, mdp)
    found = {}
    for name, view in (("state", from_state_view), ("state-action", from_state_action_view)):
        found[name] = [
            {"kind": v.kind, "i": v.i, "j": v.j, "detail": v.detail} for v in validate(view(mdp, policy))
        ]
    for name, viols in found.items():
        for v in viols:
            _note(f"{name} view: {v['kind']} i={v['i']} j={v['j']} {v['detail']}".rstrip())
    rows = [(name, v["kind"], v["i"], v["j"], v["detail"]) for name, viols in found.items() for v in viols]
    ok = not rows
    _emit(args, {"valid": ok, "violations": found}, (["view", "kind", "i", "j", "detail"], rows))
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_check_existence(args) -> int:
    _, _, mrs = _load_system(args)
    rep = existence_check(mrs)
    states, notes = [], []
    for i, lab in enumerate(mrs.labels):
        tr = transfer_bounds(mrs, i)
        states.append(
            {
                "state": lab,
                "essential": rep.essential[i],
                "log_moment_finite": rep.per_state_log_moment[i],
                "offending": i in rep.offending_states,
                "transfer": tr.to_json(),
            }
        )
        if not rep.essential[i] and not rep.per_state_log_moment[i]:
            notes.append(f"state {lab} has infinite E log+|R| but is inessential; it does not block existence")
    for n in notes:
        _note(f"warning: {n}")
    offending = [mrs.labels[i] for i in rep.offending_states]
    if offending:
        _note(f"no fixed point: infinite E log+|R| on essential states {offending}")
    rows = [(s["state"], s["essential"], s["log_moment_finite"], s["offending"]) for s in states]
    _emit(
        args,
        {"exists": rep.exists, "offending_states": offending, "states": states, "notes": notes},
        (["state", "essential", "log_moment_finite", "offending"], rows),
    )
    return EXIT_OK if rep.exists else EXIT_NO_FIXED_POINT


def _grid_from_args(args, mrs):
    if args.grid_min is not None or args.grid_max is not None:
        if args.grid_min is None or args.grid_max is None:
            raise FormatError("--grid-min and --grid-max must be given together")
        return Grid(args.grid_min, args.grid_max, args.grid_size)
    laws = [mrs.reward_law(i) for i in range(mrs.d)]
    if not all(law.is_bounded for law in laws) and args.seed is None:
        raise FormatError("unbounded rewards: pass --seed (pilot run sizes the grid) or --grid-min/--grid-max")
    return default_grid(mrs, args.grid_size, args.seed)


def cmd_evaluate(args) -> int:
    _, _, mrs = _load_system(args)
    grid = _grid_from_args(args, mrs) if existence_check(mrs).exists else None
    code = EXIT_OK
    try:
        eta, conv = solve_fixed_point(
            mrs, tol=args.tol, max_iter=args.max_iter, grid=grid, n_reward_atoms=args.reward_atoms
        )
    except NotConverged as exc:
        _note(f"not converged: {exc}")
        eta, conv, code = exc.result, exc.report, EXIT_NOT_CONVERGED
    means = eta.means()
    states = [
        {"state": lab, "mean": m, "quantiles": _quantiles(dist)}
        for lab, m, dist in zip(mrs.labels, means, eta)
    ]
    report = {
        "grid": {"x_min": grid.x_min, "x_max": grid.x_max, "n": grid.n, "spacing": grid.spacing},
        "states": states,
        "convergence": conv.to_json(),
    }
    x = grid.points
    rows = [(lab, xv, pv) for lab, dist in zip(mrs.labels, eta) for xv, pv in zip(x, dist.probs)]
    _emit(args, report, (["state", "support", "prob"], rows))
    if args.figures:
        from .plotting import plot_cdfs, plot_gap_history

        plot_cdfs(eta, mrs.labels, Path(args.figures) / "evaluate_cdf.png", "fixed point CDFs")
        plot_gap_history(conv.gap_history, Path(args.figures) / "evaluate_gaps.png", mrs.gamma)
    return code


QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


def _quantiles(dist) -> dict:
    return {f"{u:g}": float(dist.quantile(u)) for u in QUANTILE_LEVELS}


def cmd_values(args) -> int:
    mdp = load_mdp(args.mdp)
    policy = _load_policy(args, mdp)
    v = solve_v(mdp, policy)
    q = solve_q(mdp, policy)
    rows = [("v", s, "", v[s]) for s in mdp.states] + [("q", s, a, q[(s, a)]) for s, a in mdp.pairs()]
    report = {
        "v": v,
        "q": [{"state": s, "action": a, "value": q[(s, a)]} for s, a in mdp.pairs()],
        "greedy_policy": improve(mdp, q).probs,
    }
    _emit(args, report, (["table", "state", "action", "value"], rows))
    return EXIT_OK


def cmd_policy_iter(args) -> int:
    mdp = load_mdp(args.mdp)
    init = load_policy(args.policy) if args.policy else None
    res = policy_iteration(mdp, init)
    for k, vals in enumerate(res.value_history, 1):
        _note(f"round {k}: " + ", ".join(f"{s}={vals[s]:.10g}" for s in mdp.states))
    report = {
        "policy": {s: res.policy.action(s) for s in mdp.states},
        "values": res.values,
        "iterations": res.iterations,
        "value_history": res.value_history,
    }
    rows = [(k, s, vals[s]) for k, vals in enumerate(res.value_history, 1) for s in mdp.states]
    _emit(args, report, (["round", "state", "value"], rows))
    return EXIT_OK


def _sample_summary(dist) -> dict:
    x = dist.samples
    finite = x[np.isfinite(x)]
    return {
        "n": int(x.size),
        "mean": float(np.mean(finite)) if finite.size else math.nan,
        "std": float(np.std(finite)) if finite.size else math.nan,
        "non_finite": int(x.size - finite.size),
        "quantiles": _quantiles(dist),
    }


def cmd_mc(args) -> int:
    _, _, mrs = _load_system(args)
    T = _horizon(args, mrs)
    emp = empirical_return_vector(mrs, T, args.samples, args.seed, workers=args.workers)
    states = []
    for lab, dist in zip(mrs.labels, emp):
        entry = {"state": lab, **_sample_summary(dist)}
        try:
            est = estimate_tail(dist.samples)
            entry["hill_alpha"] = est.alpha_hat
            entry["hill_k"] = est.k
        except InsufficientTailSamples:
            entry["hill_alpha"] = None
        states.append(entry)
    rows = [(lab, x) for lab, dist in zip(mrs.labels, emp) for x in dist.samples]
    _emit(args, {"horizon": T, "states": states}, (["state", "sample"], rows))
    if args.figures:
        from .plotting import plot_cdfs

        plot_cdfs(emp, mrs.labels, Path(args.figures) / "mc_cdf.png", "empirical return CDFs")
    return EXIT_OK


def cmd_tails(args) -> int:
    _, _, mrs = _load_system(args)
    rep = predict_tails(mrs, args.alpha)
    out = rep.to_json(list(mrs.labels))
    T = _horizon(args, mrs)
    out["horizon"] = T
    rows = []
    emp = empirical_return_vector(mrs, T, args.samples, args.seed, workers=args.workers) if args.samples else None
    for i, entry in enumerate(out["states"]):
        if emp is None:
            rows.append((entry["state"], entry["right_const"], entry["left_const"], "", "", ""))
            continue
        samples = emp[i].samples
        try:
            est = estimate_tail(samples, alpha=args.alpha)
        except InsufficientTailSamples as exc:
            entry["empirical"] = {"error": str(exc)}
            continue
        entry["empirical"] = {
            "hill_alpha": est.alpha_hat,
            "hill_k": est.k,
            "ratios": [{"x": x, "x_alpha_tail": r} for x, r in est.ratios],
        }
        _note(
            f"state {entry['state']}: predicted right {entry['right_const']:.6g}, Hill alpha {est.alpha_hat:.4g}, "
            + ", ".join(f"x^a P[G>x]={r:.4g} at x={x:.4g}" for x, r in est.ratios)
        )
        for x, r in est.ratios:
            rows.append((entry["state"], entry["right_const"], entry["left_const"], est.alpha_hat, x, r))
    _emit(args, out, (["state", "right_const", "left_const", "hill_alpha", "probe_x", "empirical_ratio"], rows))
    if args.figures and emp is not None:
        from .plotting import plot_tail

        for i, lab in enumerate(mrs.labels):
            plot_tail(emp[i].samples, Path(args.figures) / f"tail_{i}.png", args.alpha, float(rep.right[i]))
    return EXIT_OK


def cmd_affine_check(args) -> int:
    _, _, mrs = _load_system(args)
    coupling = Independence()
    T = _horizon(args, mrs)
    ks = marginal_check(mrs, coupling, args.samples, T, args.seed)
    n = args.lyapunov_steps
    lyap = lyapunov_estimate(mrs, coupling, n, stream(args.seed, 2))
    colmap, scale = product_map(mrs, coupling, min(n, 50), stream(args.seed, 3))
    report = {
        "horizon": T,
        "coupling": coupling.name,
        "states": [{"state": lab, "ks": float(k)} for lab, k in zip(mrs.labels, ks)],
        "lyapunov": {
            "estimate": lyap,
            "log_gamma": math.log(mrs.gamma),
            "bound": 0.5 * math.log(mrs.d) / n,
            "steps": n,
        },
        "product_column_map": colmap.tolist(),
        "product_scale": scale,
    }
    _emit(args, report, (["state", "ks"], list(zip(mrs.labels, ks))))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _positive_float(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _grid_size(text: str) -> int:
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError("grid size must be at least 2")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distbellman", description="Return distributions of Markov decision processes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mdp", required=True, help="MDP JSON file")
    common.add_argument("--policy", help="policy JSON file (optional when every state has one action)")
    common.add_argument("--view", choices=("state", "state-action"), default="state")
    common.add_argument("--output", help="write the report/table here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--figures", help="directory for PNG figures")
    common.add_argument("--seed", type=int, help="master seed; required by sampling commands")
    common.add_argument("--workers", type=int, default=1)

    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check MDP/policy files and both reductions")
    add("check-existence", cmd_check_existence, "log-moment existence criterion per state")

    p = add("evaluate", cmd_evaluate, "solve the distributional Bellman equation on a grid")
    p.add_argument("--grid-size", type=_grid_size, default=DEFAULT_GRID_SIZE)
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--reward-atoms", type=int, default=DEFAULT_REWARD_ATOMS)

    add("values", cmd_values, "ordinary state and state-action values")
    add("policy-iter", cmd_policy_iter, "policy iteration from --policy (default: first actions)")

    for name, func, text in (
        ("mc", cmd_mc, "Monte Carlo return samples"),
        ("tails", cmd_tails, "predicted tail constants beside Monte Carlo estimates"),
        ("affine-check", cmd_affine_check, "coupled-series marginals and Lyapunov estimate"),
    ):
        p = add(name, func, text)
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--horizon", type=int, help="truncation horizon (default: from the reward bounds)")
        if name == "tails":
            p.add_argument("--alpha", type=_positive_float, required=True)
        if name == "affine-check":
            p.add_argument("--lyapunov-steps", type=int, default=1000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in SAMPLING_COMMANDS and args.seed is None:
        parser.error(f"{args.command} needs --seed")
    try:
        return args.func(args)
    except (FormatError, PolicyIncomplete) as exc:
        _note(f"error: {exc}")
        return EXIT_PARSE
    except NoFixedPoint as exc:
        _note(f"error: {exc}")
        return EXIT_NO_FIXED_POINT
    except UndefinedMean as exc:
        _note(f"error: {exc}")
        return EXIT_UNDEFINED_MEAN
    except (IncompatibleTailIndex, NoHeavyState) as exc:
        _note(f"error: {exc}")
        return EXIT_TAIL_INDEX


if __name__ == "__main__":
    sys.exit(main())
