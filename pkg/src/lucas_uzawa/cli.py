"""
Command line driver: ``check | solve | simulate | transform | sweep``.

Exit codes: 0 ok, 2 assumption failure, 3 numeric non-convergence,
4 input error (bad config, missing artifacts).
"""
import argparse
import json
import math
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from . import config as cfg
from . import paths, solver, verify
from .fields import GridSpec, PolicyField, ValueField
from .primitives import Technology
from .tables import format_value, read_csv, write_csv

OK, ASSUMPTION_FAILURE, NON_CONVERGENCE, INPUT_ERROR = 0, 2, 3, 4

VALUE_HEADER = ("k", "h", "V")
POLICY_HEADER = ("k", "h", "V", "k_next", "h_next", "c", "u", "v")
PATH_HEADER = ("t", "k", "h", "c", "u", "v", "utility", "discounted_V")
SWEEP_HEADER = ("parameter", "value", "overall", "betacond", "beta_zeta", "zeta",
                "failures", "converged", "V_at_1_1")
TRANSFORM_HEADER = ("k", "h", "hhat", "V_direct", "V_transformed", "rel_gap")


def _out_dir(config):
    os.makedirs(config.run.out, exist_ok=True)
    return config.run.out


def _write(config, name, text):
    with open(os.path.join(_out_dir(config), name), "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_check(config):
    report = verify.check_all(config.params(), config.run.sample_count, config.run.seed)
    text = report.to_text()
    _write(config, "report.txt", text)
    _write(config, "report.json", report.to_json() + "\n")
    sys.stdout.write(text)
    return OK if report.all_pass else ASSUMPTION_FAILURE


def _gate(params):
    consts = verify.compute_constants(params)
    if consts.beta_zeta < 1.0:
        return None
    return f"betacond fails: beta*zeta = {consts.beta_zeta!r}; refusing to solve"


def _write_solution(config, result):
    out = _out_dir(config)
    rows = result.node_rows()
    write_csv(os.path.join(out, "value.csv"), VALUE_HEADER, [r[:3] for r in rows])
    write_csv(os.path.join(out, "policy.csv"), POLICY_HEADER, rows)
    diag = result.diagnostics()
    diag["scale_power"] = result.value.scale_power
    diag["theta"] = result.value.theta
    _write(config, "diagnostics.json", json.dumps(diag, indent=2, sort_keys=True) + "\n")


def cmd_solve(config):
    params = config.params()
    refusal = _gate(params)
    if refusal:
        print(refusal, file=sys.stderr)
        return ASSUMPTION_FAILURE
    result = solver.solve_value_iteration(params, config.grid_spec(), config.solve_options())
    _write_solution(config, result)
    print(f"iterations {result.iterations}  sup change {result.final_sup_change!r}  "
          f"converged {result.converged}")
    return OK if result.converged else NON_CONVERGENCE


def load_solution(out_dir):
    """Rebuild value and policy fields from ``value.csv``/``policy.csv``
    and ``diagnostics.json`` written by ``solve``."""
    files = [os.path.join(out_dir, n) for n in ("policy.csv", "diagnostics.json")]
    missing = [f for f in files if not os.path.exists(f)]
    if missing:
        raise FileNotFoundError(", ".join(missing))
    rows = read_csv(files[0])
    with open(files[1], encoding="utf-8") as fh:
        diag = json.load(fh)
    k_nodes = np.unique([r["k"] for r in rows])
    h_nodes = np.unique([r["h"] for r in rows])
    grid = GridSpec(k_nodes, h_nodes)
    shape = grid.shape

    def column(name):
        return np.array([r[name] for r in rows]).reshape(shape)

    value = ValueField(grid, column("V"), diag["theta"], diag["scale_power"],
                       diag["horizon_weight"], diag["edge"])
    policy = PolicyField(grid, column("k_next"), column("h_next"), column("c"),
                         column("u"), diag["scale_power"], diag["edge"])
    return value, policy


def path_rows(path, params, value=None):
    disc = [None] * len(path.states)
    if value is not None:
        V = np.asarray(value(path.k, path.h), dtype=float)
        disc = list(params.beta ** np.arange(V.size) * V)
    rows = []
    for t, state in enumerate(path.states):
        ctrl = path.controls[t] if t < path.periods else (None, None, None)
        util = path.utility[t] if t < path.periods else None
        rows.append((t, state.k, state.h, *ctrl, util, disc[t]))
    return rows


def cmd_simulate(config, start=None, horizon=None):
    params = config.params()
    try:
        value, policy = load_solution(config.run.out)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"missing or unreadable solve artifacts: {exc}", file=sys.stderr)
        return INPUT_ERROR
    start = start or (config.simulate.start_k, config.simulate.start_h)
    horizon = horizon or config.simulate.horizon
    try:
        path = paths.simulate(policy, start, horizon, params)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return INPUT_ERROR
    write_csv(os.path.join(_out_dir(config), "path.csv"), PATH_HEADER,
              path_rows(path, params, value))
    growth = paths.growth_diagnostics(path)
    print(f"periods {path.periods}  classification {growth.classification}  "
          f"g_k {growth.g_k!r}  g_h {growth.g_h!r}  hull exits {path.hull_exits}  "
          f"projections {path.projections}")
    return OK


def transform_comparison(params, grid, options):
    """Solve directly and in ``hhat = h**rho``; compare on shared nodes."""
    direct = solver.solve_value_iteration(params, grid, options)
    hat_grid = GridSpec(grid.k_nodes, grid.h_nodes**params.rho)
    hat = solver.solve_value_iteration(params, hat_grid, options, transformed=True)
    K, H = grid.mesh()
    a, b = direct.value.values, hat.value.values
    with np.errstate(invalid="ignore"):
        gap = np.abs(a - b) / np.maximum(1.0, np.abs(a))
    rows = [(K.flat[i], H.flat[i], H.flat[i] ** params.rho, a.flat[i], b.flat[i], gap.flat[i])
            for i in range(K.size)]
    interior = grid.interior_mask()
    max_gap = float(np.nanmax(gap[interior])) if np.any(interior) else float(np.nanmax(gap))
    return direct, hat, rows, max_gap


def cmd_transform(config):
    params = config.params()
    refusal = _gate(params)
    if refusal:
        print(refusal, file=sys.stderr)
        return ASSUMPTION_FAILURE
    direct, hat, rows, max_gap = transform_comparison(
        params, config.grid_spec(), config.solve_options())
    write_csv(os.path.join(_out_dir(config), "transform.csv"), TRANSFORM_HEADER, rows)
    summary = {
        "gamma": params.gamma,
        "rho": params.rho,
        "max_interior_relative_gap": max_gap,
        "direct": direct.diagnostics(),
        "transformed": hat.diagnostics(),
    }
    _write(config, "diagnostics.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"gamma {params.gamma!r}  rho {params.rho!r}  "
          f"max interior relative gap {max_gap!r}")
    converged = direct.converged and hat.converged
    return OK if converged else NON_CONVERGENCE


def cmd_sweep(config):
    sweep = config.sweep
    rows = []
    for x in sweep.values:
        params = config.params(**{sweep.parameter: x})
        report = verify.check_all(params, config.run.sample_count, config.run.seed)
        status = report.verdicts["betacond"].status
        converged = v11 = None
        if sweep.solve and status == verify.PASS:
            res = solver.solve_value_iteration(params, config.grid_spec(), config.solve_options())
            converged, v11 = res.converged, res.value(1.0, 1.0)
        rows.append((sweep.parameter, x, "pass" if report.all_pass else "fail", status,
                     report.beta_zeta, report.zeta, " ".join(report.failures),
                     converged, v11))
    write_csv(os.path.join(_out_dir(config), "sweep.csv"), SWEEP_HEADER, rows)
    for row in rows:
        print("  ".join(format_value(x) for x in row[:6]))
    return OK


def _pair(text):
    try:
        k, h = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected k,h") from None
    return k, h


def build_parser():
    parser = argparse.ArgumentParser(prog="lucas-uzawa", description=__doc__.strip().splitlines()[0])
    parser.add_argument("command", choices=("check", "solve", "simulate", "transform", "sweep"))
    parser.add_argument("--config", help="flat section.key = value file")
    parser.add_argument("--out", help="output directory (overrides run.out)")
    parser.add_argument("--seed", type=int, help="sampling seed (overrides run.seed)")
    parser.add_argument("--start", type=_pair, help="simulation start as k,h")
    parser.add_argument("--horizon", type=int, help="simulation periods")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else INPUT_ERROR
    try:
        config = cfg.load(args.config) if args.config else cfg.RunConfig()
    except (OSError, cfg.ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    changes = {}
    if args.out:
        changes["out"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        config = config.with_run(**changes)
    if args.horizon is not None and args.horizon < 1:
        print("--horizon must be positive", file=sys.stderr)
        return INPUT_ERROR
    if args.command == "simulate":
        return cmd_simulate(config, args.start, args.horizon)
    return {"check": cmd_check, "solve": cmd_solve, "transform": cmd_transform,
            "sweep": cmd_sweep}[args.command](config)


if __name__ == "__main__":
    sys.exit(main())
