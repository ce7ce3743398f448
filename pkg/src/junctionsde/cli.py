"""Command line interface: ``junctionsde <command> --config FILE [options]``.

Commands
--------
validate     sampled check of the coefficient assumptions and the test functions
simulate     simulate ``n_paths`` trajectories and write them with a manifest
localtime    local-time estimators on an ensemble, with estimator comparisons
ito          Ito-formula residuals and zero-mean tests
experiment   run the named experiment of the config file
report       print the checks of one or more ``summary.json`` files

The default worker count comes from the ``JUNCTIONSDE_WORKERS`` environment
variable (1 when unset).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load
from .engine import WORKERS_ENV, run_ensemble, simulate_batch, simulate_delta_path, write_ensemble
from .experiments import ExperimentConfig, run_experiment, sim_from_raw
from .ito import (CATALOG, MODES, ItoObserver, catalog_function,
                  ito_residual, validate_test_function)
from .junction import validate_assumption_H
from .localtime import (LocalTimeObserver, compare_estimators, jump_count_local_time,
                        occupation_local_time, phi_decomposition_local_time)
from .stats import zero_mean_report


def _write(out: str, name: str, text: str) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _experiment(args) -> ExperimentConfig:
    return ExperimentConfig.from_raw(load(args.config), seed=args.seed, workers=args.workers,
                                     out_dir=args.out, fmt=args.format)


def cmd_validate(args) -> int:
    raw = load(args.config)
    sim, _ = sim_from_raw(raw, seed=args.seed)
    rep = validate_assumption_H(sim.field, sim.alpha, x0=sim.x0)
    names = ExperimentConfig.from_raw(raw).test_functions if raw.has("estimators", "test_functions") \
        else tuple(CATALOG)
    fns = {n: validate_test_function(catalog_function(n, sim.field.edge_count), sim.T).as_dict()
           for n in names}
    result = {"assumption_H": rep.as_dict(), "test_functions": fns,
              "passed": rep.passed and all(v["passed"] for v in fns.values())}
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, "validation.json", text)
    print(text, end="")
    return 0 if result["passed"] else 1


def cmd_simulate(args) -> int:
    ec = _experiment(args)
    sim = ec.sim_at(ec.sim.delta)
    paths = simulate_batch(sim, ec.n_paths, workers=ec.workers)
    print(write_ensemble(paths, sim, ec.out_dir, ec.fmt))
    return 0


def cmd_localtime(args) -> int:
    ec = _experiment(args)
    sim = ec.sim_at(ec.sim.delta)
    full = tuple(range(1, sim.alpha.edge_count + 1))
    subsets = [None] + [tuple(s) for s in ec.subsets]
    out = run_ensemble(sim, ec.n_paths, lambda: [LocalTimeObserver(
        sim.field, sim.alpha, ec.epsilons, subsets, ec.epsilons)], workers=ec.workers)
    cols = ["lt_jump"] + [k for k in sorted(out) if k != "lt_jump"]
    lines = ["# junctionsde localtime-finals-csv v1", "path," + ",".join(cols)]
    for k in range(ec.n_paths):
        lines.append(f"{k}," + ",".join(repr(float(out[c][k])) for c in cols))
    _write(ec.out_dir, "localtime_finals.csv", "\n".join(lines) + "\n")
    rows = [compare_estimators(out[LocalTimeObserver.occ_key(e, full)], out["lt_jump"], e, sim.delta)
            for e in ec.epsilons]
    _write(ec.out_dir, "comparison.json", json.dumps(rows, indent=2, sort_keys=True) + "\n")
    p = simulate_delta_path(sim, 0)
    series = [jump_count_local_time(p)]
    for e in ec.epsilons:
        series.append(occupation_local_time(p, sim.field, sim.alpha, e))
        series.append(phi_decomposition_local_time(p, sim.field, e))
    for k, s in enumerate(series):
        _write(ec.out_dir, f"path0_localtime_{k:02d}.csv", s.to_csv())
    print(json.dumps(rows, indent=2, sort_keys=True))
    return 0


def cmd_ito(args) -> int:
    ec = _experiment(args)
    sim = ec.sim_at(ec.sim.delta)
    fns = [catalog_function(n, sim.field.edge_count) for n in ec.test_functions]
    out = run_ensemble(sim, ec.n_paths, lambda: [ItoObserver(fns, sim.alpha, ec.checkpoints)],
                       workers=ec.workers)
    report = {}
    for g in fns:
        rep = zero_mean_report(out[f"ito_lt@{g.name}"], ec.checkpoints, ec.threshold["z"])
        report[g.name] = {"zero_mean": rep.as_dict(),
                          "mean_sup_stochastic_residual": float(np.mean(out[f"ito_sup@{g.name}"]))}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _write(ec.out_dir, "ito_report.json", text)
    p = simulate_delta_path(sim, 0)
    l = jump_count_local_time(p)
    for g in fns:
        for mode in MODES:
            _write(ec.out_dir, f"path0_residual_{g.name}_{mode}.csv",
                   ito_residual(p, g, sim.field, sim.alpha, l, mode).to_csv())
    print(text, end="")
    return 0 if all(v["zero_mean"]["passed"] for v in report.values()) else 1


def _print_summary(d: dict, source: str) -> None:
    status = "PASS" if d.get("passed") else "FAIL"
    print(f"{status}  {d.get('experiment')}  ({source})")
    for c in d.get("checks", []):
        mark = "pass" if c["passed"] else "FAIL"
        extra = f" observed={c['observed']!r}" if "observed" in c else ""
        extra += f" threshold={c['threshold']!r}" if "threshold" in c else ""
        print(f"    {mark}  {c['name']}{extra}")


def cmd_experiment(args) -> int:
    ec = _experiment(args)
    rec = run_experiment(ec)
    _print_summary(rec.as_dict(), os.path.join(ec.out_dir, "summary.json"))
    return 0


def cmd_report(args) -> int:
    files = []
    for p in args.paths or ([args.out] if args.out else []):
        files.append(os.path.join(p, "summary.json") if os.path.isdir(p) else p)
    if not files:
        print("report: give summary files or directories", file=sys.stderr)
        return 2
    ok = True
    for f in files:
        with open(f) as fh:
            d = json.load(fh)
        _print_summary(d, f)
        ok &= bool(d.get("passed"))
    return 0 if ok else 1


COMMANDS = {
    "validate": (cmd_validate, "check coefficient assumptions and test functions"),
    "simulate": (cmd_simulate, "simulate and store trajectories"),
    "localtime": (cmd_localtime, "local-time estimators on an ensemble"),
    "ito": (cmd_ito, "Ito residuals and zero-mean tests"),
    "experiment": (cmd_experiment, "run the configured experiment"),
    "report": (cmd_report, "summarize summary.json files"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="junctionsde", description=__doc__.splitlines()[0],
                                 epilog=f"default worker count: ${WORKERS_ENV}")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=name != "report", help="INI configuration file")
        p.add_argument("--seed", type=int, help="override [simulation] seed")
        p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
        p.add_argument("--out", help="output directory (overrides [experiment] out)")
        p.add_argument("--format", choices=("csv", "binary"), help="per-path file format")
        if name == "report":
            p.add_argument("paths", nargs="*", help="summary.json files or directories")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command][0](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
