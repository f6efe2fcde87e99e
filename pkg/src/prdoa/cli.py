"""doa-bench: run RMSE sweeps, dump spectra, and time estimators.

Subcommands
-----------
run       execute a Monte-Carlo plan and write/print the RMSE CSV
spectrum  evaluate one estimator's null spectrum over a grid for one scenario
time      median spectrum-evaluation times for the plan's estimators
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench
from . import estimators as est
from .arrays import SampleCovariance, SearchGrid, diagonal_load, generate_snapshots
from .peaks import dml_grid2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="doa-bench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo RMSE sweep from a JSON plan")
    run.add_argument("plan", help="path to the plan JSON")
    run.add_argument("--out", help="CSV output path (overrides the plan's 'out')")
    run.add_argument("--runs", type=int, help="override the plan's run count")
    run.add_argument("--threads", type=int, default=1, help="worker threads over runs")
    run.add_argument("--seed", type=int, help="override the scenario seed")

    spec = sub.add_parser("spectrum", help="evaluate one null spectrum over a grid")
    spec.add_argument("scenario", help="path to a scenario JSON")
    spec.add_argument("--estimator", required=True, help="estimator tag, e.g. pr-wsf or pr-dml:naive")
    spec.add_argument("--grid", default="0:90:1800", help="grid as lo:hi:n (default 0:90:1800)")
    spec.add_argument("--out", help="write angle_deg,value CSV here instead of stdout")

    tim = sub.add_parser("time", help="median spectrum-evaluation times for a plan")
    tim.add_argument("plan", help="path to the plan JSON")
    tim.add_argument("--out", help="CSV output path instead of stdout")
    return p


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    plan = bench.load_plan(args.plan)
    updates = {}
    if args.runs is not None:
        if args.runs < 1:
            raise ValueError("--runs must be >= 1")
        updates["runs"] = args.runs
    if args.seed is not None:
        updates["scenario"] = plan.scenario.with_updates(seed=args.seed)
    if args.out is not None:
        updates["out"] = args.out
    if updates:
        from dataclasses import replace

        plan = replace(plan, **updates)
    rows = bench.run_experiment(plan, threads=max(1, args.threads))
    _emit(bench.rows_to_csv(rows), plan.out)
    return 0


def _cmd_spectrum(args) -> int:
    with open(args.scenario, "r", encoding="utf-8") as fh:
        geometry, scenario = bench.parse_scenario(json.load(fh))
    grid = SearchGrid.from_spec(geometry, args.grid)
    x = generate_snapshots(geometry, scenario)
    cov = SampleCovariance.from_snapshots(x, scenario.n_sources)

    tag = args.estimator
    if tag == "dml-grid2":
        got = dml_grid2(cov, grid)
        lines = ["angle_deg,value"]
        for a, v in zip(got.angles_deg, got.values):
            lines.append(f"{float(a)!r},{float(v)!r}")
        _emit("\n".join(lines) + "\n", args.out)
        return 0

    base, _ = est.parse_tag(tag)
    if base in bench._NEEDS_INVERSE and cov.is_singular:
        cov = diagonal_load(cov, 1e-4 * cov.trace / cov.m)
    res = est.spectrum(tag, cov, grid)
    lines = ["angle_deg,value"]
    for a, v in zip(res.angles_deg, res.values):
        lines.append(f"{float(a)!r},{float(v)!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_time(args) -> int:
    plan = bench.load_plan(args.plan)
    rows = bench.time_spectra(plan)
    _emit(bench.time_rows_to_csv(rows), args.out)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "spectrum":
            return _cmd_spectrum(args)
        if args.command == "time":
            return _cmd_time(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"doa-bench: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
