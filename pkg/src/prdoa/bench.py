"""Monte-Carlo RMSE benchmark over scenario sweeps.

A JSON plan names a base scenario, one sweep axis, estimator tags, and run
counts; the engine draws fresh snapshots per run (seed = scenario seed + run
index, shared across estimators so they see identical data), estimates DOAs,
and reduces to one RMSE row per (estimator, axis value).

Determinism contract: identical plan plus seed yields a byte-identical CSV.
Timing is therefore opt-in ("timing": true); when off, mean_time_s is 0.0.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import estimators as est
from . import rankone
from .arrays import (
    ArrayGeometry,
    SampleCovariance,
    Scenario,
    SearchGrid,
    diagonal_load,
    generate_snapshots,
    snr_to_noise_power,
)
from .peaks import dml_grid2, find_n_minima

CSV_HEADER = "estimator,axis_name,axis_value,rmse_deg,mean_time_s,failures,runs_used"
TIME_CSV_HEADER = "estimator,axis_name,axis_value,median_time_s,reps"

_AXES = ("snr_db", "snapshots", "separation_deg", "n_sensors")
_NEEDS_INVERSE = ("capon", "pr-ccf")


@dataclass(frozen=True)
class ExperimentPlan:
    geometry: ArrayGeometry
    scenario: Scenario
    axis_name: str
    axis_values: tuple
    estimators: tuple
    runs: int = 100
    trim_fraction: float = 0.0
    grid: str = "0:90:1800"
    dml_grid: Optional[str] = None
    min_separation_deg: Optional[float] = None
    loading_gamma: float = 1e-4
    ucf_init_power: float = 1e-6
    timing: bool = False
    out: Optional[str] = None


@dataclass(frozen=True)
class RmseRow:
    estimator: str
    axis_name: str
    axis_value: object
    rmse_deg: float
    mean_time_s: float
    failures: int
    runs_used: int


def _reject_unknown(mapping: dict, allowed, where: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ValueError(f"unknown {where} key(s): {', '.join(unknown)}")


def parse_scenario(blob: dict) -> tuple:
    """Build (ArrayGeometry, Scenario) from a scenario JSON object."""
    allowed = ("geometry", "doas", "powers", "correlation", "snr_db", "noise_power", "snapshots", "seed")
    _reject_unknown(blob, allowed, "scenario")
    geo = blob.get("geometry", {})
    _reject_unknown(geo, ("type", "m", "spacing"), "geometry")
    if geo.get("type", "ula") != "ula":
        raise ValueError(f"unsupported geometry type {geo.get('type')!r}")
    geometry = ArrayGeometry.ula(int(geo.get("m", 10)), float(geo.get("spacing", 0.5)))

    if "doas" not in blob:
        raise ValueError("scenario needs 'doas'")
    doas = [float(v) for v in blob["doas"]]
    powers = blob.get("powers", 1.0)
    if np.isscalar(powers):
        powers = [float(powers)] * len(doas)
    if "snr_db" in blob and "noise_power" in blob:
        raise ValueError("give snr_db or noise_power, not both")
    if "snr_db" in blob:
        noise = snr_to_noise_power(float(blob["snr_db"]))
    else:
        noise = float(blob.get("noise_power", 1.0))
    scenario = Scenario(
        doas_deg=tuple(doas),
        powers=tuple(float(p) for p in powers),
        correlation=complex(blob.get("correlation", 0.0)),
        noise_power=noise,
        snapshots=int(blob.get("snapshots", 100)),
        seed=int(blob.get("seed", 0)),
    )
    return geometry, scenario


def parse_plan(blob: dict) -> ExperimentPlan:
    """Build an ExperimentPlan from a plan JSON object, rejecting unknown keys."""
    allowed = (
        "scenario",
        "sweep",
        "estimators",
        "runs",
        "trim_fraction",
        "grid",
        "dml_grid",
        "min_separation_deg",
        "loading_gamma",
        "ucf_init_power",
        "timing",
        "out",
    )
    _reject_unknown(blob, allowed, "plan")
    if "scenario" not in blob or "sweep" not in blob or "estimators" not in blob:
        raise ValueError("plan needs 'scenario', 'sweep', and 'estimators'")
    geometry, scenario = parse_scenario(blob["scenario"])

    sweep = blob["sweep"]
    _reject_unknown(sweep, ("axis", "values"), "sweep")
    axis = sweep.get("axis")
    if axis not in _AXES:
        raise ValueError(f"sweep axis must be one of {_AXES}, got {axis!r}")
    values = list(sweep.get("values", []))
    if not values:
        raise ValueError("sweep needs at least one value")

    tags = [str(t) for t in blob["estimators"]]
    if not tags:
        raise ValueError("plan needs at least one estimator")
    for tag in tags:
        if tag != "dml-grid2":
            est.parse_tag(tag)  # raises on unknown suffixes
            base = tag.partition(":")[0]
            if base not in est.SPECTRUM_ESTIMATORS:
                raise ValueError(f"unknown estimator {base!r}")
    if "dml-grid2" in tags and len(scenario.doas_deg) != 2:
        raise ValueError("dml-grid2 applies only to two-source scenarios")

    runs = int(blob.get("runs", 100))
    if runs < 1:
        raise ValueError("runs must be >= 1")
    trim = float(blob.get("trim_fraction", 0.0))
    if not 0.0 <= trim < 1.0:
        raise ValueError("trim_fraction must be in [0, 1)")
    min_sep = blob.get("min_separation_deg")
    return ExperimentPlan(
        geometry=geometry,
        scenario=scenario,
        axis_name=axis,
        axis_values=tuple(values),
        estimators=tuple(tags),
        runs=runs,
        trim_fraction=trim,
        grid=str(blob.get("grid", "0:90:1800")),
        dml_grid=(str(blob["dml_grid"]) if blob.get("dml_grid") is not None else None),
        min_separation_deg=(float(min_sep) if min_sep is not None else None),
        loading_gamma=float(blob.get("loading_gamma", 1e-4)),
        ucf_init_power=float(blob.get("ucf_init_power", 1e-6)),
        timing=bool(blob.get("timing", False)),
        out=(str(blob["out"]) if blob.get("out") is not None else None),
    )


def load_plan(path: str) -> ExperimentPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_plan(json.load(fh))


def materialize(plan: ExperimentPlan, axis_value) -> tuple:
    """Apply one sweep value to the base scenario; returns (geometry, scenario)."""
    geom, scen = plan.geometry, plan.scenario
    v = axis_value
    if plan.axis_name == "snr_db":
        scen = scen.with_updates(noise_power=snr_to_noise_power(float(v)))
    elif plan.axis_name == "snapshots":
        scen = scen.with_updates(snapshots=int(v))
    elif plan.axis_name == "separation_deg":
        n = scen.n_sources
        center = float(np.mean(scen.doas_deg))
        doas = center + (np.arange(n) - (n - 1) / 2.0) * float(v)
        scen = scen.with_updates(doas_deg=tuple(doas))
    elif plan.axis_name == "n_sensors":
        spacing = float(geom.positions[1, 0] - geom.positions[0, 0])
        geom = ArrayGeometry.ula(int(v), spacing)
    else:  # unreachable after parse_plan
        raise ValueError(f"unknown axis {plan.axis_name!r}")
    return geom, scen


def rmse(estimates_deg: np.ndarray, truth_deg: np.ndarray) -> float:
    """Root mean squared error over runs and sources, both sides sorted."""
    e = np.sort(np.atleast_2d(np.asarray(estimates_deg, float)), axis=1)
    t = np.sort(np.asarray(truth_deg, float))
    return float(np.sqrt(np.mean((e - t) ** 2)))


def _estimate_once(tag, cov, grid, pair_grid, n, min_sep, plan):
    """One estimator on one covariance; returns (angles, spectrum values)."""
    if tag == "dml-grid2":
        got = dml_grid2(cov, pair_grid)
    else:
        base, _ = est.parse_tag(tag)
        use = cov
        if base in _NEEDS_INVERSE and cov.is_singular:
            use = diagonal_load(cov, plan.loading_gamma * cov.trace / cov.m)
        spec = est.spectrum(tag, use, grid, ucf_init_power=plan.ucf_init_power)
        got = find_n_minima(spec, n, min_sep)
    if not np.isfinite(got.values).all():
        raise est.SingularCovarianceError("estimate landed on a failed spectrum value")
    return got.angles_deg


def _run_axis_value(plan: ExperimentPlan, axis_value, threads: int):
    geom, scen = materialize(plan, axis_value)
    grid = SearchGrid.from_spec(geom, plan.grid)
    pair_grid = SearchGrid.from_spec(geom, plan.dml_grid) if plan.dml_grid else grid
    n = scen.n_sources
    min_sep = plan.min_separation_deg if plan.min_separation_deg is not None else 2.0 * grid.step
    truth = np.sort(np.asarray(scen.doas_deg, float))

    def one_run(r):
        s = scen.with_updates(seed=scen.seed + r)
        x = generate_snapshots(geom, s)
        cov = SampleCovariance.from_snapshots(x, n)
        out = {}
        for tag in plan.estimators:
            t0 = time.perf_counter() if plan.timing else 0.0
            try:
                angles = _estimate_once(tag, cov, grid, pair_grid, n, min_sep, plan)
                ok = True
            except (est.SingularCovarianceError, rankone.ConvergenceError, np.linalg.LinAlgError, ValueError):
                angles, ok = None, False
            dt = (time.perf_counter() - t0) if plan.timing else 0.0
            out[tag] = (angles, dt, ok)
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_run = list(pool.map(one_run, range(plan.runs)))
    else:
        per_run = [one_run(r) for r in range(plan.runs)]

    rows = []
    trim_count = math.ceil(plan.trim_fraction * plan.runs)
    for tag in plan.estimators:
        errors, times = [], []
        failures = 0
        for r in range(plan.runs):
            angles, dt, ok = per_run[r][tag]
            if ok:
                errors.append(np.sort(angles) - truth)
                times.append(dt)
            else:
                failures += 1
        if errors:
            errs = np.asarray(errors)
            worst = np.abs(errs).max(axis=1)
            order = np.argsort(worst, kind="stable")
            keep = order[: max(len(errors) - trim_count, 0)]
            if keep.size:
                value = float(np.sqrt(np.mean(errs[keep] ** 2)))
            else:
                value = float("nan")
            used = int(keep.size)
        else:
            value, used = float("nan"), 0
        mean_t = float(np.mean(times)) if (plan.timing and times) else 0.0
        rows.append(RmseRow(tag, plan.axis_name, axis_value, value, mean_t, failures, used))
    return rows


def run_experiment(plan: ExperimentPlan, threads: int = 1) -> list:
    """Run the full sweep; rows ordered estimator-major in plan order."""
    by_value = [_run_axis_value(plan, v, threads) for v in plan.axis_values]
    rows = []
    for i, tag in enumerate(plan.estimators):
        for cols in by_value:
            rows.append(cols[i])
    return rows


def rows_to_csv(rows) -> str:
    """Serialize RMSE rows; floats via repr so equal runs are byte-identical."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (
                    r.estimator,
                    r.axis_name,
                    repr(r.axis_value),
                    repr(float(r.rmse_deg)),
                    repr(float(r.mean_time_s)),
                    str(int(r.failures)),
                    str(int(r.runs_used)),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(rows, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


@dataclass(frozen=True)
class TimeRow:
    estimator: str
    axis_name: str
    axis_value: object
    median_time_s: float
    reps: int


def time_spectra(plan: ExperimentPlan, reps: int = 5, warmups: int = 2) -> list:
    """Median spectrum-evaluation time per (estimator, axis value).

    Times only the spectrum evaluation (or the pair search for dml-grid2) on
    the run-0 covariance of each axis value: warmup runs first, then the
    median of ``reps`` timed repetitions.
    """
    if reps < 5:
        raise ValueError("reps must be >= 5 for a stable median")
    rows = []
    for tag in plan.estimators:
        for v in plan.axis_values:
            geom, scen = materialize(plan, v)
            grid = SearchGrid.from_spec(geom, plan.grid)
            pair_grid = SearchGrid.from_spec(geom, plan.dml_grid) if plan.dml_grid else grid
            x = generate_snapshots(geom, scen)
            cov = SampleCovariance.from_snapshots(x, scen.n_sources)

            if tag == "dml-grid2":
                fn = lambda: dml_grid2(cov, pair_grid)
            else:
                base, _ = est.parse_tag(tag)
                use = cov
                if base in _NEEDS_INVERSE and cov.is_singular:
                    use = diagonal_load(cov, plan.loading_gamma * cov.trace / cov.m)
                fn = lambda: est.spectrum(tag, use, grid, ucf_init_power=plan.ucf_init_power)
            for _ in range(warmups):
                fn()
            samples = []
            for _ in range(reps):
                t0 = time.perf_counter()
                fn()
                samples.append(time.perf_counter() - t0)
            rows.append(TimeRow(tag, plan.axis_name, v, float(np.median(samples)), reps))
    return rows


def time_rows_to_csv(rows) -> str:
    lines = [TIME_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (r.estimator, r.axis_name, repr(r.axis_value), repr(float(r.median_time_s)), str(int(r.reps)))
            )
        )
    return "\n".join(lines) + "\n"
