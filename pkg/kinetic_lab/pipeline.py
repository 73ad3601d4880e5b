"""
Run pipeline

Turns a validated RunConfig into artifacts:
- simulate the preset, persist the record
- run each requested checker, writing its JSON report and plot-data CSV
- aggregate pass/fail into summary.json
- batches over seeds and parameter sweeps with slope fits
"""

import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import linregress

from lab_project import settings
from kinetic_lab.exceptions import ConfigurationError, KineticLabError, UnsupportedSchemeError
from kinetic_lab.models.curve import LipschitzCurve
from kinetic_lab.models.reports import BlowupFrame, DeGiorgiDirection, TraceSide
from kinetic_lab.models.riemann import WaveKind
from kinetic_lab.models.state import ConservedState
from kinetic_lab.scripts.presets import build_initial
from kinetic_lab.serializers import report_serializer
from kinetic_lab.serializers.config_serializer import CheckerSpec, config_to_dict, with_override
from kinetic_lab.serializers.snapshot_serializer import write_field_csv, write_record
from kinetic_lab.services.characteristic_service import CharacteristicService
from kinetic_lab.services.entropy_service import EntropyService
from kinetic_lab.services.regularity_service import RegularityService, fit_exponent
from kinetic_lab.services.riemann_service import check_solution, exact_field, solve_riemann
from kinetic_lab.services.solver_service import l1_distance_to_exact, run

logger = logging.getLogger(__name__)

SUMMARY = "summary.json"
AGGREGATE = "aggregate.csv"

CHECKERS = {}


def checker(kind):
    """Register a checker function under a CheckerSpec kind."""

    def register(function):
        CHECKERS[kind] = function
        return function

    return register


@dataclass
class RunContext:
    """Everything a checker needs: the config, the record and the output directory."""

    config: object
    grid: object
    record: object
    out: Path
    n_jobs: int
    seed: int
    _cache: dict = field(default_factory=dict)

    def entropy(self):
        if "entropy" not in self._cache:
            self._cache["entropy"] = EntropyService(self.record, n_jobs=self.n_jobs)
        return self._cache["entropy"]

    def regularity(self):
        if "regularity" not in self._cache:
            self._cache["regularity"] = RegularityService(self.record, n_jobs=self.n_jobs)
        return self._cache["regularity"]

    def dissipation(self, params=None):
        params = params or {}
        if "mu" not in self._cache:
            self._cache["mu"] = self.entropy().mu_estimate(
                params.get("v_bins"), params.get("t_bins"), params.get("x_bins")
            )
        return self._cache["mu"]

    def x_split(self):
        preset = self.config.preset
        return 0.5 * (self.grid.x_min + self.grid.x_max) if preset.x_split is None else preset.x_split

    def riemann_solution(self):
        preset = self.config.preset
        if preset.id != "riemann":
            raise ConfigurationError(f"this checker needs the riemann preset, got '{preset.id}'")
        if "riemann" not in self._cache:
            self._cache["riemann"] = solve_riemann(
                ConservedState(*preset.left), ConservedState(*preset.right), self.record.rho_floor
            )
        return self._cache["riemann"]

    def shock_lines(self):
        """(x_split, speed) of every exact shock for the riemann preset; empty otherwise."""
        if self.config.preset.id != "riemann":
            return []
        x_split = self.x_split()
        waves = self.riemann_solution().waves
        return [(x_split, wave.speed) for wave in waves if wave.kind is WaveKind.SHOCK]

    def line(self, params):
        """Straight curve x0 + speed (t - t0) over the recorded times in [t_from, t_to]."""
        record = self.record
        times = record.times
        t_from = float(params.get("t_from", record.t_start))
        t_to = float(params.get("t_to", record.t_final))
        times = times[(times >= t_from) & (times <= t_to)]
        x0 = float(params.get("x0", self.x_split()))
        return LipschitzCurve.line(times, x0, float(params.get("speed", 0.0)), float(params.get("t0", 0.0)))


# ----------------------------------------------------------------------
# Checkers: each returns (passed, summary dict) and writes its artifacts
# ----------------------------------------------------------------------


@checker("riemann_check")
def check_riemann(context, params):
    solution = context.riemann_solution()
    L = context.record.L
    audit = check_solution(solution, np.linspace(-L, L, int(params.get("v0_samples", 33))))
    error = l1_distance_to_exact(context.record, solution, context.x_split())
    tolerance = float(params.get("l1_tolerance", 2e-2))
    passed = bool(audit["passed"] and error <= tolerance)
    result = {"solution": solution.to_dict(), "audit": audit, "l1_error": error, "l1_tolerance": tolerance}
    report_serializer.write_json(result, context.out / "riemann_check.json")
    return passed, {"rh_residual": audit["rh_residual"], "l1_error": error}


@checker("exact_error")
def check_exact_error(context, params):
    solution = context.riemann_solution()
    error = l1_distance_to_exact(context.record, solution, context.x_split())
    tolerance = float(params.get("tolerance", 2e-2))
    report_serializer.write_json({"l1_error": error, "tolerance": tolerance}, context.out / "exact_error.json")
    return error <= tolerance, {"l1_error": error}


@checker("entropy_audit")
def check_entropy_audit(context, params):
    report = context.entropy().entropy_audit(tolerance=params.get("tolerance"))
    report_serializer.write_json(report, context.out / "entropy_audit.json")
    return report.passed, {"max_increase": report.max_increase, "total_drop": report.total_drop}


@checker("mu")
def check_mu(context, params):
    mu = context.dissipation(params)
    report_serializer.write_dissipation(mu, context.out / "dissipation.csv", context.out / "dissipation.json")
    summary = mu.summary()
    return summary["min_bin"] >= -1e-12, {"total_mass": summary["total_mass"], "min_bin": summary["min_bin"]}


@checker("tv")
def check_tv(context, params):
    dx = context.grid.dx
    r = float(params.get("r", 8.0 * dx))
    R = float(params.get("R", 2.0 * r))
    a = float(params.get("a", 0.0))
    center = params.get("center")
    report = context.entropy().tv_bound_check(
        context.dissipation(params), r, R, a, center=center, side=params.get("side", "below")
    )
    report_serializer.write_json(report, context.out / "tv_bound.json")
    return bool(np.isfinite(report.ratio)), {"ratio": report.ratio}


@checker("trace")
def check_trace(context, params):
    curve = context.line(params)
    report = context.regularity().extract_trace(curve, side=TraceSide(params.get("side", "both")))
    report_serializer.write_json(report, context.out / "trace.json")
    report_serializer.write_trace_csv(report, context.out / "trace_ladder.csv")
    return report.verified, {"final_error": float(report.errors[-1]), "verified": report.verified}


@checker("rh")
def check_rh(context, params):
    regularity = context.regularity()
    curve = context.line(params)
    trace = regularity.extract_trace(curve)
    report = regularity.rh_dichotomy(curve, trace, tolerance=params.get("tolerance"))
    report_serializer.write_json(report, context.out / "rh.json")
    return report.passed, {
        "shock_fraction": report.shock_fraction,
        "max_shock_rh_residual": report.max_shock_rh_residual(),
    }


@checker("blowup")
def check_blowup(context, params):
    curve = context.line(params)
    dx = context.grid.dx
    etas = params.get("etas", [8.0 * dx * 2 ** j for j in range(4)])
    t0 = float(params.get("t_blowup", 0.5 * (curve.times[0] + curve.times[-1])))
    states = params.get("states")
    patches, decreasing = context.regularity().blowup_series(
        t0, curve, etas, frame=BlowupFrame(params.get("frame", "curve")), states=states
    )
    rows = [
        {"eta": p.eta, "distance_minus": p.distance_minus, "distance_plus": p.distance_plus, "distance": p.distance}
        for p in patches
    ]
    report_serializer.write_json({"t0": t0, "patches": rows, "decreasing": decreasing}, context.out / "blowup.json")
    return decreasing, {"distances": [row["distance"] for row in rows]}


@checker("degiorgi")
def check_degiorgi(context, params):
    report = degiorgi_report(context, params)
    report_serializer.write_json(report, context.out / "degiorgi.json")
    report_serializer.write_degiorgi_csv(report, context.out / "degiorgi_masses.csv")
    return report.passed, {"eps": report.eps, "sup_bound": report.sup_bound, "converged": report.converged}


def degiorgi_report(context, params):
    record = context.record
    center = params.get("center", [0.5 * (record.t_start + record.t_final), context.x_split()])
    preset = context.config.preset
    if "reference" in params:
        reference = ConservedState(*params["reference"])
    elif preset.left is not None:
        reference = ConservedState(*preset.left)
    else:
        reference = ConservedState.from_velocity(preset.rho0, preset.velocity0)
    return context.regularity().degiorgi_monitor(
        center,
        reference,
        direction=DeGiorgiDirection(params.get("direction", "below-lambda1")),
        eps_target=float(params.get("eps_target", 1e-3)),
        scale=params.get("scale"),
        min_density=params.get("min_density"),
    )


@checker("semicont")
def check_semicont(context, params):
    if "points" in params:
        points = [tuple(point) for point in params["points"]]
    else:
        rng = np.random.default_rng(context.seed)
        points = context.regularity().sample_points(
            int(params.get("n_points", 50)), rng, shock_lines=context.shock_lines()
        )
    dissipation = None
    if params.get("jump_density", False):
        try:
            dissipation = context.dissipation(params)
        except UnsupportedSchemeError as exc:
            logger.warning(f"No jump density for semicontinuity points: {exc}")
    report = context.regularity().semicontinuity_check(points, dissipation=dissipation)
    report_serializer.write_json(report, context.out / "semicont.json")
    report_serializer.write_envelope_csv(report, context.out / "envelope_ladders.csv")
    return report.passed, {"vmo_fraction": report.vmo_fraction, "points": len(report.points)}


@checker("characteristic")
def check_characteristic(context, params):
    service = CharacteristicService(context.record, n_jobs=context.n_jobs)
    eps_cells = params.get("eps_cells")
    eps_ladder = None if eps_cells is None else np.asarray(eps_cells, dtype=float) * context.grid.dx
    result = service.solve_characteristic(
        float(params.get("x0", context.x_split())),
        family=int(params.get("family", 1)),
        sigma=params.get("sigma"),
        eps_ladder=eps_ladder,
        tolerance=params.get("tolerance"),
    )
    report_serializer.write_characteristic_csv(result, context.out / "characteristic.csv")
    summary = report_serializer.characteristic_summary(result)
    report_serializer.write_json(summary, context.out / "characteristic.json")
    return result.passed, {"violation_fraction": result.violation_fraction, "h_final": float(result.h[-1])}


# ----------------------------------------------------------------------
# Pipeline
# ----------------------------------------------------------------------


def output_directory(config, out=None):
    if out is not None:
        return Path(out)
    if config.output is not None:
        return Path(config.output)
    return Path(settings.OUTPUT_DIR) / config.name


def simulate(config, seed=None):
    """Grid, initial field and record for a config."""
    grid = config.grid.build()
    initial = build_initial(config.preset, grid, seed)
    record = run(initial, grid, config.scheme.build())
    return grid, record


def _run_checkers(context, specs):
    results = []
    for index, spec in enumerate(specs):
        function = CHECKERS[spec.kind]
        entry = {"index": index, "kind": spec.kind, "params": spec.params}
        try:
            passed, details = function(context, spec.params)
            entry.update({"passed": bool(passed), "details": details})
            logger.info(f"Checker {spec.kind}: {'passed' if passed else 'FAILED'}")
        except KineticLabError as exc:
            logger.error(f"Checker {spec.kind} raised {type(exc).__name__}: {exc}")
            entry.update({"passed": False, "error": f"{type(exc).__name__}: {exc}"})
        results.append(entry)
    return results


def run_single(config, out, n_jobs, seed=None, only=None):
    """
    One simulation plus its checkers, written under `out`.

    Returns:
        The summary dict also written to summary.json
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    seed = config.seed if seed is None else seed
    grid, record = simulate(config, seed)
    write_record(record, out / "record")

    specs = list(config.checkers)
    if only is not None:
        specs = [spec for spec in specs if spec.kind == only] or [CheckerSpec(kind=only)]
    context = RunContext(config=config, grid=grid, record=record, out=out, n_jobs=n_jobs, seed=seed)
    results = _run_checkers(context, specs)

    audit = None if record.audit is None else record.audit.summary(record.scheme)
    summary = {
        "name": config.name,
        "seed": seed,
        "config": config_to_dict(config),
        "record": record.metadata(),
        "audit": audit,
        "total_dissipation": float(np.sum(record.dissipation)),
        "checkers": results,
        "passed": bool(all(entry["passed"] for entry in results) and (audit is None or audit["passed"])),
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    report_serializer.write_json(summary, out / SUMMARY)
    return summary


def run_pipeline(config, out=None, dry_run=False, threads=None, only=None):
    """
    Execute a config: a single run, or one run per batch seed.

    Args:
        config: validated RunConfig
        out: artifact directory (config.output or OUTPUT_DIR/name by default)
        dry_run: validate and echo only
        threads: joblib workers (settings.THREADS by default)
        only: restrict the checkers to one kind

    Returns:
        (exit status, artifact directory); status 1 when any check failed
    """
    out = output_directory(config, out)
    n_jobs = settings.THREADS if threads is None else threads
    if dry_run:
        logger.info(f"Dry run of '{config.name}': no simulation, output would go to {out}")
        return 0, out

    if config.batch is None:
        summary = run_single(config, out, n_jobs, only=only)
        return (0 if summary["passed"] else 1), out

    seeds = list(config.batch.seeds)
    logger.info(f"Starting batch '{config.name}' over {len(seeds)} seeds")
    summaries = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(run_single)(config, out / f"seed_{seed}", 1, seed, only) for seed in seeds
    )
    rows = []
    for seed, summary in zip(seeds, summaries):
        row = {"seed": seed, "passed": summary["passed"], "total_dissipation": summary["total_dissipation"]}
        for entry in summary["checkers"]:
            row[f"{entry['kind']}_passed"] = entry["passed"]
        rows.append(row)
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(out / AGGREGATE, index=False, float_format="%.17g")
    passed = all(summary["passed"] for summary in summaries)
    report_serializer.write_json(
        {
            "name": config.name,
            "seeds": seeds,
            "runs": [{"seed": row["seed"], "passed": row["passed"]} for row in rows],
            "passed": passed,
            "generated_at": datetime.now(timezone.utc).isoformat(),
        },
        out / SUMMARY,
    )
    return (0 if passed else 1), out


# ----------------------------------------------------------------------
# Sweeps
# ----------------------------------------------------------------------


def _metric(config, metric, n_jobs):
    grid, record = simulate(config)
    if metric == "total_dissipation":
        return {"metric": float(np.sum(record.dissipation))}
    if metric == "mu_total":
        return {"metric": EntropyService(record, n_jobs=1).mu_estimate().total()}
    if metric == "l1_exact":
        preset = config.preset
        if preset.id != "riemann":
            raise ConfigurationError("the l1_exact metric needs the riemann preset")
        solution = solve_riemann(ConservedState(*preset.left), ConservedState(*preset.right))
        x_split = 0.5 * (grid.x_min + grid.x_max) if preset.x_split is None else preset.x_split
        return {"metric": l1_distance_to_exact(record, solution, x_split)}
    # degiorgi: sup over B_1 as the metric, eps kept for the exponent fit
    params = next((spec.params for spec in config.checkers if spec.kind == "degiorgi"), {})
    context = RunContext(config=config, grid=grid, record=record, out=Path("."), n_jobs=n_jobs, seed=config.seed)
    report = degiorgi_report(context, params)
    return {"metric": report.sup_bound, "eps": report.eps, "report": report}


def _sweep_point(config, parameter, value, metric):
    try:
        point = _metric(with_override(config, parameter, value), metric, 1)
        point.update({"value": value, "error": None})
    except KineticLabError as exc:
        logger.error(f"Sweep point {parameter}={value} failed: {exc}")
        point = {"value": value, "metric": math.nan, "error": f"{type(exc).__name__}: {exc}"}
    return point


def log_log_slope(values, metrics):
    """Least-squares slope of log(metric) against log(value) over positive pairs."""
    values = np.asarray(values, dtype=float)
    metrics = np.asarray(metrics, dtype=float)
    usable = (values > 0.0) & (metrics > 0.0) & np.isfinite(metrics)
    if usable.sum() < 2:
        return None
    return float(linregress(np.log(values[usable]), np.log(metrics[usable])).slope)


def sweep(config, out=None, threads=None):
    """
    Independent runs along config.sweep.values with one metric each.

    Writes sweep.csv (value, metric) and sweep.json with the log-log slope;
    the degiorgi metric also reports the fitted exponent of sup against eps.

    Raises:
        ConfigurationError: if the config has no sweep axis
    """
    axis = config.sweep
    if axis is None or not axis.values:
        raise ConfigurationError("sweep needs a [sweep] table with a non-empty 'values' list")
    out = output_directory(config, out)
    out.mkdir(parents=True, exist_ok=True)
    n_jobs = settings.THREADS if threads is None else threads
    logger.info(f"Sweeping {axis.parameter} over {axis.values} ({axis.metric})")
    points = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sweep_point)(config, axis.parameter, value, axis.metric) for value in axis.values
    )
    frame = pd.DataFrame(
        {
            "value": [p["value"] for p in points],
            "metric": [p["metric"] for p in points],
            "error": [p["error"] or "" for p in points],
        }
    )
    frame.to_csv(out / "sweep.csv", index=False, float_format="%.17g")
    result = {
        "parameter": axis.parameter,
        "metric": axis.metric,
        "values": list(axis.values),
        "metrics": [p["metric"] for p in points],
        "failures": sum(p["error"] is not None for p in points),
        "slope": log_log_slope(frame["value"], frame["metric"]),
    }
    if axis.metric == "degiorgi":
        reports = [p["report"] for p in points if p.get("report") is not None]
        result["fit"] = fit_exponent(reports)
        result["converged"] = [report.converged for report in reports]
    report_serializer.write_json(result, out / "sweep.json")
    return result


def write_riemann_profile(config, out=None):
    """
    Exact solution of the riemann preset on the grid at t_end, as snapshot CSV.

    Returns:
        (audit dict, artifact directory)
    """
    preset = config.preset
    if preset.id != "riemann":
        raise ConfigurationError(f"the riemann command needs the riemann preset, got '{preset.id}'")
    out = output_directory(config, out)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.grid.build()
    solution = solve_riemann(ConservedState(*preset.left), ConservedState(*preset.right))
    x_split = 0.5 * (grid.x_min + grid.x_max) if preset.x_split is None else preset.x_split
    rho, m = exact_field(solution, grid.centers, config.scheme.t_end, x_split)
    write_field_csv(out / "riemann_exact.csv", grid.centers, rho, m, solution.rho_floor)
    audit = check_solution(solution)
    report_serializer.write_json({"solution": solution.to_dict(), "audit": audit}, out / "riemann.json")
    return audit, out
