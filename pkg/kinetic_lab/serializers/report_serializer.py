"""
JSON reports and plot-data CSV for the diagnostics.

Every writer has a matching reader; floats are written with 17 significant
digits so CSV values reload exactly.
"""

import dataclasses
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.models.dissipation import DissipationField

FLOAT_FORMAT = "%.17g"


def to_jsonable(value):
    """Plain JSON types for dataclasses, enums and numpy values; non-finite floats become None."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(data, path):
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(data), indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _write_frame(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def _read_frame(path, columns):
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path} is missing columns {missing}")
    return frame


# Trace ladder -----------------------------------------------------------

TRACE_COLUMNS = ["k", "offset_max", "error", "uniform_error"]


def write_trace_csv(report, path):
    frame = pd.DataFrame(
        {
            "k": np.arange(report.errors.size),
            "offset_max": report.offsets_max,
            "error": report.errors,
            "uniform_error": report.uniform_errors,
        },
        columns=TRACE_COLUMNS,
    )
    return _write_frame(frame, path)


def read_trace_csv(path):
    return _read_frame(path, TRACE_COLUMNS)


# De Giorgi masses -------------------------------------------------------

DEGIORGI_COLUMNS = ["k", "radius", "level", "mass"]


def write_degiorgi_csv(report, path):
    frame = pd.DataFrame(
        {
            "k": np.arange(report.masses.size),
            "radius": report.radii,
            "level": report.levels,
            "mass": report.masses,
        },
        columns=DEGIORGI_COLUMNS,
    )
    return _write_frame(frame, path)


def read_degiorgi_csv(path):
    return _read_frame(path, DEGIORGI_COLUMNS)


# Envelope ladders -------------------------------------------------------

ENVELOPE_COLUMNS = [
    "point", "t", "x", "radius", "rho_mean", "rho_sup", "lambda1_mean", "lambda1_inf",
    "lambda2_mean", "lambda2_sup", "m_mean", "m_sup", "m_inf", "defect",
]


def write_envelope_csv(report, path):
    rows = []
    for index, point in enumerate(report.points):
        ladder = point.ladder
        for j, radius in enumerate(ladder.radii):
            rows.append({
                "point": index,
                "t": point.point[0],
                "x": point.point[1],
                "radius": radius,
                **{name: getattr(ladder, name)[j] for name in ENVELOPE_COLUMNS[4:]},
            })
    return _write_frame(pd.DataFrame(rows, columns=ENVELOPE_COLUMNS), path)


def read_envelope_csv(path):
    return _read_frame(path, ENVELOPE_COLUMNS)


# Characteristics --------------------------------------------------------

def characteristic_columns(family):
    if family == 1:
        return ["t", "h", "hdot", "lambda1_plus", "lambda1_sup", "violation_flag"]
    return ["t", "h", "hdot", "lambda2_inf", "lambda2_minus", "violation_flag"]


def write_characteristic_csv(run, path):
    """Limit curve with its bounds; unverified runs leave the bound columns empty."""
    columns = characteristic_columns(run.family)
    n = run.times.size
    lower = run.lower_bound if run.lower_bound is not None else np.full(n, np.nan)
    upper = run.upper_bound if run.upper_bound is not None else np.full(n, np.nan)
    flags = run.violation_flags if run.violation_flags is not None else np.zeros(n, dtype=bool)
    frame = pd.DataFrame(
        dict(zip(columns, [run.times, run.h, run.hdot, lower, upper, flags.astype(int)])),
        columns=columns,
    )
    return _write_frame(frame, path)


def read_characteristic_csv(path):
    frame = pd.read_csv(path, float_precision="round_trip")
    if "lambda1_plus" in frame.columns:
        columns = characteristic_columns(1)
    else:
        columns = characteristic_columns(2)
    return _read_frame(path, columns)


def characteristic_summary(run):
    return {
        "family": run.family,
        "sigma": run.sigma,
        "x0": run.x0,
        "eps_ladder": run.eps_ladder,
        "ladder_norms": run.ladder_norms,
        "ladder_converged": run.ladder_converged,
        "velocity_bound": run.velocity_bound,
        "max_abs_hdot": [float(np.max(np.abs(hdot))) for hdot in run.hdot_eps],
        "vacuum_touched": run.vacuum_touched,
        "violation_fraction": run.violation_fraction,
        "tolerance": run.tolerance,
        "dichotomy_passed": None if run.dichotomy is None else run.dichotomy.passed,
        "passed": run.passed,
    }


# Dissipation measure ----------------------------------------------------

DISSIPATION_COLUMNS = ["t_bin", "x_bin", "v0", "mass"]


def write_dissipation(field, csv_path, summary_path):
    """Long-format CSV of the bins plus a JSON summary carrying the bin geometry."""
    n_t, n_x, n_v = field.mass.shape
    t_bin, x_bin, v_index = np.meshgrid(np.arange(n_t), np.arange(n_x), np.arange(n_v), indexing="ij")
    frame = pd.DataFrame(
        {
            "t_bin": t_bin.ravel(),
            "x_bin": x_bin.ravel(),
            "v0": field.v_nodes[v_index.ravel()],
            "mass": field.mass.ravel(),
        },
        columns=DISSIPATION_COLUMNS,
    )
    _write_frame(frame, csv_path)
    summary = field.summary()
    summary.update({"t_edges": field.t_edges, "x_edges": field.x_edges, "v_nodes": field.v_nodes})
    write_json(summary, summary_path)
    return Path(csv_path), Path(summary_path)


def read_dissipation(csv_path, summary_path):
    frame = _read_frame(csv_path, DISSIPATION_COLUMNS)
    summary = read_json(summary_path)
    t_edges = np.array(summary["t_edges"], dtype=float)
    x_edges = np.array(summary["x_edges"], dtype=float)
    v_nodes = np.array(summary["v_nodes"], dtype=float)
    mass = np.zeros((t_edges.size - 1, x_edges.size - 1, v_nodes.size))
    v_index = np.searchsorted(v_nodes, frame["v0"].to_numpy(dtype=float))
    v_index = np.clip(v_index, 0, v_nodes.size - 1)
    mass[frame["t_bin"].to_numpy(), frame["x_bin"].to_numpy(), v_index] = frame["mass"].to_numpy(dtype=float)
    return DissipationField(t_edges, x_edges, v_nodes, float(summary["dv"]), mass, float(summary["L"]))
