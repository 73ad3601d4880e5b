"""
Persistence of SpaceTimeRecords.

A record directory holds manifest.json (grid, scheme config, times, per-step
dissipation totals, audit summary) and snapshots/snapshot_NNNNNN.csv with
columns x, rho, m, lambda1, lambda2, vacuum. Vacuum cells carry
lambda1 = lambda2 = 0 and vacuum = 1.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from kinetic_lab.exceptions import ConfigurationError, InvariantViolation
from kinetic_lab.models.grid import Grid1D
from kinetic_lab.models.record import SchemeConfig, SpaceTimeRecord
from kinetic_lab.models.state import interval_from_conserved

logger = logging.getLogger(__name__)

SNAPSHOT_COLUMNS = ["x", "rho", "m", "lambda1", "lambda2", "vacuum"]
FLOAT_FORMAT = "%.17g"
MANIFEST = "manifest.json"
SNAPSHOT_DIR = "snapshots"


def field_frame(x, rho, m, rho_floor):
    """Snapshot table of one field."""
    lambda1, lambda2, vacuum = interval_from_conserved(rho, m, rho_floor)
    return pd.DataFrame(
        {
            "x": np.asarray(x, dtype=float),
            "rho": np.asarray(rho, dtype=float),
            "m": np.asarray(m, dtype=float),
            "lambda1": np.where(vacuum, 0.0, lambda1),
            "lambda2": np.where(vacuum, 0.0, lambda2),
            "vacuum": vacuum.astype(int),
        },
        columns=SNAPSHOT_COLUMNS,
    )


def write_field_csv(path, x, rho, m, rho_floor):
    frame = field_frame(x, rho, m, rho_floor)
    if frame[SNAPSHOT_COLUMNS[:-1]].isna().any().any():
        raise InvariantViolation(f"refusing to write NaN into {path}")
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def read_field_csv(path):
    """Snapshot table with its columns checked."""
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [column for column in SNAPSHOT_COLUMNS if column not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path} is missing columns {missing}")
    return frame


def _snapshot_name(index):
    return f"snapshot_{index:06d}.csv"


def write_record(record, directory):
    """
    Write a record to a directory (created if needed).

    Returns:
        Path of the manifest
    """
    directory = Path(directory)
    snapshots = directory / SNAPSHOT_DIR
    snapshots.mkdir(parents=True, exist_ok=True)
    x = record.grid.centers
    files = []
    for index in range(record.n_snapshots):
        name = _snapshot_name(index)
        write_field_csv(snapshots / name, x, record.rho[index], record.m[index], record.rho_floor)
        files.append(f"{SNAPSHOT_DIR}/{name}")

    manifest = record.metadata()
    manifest["times"] = [float(t) for t in record.times]
    manifest["snapshots"] = files
    manifest["step_dissipation"] = [float(d) for d in record.dissipation]
    manifest["audit"] = None if record.audit is None else record.audit.summary(record.scheme)
    path = directory / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Wrote {record.n_snapshots} snapshots to {directory}")
    return path


def load_record(directory):
    """
    Rebuild a SpaceTimeRecord from a directory written by write_record.

    The per-step audit lists are not persisted; the reloaded record has no audit.
    """
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.is_file():
        raise ConfigurationError(f"no {MANIFEST} in {directory}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    grid = Grid1D.from_dict(manifest["grid"])
    rho, m = [], []
    for name in manifest["snapshots"]:
        frame = read_field_csv(directory / name)
        if len(frame) != grid.n_cells:
            raise ConfigurationError(f"{name} has {len(frame)} rows, grid has {grid.n_cells} cells")
        rho.append(frame["rho"].to_numpy(dtype=float))
        m.append(frame["m"].to_numpy(dtype=float))
    return SpaceTimeRecord(
        grid=grid,
        times=np.array(manifest["times"], dtype=float),
        rho=np.array(rho),
        m=np.array(m),
        config=SchemeConfig.from_dict(manifest["config"]),
        L=manifest["L"],
        dissipation=np.array(manifest.get("step_dissipation", []), dtype=float),
        rho_floor=manifest["rho_floor"],
    )
