"""
Tests for the run pipeline: artifacts, batches and sweeps.
"""

import math

import pandas as pd
import pytest

from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.pipeline import AGGREGATE, SUMMARY, run_pipeline, sweep, write_riemann_profile
from kinetic_lab.serializers.config_serializer import validate_config
from kinetic_lab.serializers.report_serializer import read_dissipation, read_json
from kinetic_lab.serializers.snapshot_serializer import load_record, read_field_csv
from kinetic_lab.tests.reference_states import SHOCK_SPEED


def shock_config(**overrides):
    data = {
        "name": "shock",
        "grid": {"x_min": -1.0, "x_max": 1.0, "n_cells": 128, "boundary": "outflow"},
        "scheme": {"t_end": 0.2},
        "preset": {"id": "riemann", "left": [1.0, 0.0], "right": [2.0, SHOCK_SPEED], "x_split": 0.0},
        "checkers": [
            {"kind": "exact_error", "params": {"tolerance": 0.2}},
            {"kind": "entropy_audit"},
            {"kind": "mu"},
        ],
    }
    data.update(overrides)
    return validate_config(data)


def without_timestamp(summary):
    return {key: value for key, value in summary.items() if key != "generated_at"}


def test_single_run_writes_artifacts(tmp_path):
    status, out = run_pipeline(shock_config(), out=tmp_path / "run")
    assert status == 0
    summary = read_json(out / SUMMARY)
    assert summary["passed"] is True
    assert [entry["kind"] for entry in summary["checkers"]] == ["exact_error", "entropy_audit", "mu"]
    assert summary["total_dissipation"] > 0.0
    assert (out / "entropy_audit.json").is_file()
    record = load_record(out / "record")
    assert record.grid.n_cells == 128
    field = read_dissipation(out / "dissipation.csv", out / "dissipation.json")
    assert field.total() == pytest.approx(summary["checkers"][2]["details"]["total_mass"])


def test_repeated_runs_give_identical_summaries(tmp_path):
    config = shock_config()
    run_pipeline(config, out=tmp_path / "a")
    run_pipeline(config, out=tmp_path / "b")
    first = read_json(tmp_path / "a" / SUMMARY)
    second = read_json(tmp_path / "b" / SUMMARY)
    assert without_timestamp(first) == without_timestamp(second)


def test_dry_run_creates_nothing(tmp_path):
    status, out = run_pipeline(shock_config(), out=tmp_path / "dry", dry_run=True)
    assert status == 0
    assert not out.exists()


def test_checker_errors_are_reported_not_raised(tmp_path):
    config = shock_config(checkers=[{"kind": "trace", "params": {"x0": 0.9}}])
    status, out = run_pipeline(config, out=tmp_path)
    assert status == 1
    (entry,) = read_json(out / SUMMARY)["checkers"]
    assert entry["passed"] is False
    assert entry["error"].startswith("GeometryError")


def test_only_restricts_checkers(tmp_path):
    status, out = run_pipeline(shock_config(), out=tmp_path, only="mu")
    summary = read_json(out / SUMMARY)
    assert [entry["kind"] for entry in summary["checkers"]] == ["mu"]
    assert status == 0


def test_trace_and_rh_on_shock_line(tmp_path):
    line = {"x0": 0.0, "speed": SHOCK_SPEED, "t_from": 0.1}
    config = shock_config(
        grid={"x_min": -1.0, "x_max": 1.0, "n_cells": 400, "boundary": "outflow"},
        checkers=[
            {"kind": "trace", "params": line},
            {"kind": "rh", "params": {**line, "tolerance": 0.1}},
        ],
    )
    status, out = run_pipeline(config, out=tmp_path)
    assert status == 0
    ladder = pd.read_csv(out / "trace_ladder.csv")
    assert ladder["k"].tolist() == [0, 1, 2]
    assert read_json(out / "rh.json")["passed"] is True


def test_batch_over_seeds(tmp_path):
    config = validate_config(
        {
            "name": "random",
            "grid": {"n_cells": 64, "boundary": "periodic"},
            "scheme": {"t_end": 0.02},
            "preset": {"id": "random_linfty", "blocks": 4},
            "checkers": [{"kind": "entropy_audit"}],
            "batch": {"seeds": [3, 1, 2]},
        }
    )
    status, out = run_pipeline(config, out=tmp_path, threads=2)
    aggregate = pd.read_csv(out / AGGREGATE)
    assert aggregate["seed"].tolist() == [3, 1, 2]
    assert "entropy_audit_passed" in aggregate.columns
    for seed in (1, 2, 3):
        assert (out / f"seed_{seed}" / SUMMARY).is_file()
    summary = read_json(out / SUMMARY)
    assert summary["seeds"] == [3, 1, 2]
    assert status == (0 if summary["passed"] else 1)


def test_sweep_needs_an_axis(tmp_path):
    with pytest.raises(ConfigurationError):
        sweep(shock_config(), out=tmp_path)


def test_sweep_over_resolution(tmp_path):
    config = shock_config(
        checkers=[],
        sweep={"parameter": "grid.n_cells", "values": [32, 64, 128], "metric": "l1_exact"},
    )
    result = sweep(config, out=tmp_path)
    assert result["failures"] == 0
    assert result["slope"] < 0.0
    frame = pd.read_csv(tmp_path / "sweep.csv")
    assert frame["value"].tolist() == [32, 64, 128]
    assert read_json(tmp_path / "sweep.json")["parameter"] == "grid.n_cells"


def test_sweep_records_failed_points(tmp_path):
    config = shock_config(checkers=[], sweep={"parameter": "grid.n_cells", "values": [1, 32]})
    result = sweep(config, out=tmp_path)
    assert result["failures"] == 1
    assert math.isnan(result["metrics"][0])
    assert result["slope"] is None


def test_riemann_profile(tmp_path):
    audit, out = write_riemann_profile(shock_config(), out=tmp_path)
    assert audit["passed"]
    frame = read_field_csv(out / "riemann_exact.csv")
    assert len(frame) == 128
    assert frame["rho"].min() == pytest.approx(1.0)
    assert frame["rho"].max() == pytest.approx(2.0)


def test_riemann_profile_needs_riemann_preset(tmp_path):
    config = shock_config(preset={"id": "smooth_sine"})
    with pytest.raises(ConfigurationError):
        write_riemann_profile(config, out=tmp_path)


def test_sampled_semicontinuity_points_avoid_the_shock(tmp_path):
    config = shock_config(
        grid={"x_min": -1.0, "x_max": 1.0, "n_cells": 400, "boundary": "outflow"},
        checkers=[{"kind": "semicont", "params": {"n_points": 20}}],
    )
    status, out = run_pipeline(config, out=tmp_path)
    assert status == 0
    report = read_json(out / "semicont.json")
    margin = 16 * 2.0 / 400
    assert len(report["points"]) == 20
    for point in report["points"]:
        t, x = point["point"]
        assert point["vmo"] is True
        assert margin <= t <= 0.2 - margin
        assert abs(x - SHOCK_SPEED * t) > margin * (1.0 - SHOCK_SPEED)
