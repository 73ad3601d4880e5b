"""
Tests for SchemeConfig, RunAudit and SpaceTimeRecord.
"""

from unittest import TestCase

import numpy as np
import pytest

from kinetic_lab.exceptions import ConfigurationError, InvariantViolation
from kinetic_lab.models.grid import Grid1D
from kinetic_lab.models.record import RunAudit, SchemeConfig, SchemeKind, SpaceTimeRecord


class SchemeConfigTestCase(TestCase):
    """Validation of the time-stepping parameters."""

    def test_defaults(self):
        config = SchemeConfig(t_end=0.2)
        self.assertEqual(config.cfl, 0.5)
        self.assertIs(config.scheme, SchemeKind.KINETIC)
        self.assertEqual(config.stride, 1)

    def test_cfl_bounds(self):
        for cfl in (0.0, -0.1, 1.5):
            with self.subTest(cfl=cfl):
                with self.assertRaises(ConfigurationError):
                    SchemeConfig(t_end=0.2, cfl=cfl)

    def test_godunov_needs_half_cfl(self):
        with self.assertRaises(ConfigurationError):
            SchemeConfig(t_end=0.2, cfl=0.6, scheme="godunov")
        self.assertIs(SchemeConfig(t_end=0.2, cfl=0.5, scheme="godunov").scheme, SchemeKind.GODUNOV)

    def test_bad_t_end_and_stride(self):
        with self.assertRaises(ConfigurationError):
            SchemeConfig(t_end=-1.0)
        with self.assertRaises(ConfigurationError):
            SchemeConfig(t_end=1.0, stride=0)

    def test_dict_round_trip(self):
        config = SchemeConfig(t_end=0.3, cfl=0.4, scheme="godunov", stride=2)
        self.assertEqual(SchemeConfig.from_dict(config.to_dict()), config)


def test_audit_summary_flags_drift():
    audit = RunAudit(conservative=True)
    audit.record_step(1e-15, 0.0, 0.0, 0.0, 0.0)
    assert audit.summary()["passed"]
    audit.record_step(1e-6, 0.0, 0.0, 0.0, 0.0)
    summary = audit.summary()
    assert summary["steps"] == 2
    assert summary["max_mass_drift_per_step"] == 1e-6
    assert not summary["passed"]


def test_audit_ignores_invariant_growth_for_godunov():
    audit = RunAudit(conservative=False)
    audit.record_step(0.0, 0.0, 0.1, 0.1, 0.0)
    assert not audit.summary(SchemeKind.KINETIC)["passed"]
    assert audit.summary(SchemeKind.GODUNOV)["passed"]


@pytest.fixture
def two_snapshot_record():
    grid = Grid1D(0.0, 1.0, 4)
    rho = np.array([[1.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 2.0]])
    m = np.zeros_like(rho)
    return SpaceTimeRecord(grid, np.array([0.0, 1.0]), rho, m, SchemeConfig(t_end=1.0), L=2.0)


def test_sample_is_linear_in_time(two_snapshot_record):
    rho, m = two_snapshot_record.sample(0.25, 0.6)
    assert rho == pytest.approx(1.25)
    assert m == pytest.approx(0.0)


def test_sample_clamps_times(two_snapshot_record):
    rho, _ = two_snapshot_record.sample(np.array([-1.0, 5.0]), 0.1)
    np.testing.assert_allclose(rho, [1.0, 2.0])


def test_record_arrays_are_read_only(two_snapshot_record):
    with pytest.raises(ValueError):
        two_snapshot_record.rho[0, 0] = 5.0
    with pytest.raises(ValueError):
        two_snapshot_record.times[0] = 0.5


def test_record_rejects_unordered_times():
    grid = Grid1D(0.0, 1.0, 2)
    with pytest.raises(InvariantViolation):
        SpaceTimeRecord(grid, [0.0, 0.0], np.ones((2, 2)), np.zeros((2, 2)), SchemeConfig(t_end=0.0), L=1.0)


def test_record_rejects_wrong_shape():
    grid = Grid1D(0.0, 1.0, 2)
    with pytest.raises(InvariantViolation):
        SpaceTimeRecord(grid, [0.0], np.ones((1, 3)), np.zeros((1, 3)), SchemeConfig(t_end=0.0), L=1.0)


def test_metadata(two_snapshot_record):
    metadata = two_snapshot_record.metadata()
    assert metadata["n_snapshots"] == 2
    assert metadata["t_final"] == 1.0
    assert metadata["grid"]["n_cells"] == 4
