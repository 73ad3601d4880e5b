"""
Tests for the EntropyService.
"""

from types import SimpleNamespace
from unittest import TestCase

import numpy as np
import pytest

from kinetic_lab.exceptions import ConfigurationError, GeometryError, UnsupportedSchemeError
from kinetic_lab.models.dissipation import EntropyPair
from kinetic_lab.models.grid import Grid1D
from kinetic_lab.models.record import SchemeConfig
from kinetic_lab.scripts.presets import smooth_sine
from kinetic_lab.services.entropy_service import EntropyService, entropy_eval, ratio_spread
from kinetic_lab.services.solver_service import run
from kinetic_lab.tests.reference_states import SHOCK_LEFT, SHOCK_RIGHT, SHOCK_SPEED


def shock_dissipation_rate():
    """s [eta] - [q] for the energy pair across the reference shock."""
    energy = EntropyPair.energy()
    eta_l, q_l = entropy_eval(energy, SHOCK_LEFT)
    eta_r, q_r = entropy_eval(energy, SHOCK_RIGHT)
    return SHOCK_SPEED * (eta_r - eta_l) - (q_r - q_l)


def test_mu_bins_are_nonnegative(shock_mu):
    assert shock_mu.mass.min() >= -1e-12
    assert shock_mu.total() > 0.0
    assert np.all(np.abs(shock_mu.v_nodes) < shock_mu.L)


def test_mu_total_matches_collapse_log(shock_record, shock_mu):
    logged = float(np.sum(shock_record.dissipation))
    assert shock_mu.total() == pytest.approx(logged, rel=0.1)


def test_constant_state_has_no_dissipation(constant_record):
    mu = EntropyService(constant_record, n_jobs=1).mu_estimate()
    assert abs(mu.total()) <= 1e-10


def test_late_dissipation_rate_matches_shock_formula(shock_record):
    oracle = shock_dissipation_rate()
    assert oracle > 0.0
    # skip the start-up layer while the discrete shock profile forms
    starts = shock_record.times[:-1]
    late = starts >= 0.5 * shock_record.t_final
    rate = float(np.sum(shock_record.dissipation[late])) / (shock_record.t_final - starts[late][0])
    assert rate == pytest.approx(oracle, rel=0.1)
    assert EntropyService(shock_record).dissipation_rate() > 0.0


def test_entropy_audit_on_outflow_grid(shock_record):
    report = EntropyService(shock_record).entropy_audit()
    assert report.passed
    assert report.entropy == "energy"
    assert report.total_drop == pytest.approx(report.collapse_dissipation, abs=1e-9)


def test_entropy_audit_with_kinetic_pair(smooth_record):
    report = EntropyService(smooth_record).entropy_audit(EntropyPair.plus(0.2))
    assert report.passed
    assert report.changes.size == smooth_record.n_snapshots - 1


def test_jump_density_concentrates_on_shock(shock_record, shock_mu):
    service = EntropyService(shock_record)
    on_shock = service.jump_density(shock_mu, (0.15, SHOCK_SPEED * 0.15), [0.06, 0.03])
    off_shock = service.jump_density(shock_mu, (0.15, 0.5), [0.03, 0.06])
    np.testing.assert_allclose(on_shock.radii, [0.03, 0.06])
    assert on_shock.limit > 1e-6
    assert off_shock.limit < 1e-10


class TvBoundTestCase(TestCase):
    """Ratio of dissipation to kinetic mass on nested balls."""

    @pytest.fixture(autouse=True)
    def _records(self, shock_record, shock_mu):
        self.record = shock_record
        self.mu = shock_mu
        self.service = EntropyService(self.record, n_jobs=1)
        self.center = (0.15, SHOCK_SPEED * 0.15)

    def test_ratio_is_positive_between_the_states(self):
        report = self.service.tv_bound_check(self.mu, 0.04, 0.08, -1.0, center=self.center)
        self.assertGreater(report.ratio, 0.0)
        self.assertTrue(np.isfinite(report.ratio))
        self.assertGreater(report.denominator, 0.0)

    def test_level_below_support_gives_zero(self):
        report = self.service.tv_bound_check(self.mu, 0.04, 0.08, -self.record.L, center=self.center)
        self.assertEqual(report.numerator, 0.0)
        self.assertEqual(report.ratio, 0.0)

    def test_mirrored_side(self):
        report = self.service.tv_bound_check(self.mu, 0.04, 0.08, -1.0, center=self.center, side="above")
        self.assertEqual(report.side, "above")
        self.assertGreater(report.denominator, 0.0)

    def test_radii_must_nest(self):
        with self.assertRaises(GeometryError):
            self.service.tv_bound_check(self.mu, 0.08, 0.04, -1.0, center=self.center)

    def test_ball_must_fit_record(self):
        with self.assertRaises(GeometryError):
            self.service.tv_bound_check(self.mu, 0.04, 0.08, -1.0, center=(0.02, 0.0))
        with self.assertRaises(GeometryError):
            self.service.tv_bound_check(self.mu, 0.04, 0.08, -1.0, center=(0.15, 0.95))

    def test_unknown_side(self):
        with self.assertRaises(ConfigurationError):
            self.service.tv_bound_check(self.mu, 0.04, 0.08, -1.0, center=self.center, side="left")


class UnsupportedRecordTestCase(TestCase):
    """mu needs a kinetic record with every step logged."""

    def setUp(self):
        self.grid = Grid1D(0.0, 1.0, 16)
        self.initial = smooth_sine(self.grid)

    def test_godunov_record(self):
        record = run(self.initial, self.grid, SchemeConfig(t_end=0.02, scheme="godunov"))
        with self.assertRaises(UnsupportedSchemeError):
            EntropyService(record).mu_estimate()

    def test_strided_record(self):
        record = run(self.initial, self.grid, SchemeConfig(t_end=0.05, stride=2))
        with self.assertRaises(UnsupportedSchemeError):
            EntropyService(record).mu_estimate()


def test_ratio_spread():
    reports = [SimpleNamespace(ratio=value) for value in (1.0, 2.0, 1.5)]
    assert ratio_spread(reports) == 2.0
    assert ratio_spread([SimpleNamespace(ratio=0.0), SimpleNamespace(ratio=1.0)]) == np.inf
    assert ratio_spread([]) == 1.0
