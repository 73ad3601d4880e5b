"""
Tests for the CharacteristicService.
"""

from unittest import TestCase

import numpy as np
import pytest

from kinetic_lab.exceptions import ConfigurationError, GeometryError
from kinetic_lab.models.characteristic import MollifierKernel
from kinetic_lab.models.reports import DichotomyLabel
from kinetic_lab.models.state import interval_from_conserved
from kinetic_lab.services.characteristic_service import CharacteristicService
from kinetic_lab.tests.reference_states import FAN_AGE, SHOCK_LEFT, SHOCK_RIGHT, SHOCK_SPEED


class ConstantFlowTestCase(TestCase):
    """Uniform state rho = 1, u = 1 on a periodic grid: lambda1 = 0.5, lambda2 = 1.5."""

    @pytest.fixture(autouse=True)
    def _record(self, constant_record):
        self.record = constant_record
        self.service = CharacteristicService(constant_record)

    def test_default_sigma(self):
        self.assertAlmostEqual(self.service.default_sigma(1), 0.5, places=9)
        self.assertAlmostEqual(self.service.default_sigma(2), 1.5, places=9)

    def test_mollified_velocity_is_the_invariant(self):
        kernel = MollifierKernel(0.05)
        sigma1 = self.service.default_sigma(1)
        sigma2 = self.service.default_sigma(2)
        self.assertAlmostEqual(self.service.mollified_velocity(kernel, 0.1, 0.5, 1, sigma1), 0.5, places=9)
        self.assertAlmostEqual(self.service.mollified_velocity(kernel, 0.1, 0.5, 2, sigma2), 1.5, places=9)

    def test_cap_is_applied(self):
        kernel = MollifierKernel(0.05)
        self.assertAlmostEqual(self.service.mollified_velocity(kernel, 0.1, 0.5, 1, 0.2), 0.2, places=12)
        self.assertAlmostEqual(self.service.mollified_velocity(kernel, 0.1, 0.5, 2, 2.0), 2.0, places=12)

    def test_characteristic_is_a_straight_line(self):
        run = self.service.solve_characteristic(0.5)
        dx = self.record.grid.dx
        np.testing.assert_allclose(run.eps_ladder, [16 * dx, 8 * dx, 4 * dx])
        self.assertAlmostEqual(run.times[-1], self.record.t_final - 16 * dx, places=12)
        np.testing.assert_allclose(run.h, 0.5 + 0.5 * run.times, atol=1e-8)
        self.assertEqual(run.violation_fraction, 0.0)
        self.assertFalse(run.vacuum_touched)
        self.assertTrue(run.passed)

    def test_unknown_family(self):
        with self.assertRaises(ConfigurationError):
            self.service.solve_characteristic(0.5, family=3)
        with self.assertRaises(ConfigurationError):
            self.service.mollified_velocity(MollifierKernel(0.05), 0.1, 0.5, 0, 0.5)

    def test_mollifier_past_final_time(self):
        with self.assertRaises(GeometryError):
            self.service.mollified_velocity(MollifierKernel(0.05), 0.38, 0.5, 1, 0.5)

    def test_no_room_for_widest_mollifier(self):
        with self.assertRaises(GeometryError):
            self.service.solve_characteristic(0.5, eps_ladder=[0.5, 0.25])


def test_capped_speed_on_vacuum():
    service = CharacteristicService.__new__(CharacteristicService)
    lambda1 = np.array([-1.0, 0.3, 0.0])
    lambda2 = np.array([1.0, 0.8, 0.0])
    vacuum = np.array([False, False, True])
    np.testing.assert_allclose(service.capped_speed(lambda1, lambda2, vacuum, 1, 0.1), [-1.0, 0.1, 0.1])
    np.testing.assert_allclose(service.capped_speed(lambda1, lambda2, vacuum, 2, 0.9), [1.0, 0.9, 0.9])


@pytest.fixture(scope="module")
def shock_characteristic(shock_record):
    service = CharacteristicService(shock_record, n_jobs=1)
    return service.solve_characteristic(0.0, family=1, eps_ladder=[0.04, 0.02, 0.01])


def test_shock_characteristic_follows_the_shock(shock_characteristic):
    lambda1_left = float(interval_from_conserved(SHOCK_LEFT.rho, SHOCK_LEFT.m)[0])
    lambda1_right = float(interval_from_conserved(SHOCK_RIGHT.rho, SHOCK_RIGHT.m)[0])
    speed = shock_characteristic.mean_speed()
    assert lambda1_right < speed < lambda1_left
    assert speed == pytest.approx(SHOCK_SPEED, abs=0.1)


def test_shock_characteristic_respects_trace_bounds(shock_characteristic):
    run = shock_characteristic
    assert run.sigma == pytest.approx(-0.5, abs=0.05)
    assert run.violation_fraction == 0.0
    assert run.dichotomy is not None
    assert run.passed
    assert np.all(np.abs(run.hdot) <= run.velocity_bound + 1e-12)
    assert len(run.h_eps) == 3


@pytest.fixture(scope="module")
def fan_characteristic(fan_record):
    # lambda1 = x / (t + FAN_AGE) inside the fan, so x = -0.5 (t + FAN_AGE) is a 1-characteristic
    return CharacteristicService(fan_record, n_jobs=1).solve_characteristic(-0.5 * FAN_AGE, family=1)


def test_fan_characteristic_follows_its_ray(fan_characteristic):
    run_ = fan_characteristic
    np.testing.assert_allclose(run_.h, -0.5 * (run_.times + FAN_AGE), atol=0.02)


def test_fan_characteristic_respects_bounds(fan_characteristic):
    run_ = fan_characteristic
    assert run_.violation_fraction <= 0.01
    assert run_.passed
    assert np.all(run_.lower_bound <= run_.upper_bound)


def test_fan_characteristic_is_continuous(fan_characteristic):
    report = fan_characteristic.dichotomy
    assert report.shock_fraction == 0.0
    assert all(label is DichotomyLabel.CONTINUOUS for label in report.labels)
