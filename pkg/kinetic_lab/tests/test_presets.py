"""
Tests for the initial-data presets.
"""

from unittest import TestCase

import numpy as np
import pytest

from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.models.grid import Boundary, Grid1D
from kinetic_lab.models.state import ConservedState, StateBounds
from kinetic_lab.scripts.presets import (
    build_initial,
    random_linfty,
    random_riemann_states,
    riemann,
    shock_pair,
    smooth_sine,
)
from kinetic_lab.serializers.config_serializer import PresetSpec


class PresetTestCase(TestCase):

    def setUp(self):
        self.grid = Grid1D(0.0, 1.0, 12, Boundary.OUTFLOW)

    def test_riemann_splits_at_midpoint(self):
        field = riemann(self.grid, (1.0, 0.0), ConservedState(2.0, -1.0))
        np.testing.assert_array_equal(field.rho, [1.0] * 6 + [2.0] * 6)
        np.testing.assert_array_equal(field.m, [0.0] * 6 + [-1.0] * 6)

    def test_riemann_needs_both_states(self):
        with self.assertRaises(ConfigurationError):
            riemann(self.grid, None, (1.0, 0.0))

    def test_smooth_sine(self):
        field = smooth_sine(self.grid, amplitude=0.2, rho0=2.0, velocity0=0.5)
        self.assertAlmostEqual(field.rho.mean(), 2.0, places=12)
        np.testing.assert_allclose(field.m, 0.5 * field.rho)
        self.assertLessEqual(field.rho.max(), 2.4)

    def test_smooth_sine_rejects_vacuum_amplitude(self):
        with self.assertRaises(ConfigurationError):
            smooth_sine(self.grid, amplitude=1.0)

    def test_shock_pair_default_collides_at_midpoint(self):
        field = shock_pair(self.grid)
        np.testing.assert_array_equal(field.m[:6], 0.5)
        np.testing.assert_array_equal(field.m[6:], -0.5)

    def test_shock_pair_with_middle_third(self):
        field = shock_pair(self.grid, middle=(3.0, 0.0))
        np.testing.assert_array_equal(field.rho, [1.0] * 4 + [3.0] * 4 + [1.0] * 4)


def test_random_linfty_is_seeded_and_bounded():
    grid = Grid1D(0.0, 1.0, 64, Boundary.PERIODIC)
    first = random_linfty(grid, seed=3, blocks=8)
    again = random_linfty(grid, seed=3, blocks=8)
    other = random_linfty(grid, seed=4, blocks=8)
    np.testing.assert_array_equal(first.rho, again.rho)
    assert not np.array_equal(first.rho, other.rho)
    assert np.unique(first.rho).size == 8
    assert StateBounds(Gamma=3.0, M=0.5).contains(first)


def test_random_linfty_rejects_inverted_range():
    with pytest.raises(ConfigurationError):
        random_linfty(Grid1D(0.0, 1.0, 8), rho_min=2.0, rho_max=1.0)


def test_random_riemann_states_open_no_vacuum():
    pairs = random_riemann_states(seed=11, count=15)
    assert len(pairs) == 15
    for left, right in pairs:
        assert left.velocity + left.rho / 2.0 > right.velocity - right.rho / 2.0
        assert 0.5 <= left.rho <= 2.0


def test_build_initial_dispatches_and_overrides_seed():
    grid = Grid1D(0.0, 1.0, 32)
    spec = PresetSpec(id="random_linfty", seed=1)
    np.testing.assert_array_equal(build_initial(spec, grid).rho, random_linfty(grid, 1).rho)
    np.testing.assert_array_equal(build_initial(spec, grid, seed=9).rho, random_linfty(grid, 9).rho)
    sine = build_initial(PresetSpec(id="smooth_sine", amplitude=0.3), grid)
    np.testing.assert_allclose(sine.rho, smooth_sine(grid, 0.3).rho)
