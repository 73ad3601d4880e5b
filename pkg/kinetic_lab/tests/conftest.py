"""
Shared records for the service tests.

Records are built once per session; every service treats them as read only.
"""

import pytest

from kinetic_lab.models.grid import Boundary, Grid1D
from kinetic_lab.models.record import SchemeConfig
from kinetic_lab.models.state import ConservedField, ConservedState
from kinetic_lab.scripts.presets import riemann, smooth_sine
from kinetic_lab.services.entropy_service import EntropyService
from kinetic_lab.services.solver_service import run
from kinetic_lab.tests.reference_states import FAN_AGE, SHOCK_LEFT, SHOCK_RIGHT, developed_fan


@pytest.fixture(scope="session")
def shock_grid():
    return Grid1D(-1.0, 1.0, 400, Boundary.OUTFLOW)


@pytest.fixture(scope="session")
def shock_record(shock_grid):
    initial = riemann(shock_grid, SHOCK_LEFT, SHOCK_RIGHT, x_split=0.0)
    return run(initial, shock_grid, SchemeConfig(t_end=0.3))


@pytest.fixture(scope="session")
def constant_record():
    grid = Grid1D(0.0, 1.0, 100, Boundary.PERIODIC)
    initial = ConservedField.constant(grid.n_cells, ConservedState(1.0, 1.0))
    return run(initial, grid, SchemeConfig(t_end=0.4))


@pytest.fixture(scope="session")
def smooth_record():
    grid = Grid1D(0.0, 1.0, 128, Boundary.PERIODIC)
    return run(smooth_sine(grid, amplitude=0.1), grid, SchemeConfig(t_end=0.05))


@pytest.fixture(scope="session")
def shock_mu(shock_record):
    return EntropyService(shock_record, n_jobs=2).mu_estimate()


@pytest.fixture(scope="session")
def fan_record():
    grid = Grid1D(-1.0, 1.0, 1000, Boundary.OUTFLOW)
    return run(developed_fan(grid, FAN_AGE), grid, SchemeConfig(t_end=0.3))
