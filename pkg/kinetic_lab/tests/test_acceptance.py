"""
Desk-scale acceptance runs at fine resolution.

Deselect with: pytest -m "not slow"
"""

import numpy as np
import pytest

from kinetic_lab.models.curve import LipschitzCurve
from kinetic_lab.models.dissipation import EntropyPair
from kinetic_lab.models.grid import Boundary, Grid1D
from kinetic_lab.models.record import SchemeConfig
from kinetic_lab.models.reports import DichotomyLabel
from kinetic_lab.pipeline import log_log_slope, sweep
from kinetic_lab.scripts.presets import random_riemann_states, riemann, smooth_sine
from kinetic_lab.serializers.config_serializer import validate_config
from kinetic_lab.serializers.report_serializer import read_json
from kinetic_lab.services.characteristic_service import CharacteristicService
from kinetic_lab.services.entropy_service import EntropyService, entropy_eval, ratio_spread
from kinetic_lab.services.regularity_service import RegularityService
from kinetic_lab.services.riemann_service import check_solution, solve_riemann
from kinetic_lab.services.solver_service import l1_distance_to_exact, run
from kinetic_lab.tests.reference_states import (
    FAN_AGE,
    FAN_LEFT,
    FAN_RIGHT,
    SHOCK_LEFT,
    SHOCK_RIGHT,
    SHOCK_SPEED,
    developed_fan,
)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def fine_shock_record():
    grid = Grid1D(-1.0, 1.0, 4000, Boundary.OUTFLOW)
    return run(riemann(grid, SHOCK_LEFT, SHOCK_RIGHT, x_split=0.0), grid, SchemeConfig(t_end=0.3))


def test_periodic_shock_tube_conserves_over_many_steps():
    grid = Grid1D(0.0, 1.0, 1000, Boundary.PERIODIC)
    initial = riemann(grid, SHOCK_LEFT, SHOCK_RIGHT)
    # dt = 0.5 dx / L with L about 1.62, so t_end = 3 takes close to 10^4 steps
    record = run(initial, grid, SchemeConfig(t_end=3.0, stride=500))
    summary = record.audit.summary(record.scheme)
    assert summary["steps"] > 9000
    assert summary["passed"]
    mass = record.rho.sum(axis=1) * grid.dx
    momentum = record.m.sum(axis=1) * grid.dx
    assert abs(mass[-1] - mass[0]) <= 1e-9
    assert abs(momentum[-1] - momentum[0]) <= 1e-9


@pytest.mark.parametrize("left,right", random_riemann_states(seed=2024, count=20))
def test_random_riemann_problems_match_exact_solution(left, right):
    grid = Grid1D(-0.5, 0.5, 4000, Boundary.OUTFLOW)
    record = run(riemann(grid, left, right, x_split=0.0), grid, SchemeConfig(t_end=0.2))
    solution = solve_riemann(left, right)
    assert check_solution(solution)["passed"]
    assert l1_distance_to_exact(record, solution, 0.0) <= 2e-2


def test_fine_trace_and_dichotomy_on_shock(fine_shock_record):
    service = RegularityService(fine_shock_record)
    times = fine_shock_record.times[fine_shock_record.times >= 0.15]
    curve = LipschitzCurve.line(times, 0.0, SHOCK_SPEED)
    trace = service.extract_trace(curve)
    assert np.max(np.abs(trace.rho_minus - SHOCK_LEFT.rho)) <= 5e-2
    assert np.max(np.abs(trace.m_minus - SHOCK_LEFT.m)) <= 5e-2
    assert np.max(np.abs(trace.rho_plus - SHOCK_RIGHT.rho)) <= 5e-2
    assert np.max(np.abs(trace.m_plus - SHOCK_RIGHT.m)) <= 5e-2
    report = service.rh_dichotomy(curve, trace)
    assert report.passed
    assert all(label is DichotomyLabel.SHOCK for label in report.labels)
    assert report.max_shock_rh_residual() <= 5e-2
    # innermost weak-form pairing reproduces the trace jump
    assert report.pairing_gap is not None
    assert report.pairing_gap <= 0.1

    interior = LipschitzCurve.line(times, 0.5, 0.0)
    labels = service.rh_dichotomy(interior, service.extract_trace(interior)).labels
    assert all(label is DichotomyLabel.CONTINUOUS for label in labels)


def test_fine_characteristic_tracks_shock(fine_shock_record):
    run_ = CharacteristicService(fine_shock_record).solve_characteristic(0.0, family=1)
    assert run_.mean_speed() == pytest.approx(SHOCK_SPEED, abs=5e-2)
    assert run_.violation_fraction <= 0.01
    for hdot in run_.hdot_eps:
        assert np.max(np.abs(hdot)) <= run_.velocity_bound


@pytest.fixture(scope="module")
def coarse_shock_record():
    grid = Grid1D(-1.0, 1.0, 2000, Boundary.OUTFLOW)
    return run(riemann(grid, SHOCK_LEFT, SHOCK_RIGHT, x_split=0.0), grid, SchemeConfig(t_end=0.3))


def late_shock_residual(record):
    service = RegularityService(record)
    curve = LipschitzCurve.line(record.times[record.times >= 0.15], 0.0, SHOCK_SPEED)
    return service.rh_dichotomy(curve, service.extract_trace(curve)).max_shock_rh_residual()


def test_rh_residual_shrinks_under_refinement(coarse_shock_record, fine_shock_record):
    coarse = late_shock_residual(coarse_shock_record)
    fine = late_shock_residual(fine_shock_record)
    assert coarse <= 5e-2
    # at least the slow end of first order: a halving of dx gains a factor 1.4
    assert fine <= max(coarse / 1.4, 1e-10)


def test_rarefaction_characteristic_respects_bounds():
    grid = Grid1D(-1.0, 1.0, 4000, Boundary.OUTFLOW)
    record = run(riemann(grid, FAN_LEFT, FAN_RIGHT, x_split=0.0), grid, SchemeConfig(t_end=0.3))
    characteristic = CharacteristicService(record).solve_characteristic(0.0, family=1)
    assert characteristic.violation_fraction <= 0.01
    # before t = 0.05 the fan is only a few trace bands wide
    resolved = characteristic.dichotomy.times >= 0.05
    labels = [label for label, keep in zip(characteristic.dichotomy.labels, resolved) if keep]
    assert labels and all(label is DichotomyLabel.CONTINUOUS for label in labels)


def rarefaction_totals(build_initial, resolutions):
    totals = []
    for n_cells in resolutions:
        grid = Grid1D(-1.0, 1.0, n_cells, Boundary.OUTFLOW)
        record = run(build_initial(grid), grid, SchemeConfig(t_end=0.3))
        totals.append(float(np.sum(record.dissipation)))
    return np.array([2.0 / n for n in resolutions]), np.array(totals)


def test_developed_fan_dissipation_is_first_order():
    dx, totals = rarefaction_totals(lambda grid: developed_fan(grid, FAN_AGE), (500, 1000, 2000))
    assert np.all(np.diff(totals) < 0.0)
    assert log_log_slope(dx, totals) >= 0.8


def centred_fan(grid):
    return riemann(grid, FAN_LEFT, FAN_RIGHT, x_split=0.0)


def test_centred_fan_dissipation_carries_a_log_factor():
    dx, totals = rarefaction_totals(centred_fan, (500, 1000, 2000))
    assert log_log_slope(dx, totals) >= 0.7
    # dx log(1 / dx) from the corner at t = 0: the local slope climbs towards one
    local = np.diff(np.log(totals)) / np.diff(np.log(dx))
    assert local[1] > local[0]


def test_smooth_mu_vanishes_under_refinement():
    resolutions = (250, 500, 1000)
    totals = []
    for n_cells in resolutions:
        grid = Grid1D(0.0, 1.0, n_cells, Boundary.PERIODIC)
        record = run(smooth_sine(grid, amplitude=0.1), grid, SchemeConfig(t_end=0.2))
        mu = EntropyService(record, n_jobs=2).mu_estimate()
        assert mu.mass.min() >= -1e-12
        totals.append(mu.total())
    assert log_log_slope([1.0 / n for n in resolutions], totals) >= 0.8


@pytest.fixture(scope="module")
def tv_family():
    family = {}
    for n_cells in (500, 1000, 2000):
        grid = Grid1D(-0.5, 0.5, n_cells, Boundary.OUTFLOW)
        record = run(riemann(grid, SHOCK_LEFT, SHOCK_RIGHT, x_split=0.0), grid, SchemeConfig(t_end=0.3))
        family[n_cells] = (record, EntropyService(record, n_jobs=2).mu_estimate())
    return family


def test_shock_mu_rate_matches_jump_formula(tv_family):
    _, mu = tv_family[2000]
    energy = EntropyPair.energy()
    eta_l, q_l = entropy_eval(energy, SHOCK_LEFT)
    eta_r, q_r = entropy_eval(energy, SHOCK_RIGHT)
    oracle = SHOCK_SPEED * (eta_r - eta_l) - (q_r - q_l)
    late = mu.t_edges[:-1] >= 0.5 * mu.t_edges[-1]
    rate = mu.time_marginal()[late].sum() / (mu.t_edges[-1] - mu.t_edges[:-1][late][0])
    assert rate == pytest.approx(oracle, rel=0.1)


def test_tv_ratio_is_stable_under_refinement(tv_family):
    center = (0.18, SHOCK_SPEED * 0.18)
    reports = [
        EntropyService(record, n_jobs=1).tv_bound_check(mu, 0.05, 0.1, -1.0, center=center)
        for record, mu in tv_family.values()
    ]
    assert all(report.ratio > 0.0 for report in reports)
    assert ratio_spread(reports) <= 3.0


def test_degiorgi_family_over_perturbation_size(tmp_path):
    config = validate_config(
        {
            "name": "degiorgi",
            "grid": {"x_min": 0.0, "x_max": 1.0, "n_cells": 200, "boundary": "periodic"},
            "scheme": {"t_end": 0.2},
            "preset": {"id": "smooth_sine", "amplitude": 1e-2},
            "checkers": [{"kind": "degiorgi", "params": {"min_density": 0.5}}],
            "sweep": {"parameter": "preset.amplitude", "values": [1e-2, 1e-3, 1e-4], "metric": "degiorgi"},
        }
    )
    result = sweep(config, out=tmp_path)
    assert result["failures"] == 0
    assert result["fit"]["points"] == 3
    assert result["fit"]["alpha_fit"] >= 0.2
    assert result["fit"]["monotone"] is True
    # U_k at the last level below 1e-3 U_0 for every perturbation size
    assert result["converged"] == [True, True, True]
    assert read_json(tmp_path / "sweep.json")["fit"]["monotone"] is True


def test_fine_semicontinuity_off_and_on_shock(fine_shock_record):
    service = RegularityService(fine_shock_record, n_jobs=2)
    points = service.sample_points(50, np.random.default_rng(5), shock_lines=[(0.0, SHOCK_SPEED)])
    report = service.semicontinuity_check(points)
    assert report.passed
    assert report.vmo_fraction == 1.0
    tolerance = 5.0 * np.sqrt(fine_shock_record.grid.dx)
    for point in report.points:
        assert max(point.rho_gap, point.lambda1_gap, point.lambda2_gap) <= tolerance

    on_shock = [(t, SHOCK_SPEED * t) for t in (0.1, 0.15, 0.2, 0.25)]
    assert service.semicontinuity_check(on_shock).vmo_fraction == 0.0
