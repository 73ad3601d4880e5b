"""
Solver Service

Time integration of the gamma = 3 system:
- transport-collapse kinetic scheme: exact free transport of every cell's
  velocity interval over one step, then collapse back onto the interval
  matching the transported mass and momentum
- Godunov reference scheme with exact Riemann interface fluxes
- run orchestration with per-step conservation and invariant-region audits
- refinement studies and comparison against exact Riemann solutions

All velocity integrals are closed-form integrals over intervals; there is no
velocity grid on the solver path.
"""

import logging
import math

import numpy as np
from joblib import Parallel, delayed

from lab_project import settings
from kinetic_lab.exceptions import (
    ConfigurationError,
    InvariantViolation,
    KineticLabError,
    StepError,
)
from kinetic_lab.models.record import RunAudit, SchemeKind, SpaceTimeRecord
from kinetic_lab.models.state import (
    ConservedField,
    KineticInterval,
    interval_power_integral,
    negative_part_integral,
    positive_part_integral,
)
from kinetic_lab.services.riemann_service import exact_field, riemann_flux

logger = logging.getLogger(__name__)


def _check_cfl(grid, dt, L):
    courant = dt * L / grid.dx
    if dt < 0.0 or courant > 1.0 + 1e-12:
        raise ConfigurationError(
            f"time step {dt:.6g} violates the kinetic CFL bound dt*L/dx <= 1 (got {courant:.6g})"
        )


def transport_moments(lambda1, lambda2, grid, nu):
    """
    Moments k = 0, 1, 2 of the transported kinetic density in every cell.

    Over one step a fraction nu*|v| of each velocity leaves its cell towards
    the neighbour it moves to, so cell j receives nu*v_+ from j-1 and nu*v_-
    from j+1. Requires nu*L <= 1.
    """
    p = grid.pad(lambda1)
    q = grid.pad(lambda2)
    own = slice(1, -1)
    left = slice(0, -2)
    right = slice(2, None)
    moments = []
    for k in range(3):
        stay = interval_power_integral(k, p[own], q[own]) - nu * (
            positive_part_integral(k, p[own], q[own]) + negative_part_integral(k, p[own], q[own])
        )
        incoming = nu * positive_part_integral(k, p[left], q[left]) + nu * negative_part_integral(
            k, p[right], q[right]
        )
        moments.append(stay + incoming)
    return tuple(moments)


def _ramp_integral(p, q, v0):
    """Integral of (v - v0)_+ over [p, q]."""
    lo, hi = np.maximum(p, v0), np.maximum(q, v0)
    return interval_power_integral(1, lo, hi) - v0 * interval_power_integral(0, lo, hi)


def _ramp_flux_plus(p, q, v0):
    """Integral of v_+ (v - v0)_+ over [p, q]."""
    floor = np.maximum(v0, 0.0)
    lo, hi = np.maximum(p, floor), np.maximum(q, floor)
    return interval_power_integral(2, lo, hi) - v0 * interval_power_integral(1, lo, hi)


def _ramp_flux_minus(p, q, v0):
    """Integral of v_- (v - v0)_+ over [p, q]."""
    lo = np.maximum(p, v0)
    hi = np.maximum(lo, np.minimum(q, 0.0))
    return -(interval_power_integral(2, lo, hi) - v0 * interval_power_integral(1, lo, hi))


def kernel_transport(lambda1, lambda2, grid, nu, v_nodes):
    """
    Integral of (v - v0)_+ against the transported density, shape (n_cells, n_nodes).
    """
    v0 = np.asarray(v_nodes, dtype=float)[None, :]
    p = grid.pad(lambda1)[:, None]
    q = grid.pad(lambda2)[:, None]
    own, left, right = slice(1, -1), slice(0, -2), slice(2, None)
    stay = _ramp_integral(p[own], q[own], v0) - nu * (
        _ramp_flux_plus(p[own], q[own], v0) + _ramp_flux_minus(p[own], q[own], v0)
    )
    return stay + nu * _ramp_flux_plus(p[left], q[left], v0) + nu * _ramp_flux_minus(
        p[right], q[right], v0
    )


def kernel_drop(before, after, grid, nu, v_nodes):
    """
    Collapse drop of the (v - v0)_+ entropy at each node, shape (n_cells, n_nodes).

    before and after are the kinetic intervals at the start and end of the
    step.
    """
    transported = kernel_transport(before.lambda1, before.lambda2, grid, nu, v_nodes)
    v0 = np.asarray(v_nodes, dtype=float)[None, :]
    collapsed = _ramp_integral(after.lambda1[:, None], after.lambda2[:, None], v0)
    return transported - collapsed


def collapse(rho, m, rho_floor):
    """
    Interval centred at m/rho with width rho; vacuum cells are centred at 0.

    Returns (lambda1, lambda2, m_after) where m_after is zero in vacuum cells.
    """
    vacuum = rho < rho_floor
    velocity = np.where(vacuum, 0.0, m / np.where(vacuum, 1.0, rho))
    return velocity - rho / 2.0, velocity + rho / 2.0, np.where(vacuum, 0.0, m)


def transport_collapse_step(interval, grid, dt, rho_floor=None):
    """
    One transport-collapse step.

    Args:
        interval: KineticInterval of every cell
        grid: the Grid1D the intervals live on
        dt: time step, must satisfy dt * L <= dx
        rho_floor: vacuum floor (settings.RHO_FLOOR by default)

    Returns:
        (new KineticInterval, per-cell energy dissipation density)

    Raises:
        ConfigurationError: on CFL violation
        InvariantViolation: if a transported density is negative
    """
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    _check_cfl(grid, dt, interval.L)
    nu = dt / grid.dx
    rho_t, m_t, e2_t = transport_moments(interval.lambda1, interval.lambda2, grid, nu)
    scale = max(1.0, float(np.max(np.abs(rho_t))))
    if np.any(rho_t < -1e-12 * scale):
        raise InvariantViolation(f"negative transported density {rho_t.min():.3e}")
    rho_t = np.maximum(rho_t, 0.0)
    lambda1, lambda2, _ = collapse(rho_t, m_t, floor)
    e2_new = interval_power_integral(2, lambda1, lambda2)
    dissipation = 0.5 * (e2_t - e2_new)
    return KineticInterval(lambda1, lambda2, interval.L), dissipation


def godunov_step(field, grid, dt, rho_floor=None):
    """
    Conservative update with exact Riemann fluxes at every interface.

    Returns:
        New ConservedField
    """
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    nu = dt / grid.dx
    rho = grid.pad(field.rho)
    m = grid.pad(field.m)
    mass_flux, momentum_flux = riemann_flux(rho[:-1], m[:-1], rho[1:], m[1:], floor)
    new_rho = field.rho - nu * (mass_flux[1:] - mass_flux[:-1])
    new_m = field.m - nu * (momentum_flux[1:] - momentum_flux[:-1])
    scale = max(1.0, float(np.max(field.rho)))
    if np.any(new_rho < -1e-12 * scale):
        raise InvariantViolation(f"Godunov update produced density {new_rho.min():.3e}")
    new_rho = np.maximum(new_rho, 0.0)
    new_m = np.where(new_rho < floor, 0.0, new_m)
    return ConservedField(new_rho, new_m)


def velocity_bound(field, rho_floor=None):
    """L = margin * max |lambda_i| over the field."""
    bound = settings.VELOCITY_MARGIN * field.max_speed(rho_floor)
    if bound <= 0.0:
        raise ConfigurationError("initial data has no non-vacuum cell with nonzero speed bound")
    return bound


class SimulationService:
    """Runs a scheme from initial data and records the history."""

    def __init__(self, grid, config, rho_floor=None):
        """
        Initialize the simulation service.

        Args:
            grid: Grid1D of the run
            config: SchemeConfig (cfl, t_end, scheme, stride)
            rho_floor: vacuum floor, settings.RHO_FLOOR by default
        """
        self.grid = grid
        self.config = config
        self.rho_floor = settings.RHO_FLOOR if rho_floor is None else rho_floor

    def _audit_step(self, audit, before, after, dissipation):
        mass_before, momentum_before = before.totals(self.grid.dx)
        mass_after, momentum_after = after.totals(self.grid.dx)
        lambda1_b, lambda2_b, vacuum_b = before.invariants(self.rho_floor)
        lambda1_a, lambda2_a, vacuum_a = after.invariants(self.rho_floor)
        drop = rise = 0.0
        if np.any(~vacuum_b) and np.any(~vacuum_a):
            drop = float(np.min(lambda1_b[~vacuum_b]) - np.min(lambda1_a[~vacuum_a]))
            rise = float(np.max(lambda2_a[~vacuum_a]) - np.max(lambda2_b[~vacuum_b]))
        live = ~vacuum_a
        min_dissipation = 0.0
        if dissipation is not None and np.any(live):
            min_dissipation = float(np.min(dissipation[live]))
        audit.record_step(
            abs(mass_after - mass_before),
            abs(momentum_after - momentum_before),
            drop,
            rise,
            min_dissipation,
        )

    def run(self, initial):
        """
        Integrate from initial data to config.t_end.

        Returns:
            SpaceTimeRecord with snapshots every config.stride steps (and at t_end)

        Raises:
            StepError: wrapping any failure, with the failing step index
        """
        grid, config = self.grid, self.config
        if initial.n_cells != grid.n_cells:
            raise ConfigurationError(
                f"initial field has {initial.n_cells} cells, grid has {grid.n_cells}"
            )
        L = velocity_bound(initial, self.rho_floor)
        dt_nominal = config.cfl * grid.dx / L
        n_steps = 0 if config.t_end == 0.0 else int(math.ceil(config.t_end / dt_nominal))
        logger.info(
            f"Starting {config.scheme.value} run: {grid.n_cells} cells, L={L:.6g}, "
            f"dt={dt_nominal:.3e}, {n_steps} steps to t={config.t_end}"
        )

        audit = RunAudit(conservative=grid.periodic)
        times = [0.0]
        rho_history = [initial.rho.copy()]
        m_history = [initial.m.copy()]
        dissipation_totals = []

        field = initial
        interval = initial.kinetic_interval(L, self.rho_floor)
        t = 0.0
        for step in range(n_steps):
            t_next = config.t_end if step == n_steps - 1 else (step + 1) * dt_nominal
            dt = t_next - t
            try:
                if config.scheme is SchemeKind.KINETIC:
                    interval, dissipation = transport_collapse_step(interval, grid, dt, self.rho_floor)
                    new_field = interval.to_field()
                    dissipation_totals.append(float(np.sum(dissipation) * grid.dx))
                else:
                    new_field = godunov_step(field, grid, dt, self.rho_floor)
                    dissipation = None
            except (KineticLabError, FloatingPointError, ValueError) as exc:
                logger.error(f"Step {step} failed at t={t:.6g}: {exc}")
                raise StepError(step, exc) from exc
            self._audit_step(audit, field, new_field, dissipation)
            field = new_field
            t = t_next
            if (step + 1) % config.stride == 0 or step == n_steps - 1:
                times.append(t)
                rho_history.append(field.rho.copy())
                m_history.append(field.m.copy())

        summary = audit.summary(config.scheme)
        logger.info(
            f"Finished {config.scheme.value} run at t={t:.6g}: {len(times)} snapshots, "
            f"audits {'passed' if summary['passed'] else 'FAILED'}"
        )
        if not summary["passed"]:
            logger.warning(f"Run audit summary: {summary}")
        return SpaceTimeRecord(
            grid=grid,
            times=np.array(times),
            rho=np.array(rho_history),
            m=np.array(m_history),
            config=config,
            L=L,
            dissipation=np.array(dissipation_totals),
            audit=audit,
            rho_floor=self.rho_floor,
        )


def run(initial, grid, config, rho_floor=None):
    """Convenience wrapper around SimulationService.run."""
    return SimulationService(grid, config, rho_floor).run(initial)


def run_batch(initials, grid, config, n_jobs=None, rho_floor=None):
    """Independent runs of several initial fields, in input order."""
    n_jobs = settings.THREADS if n_jobs is None else n_jobs
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(run)(initial, grid, config, rho_floor) for initial in initials
    )


def restrict(values, factor):
    """Average groups of `factor` consecutive fine cells onto the coarse grid."""
    values = np.asarray(values, dtype=float)
    return values.reshape(-1, factor).mean(axis=1)


def self_convergence(build_initial, grid, config, levels=3, n_jobs=None):
    """
    L1 differences between runs at successive refinements.

    Args:
        build_initial: callable Grid1D -> ConservedField
        grid: coarsest grid
        config: SchemeConfig shared by all runs
        levels: number of differences; levels + 1 runs with cells doubling

    Returns:
        Dict with the resolutions, the differences and whether they decrease
    """
    grids = [grid]
    for _ in range(levels):
        grids.append(grids[-1].refined(2))
    n_jobs = settings.THREADS if n_jobs is None else n_jobs
    records = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(run)(build_initial(g), g, config) for g in grids
    )
    differences = []
    for coarse, fine in zip(records[:-1], records[1:]):
        rho = restrict(fine.rho[-1], 2)
        m = restrict(fine.m[-1], 2)
        diff = np.sum(np.abs(coarse.rho[-1] - rho) + np.abs(coarse.m[-1] - m)) * coarse.grid.dx
        differences.append(float(diff))
    monotone = all(b < a for a, b in zip(differences[:-1], differences[1:]))
    logger.info(f"Self-convergence differences {differences} (monotone={monotone})")
    return {
        "n_cells": [g.n_cells for g in grids],
        "differences": differences,
        "monotone": monotone,
    }


def l1_distance_to_exact(record, solution, x_split=0.0, index=-1):
    """L1 distance between a snapshot and the exact Riemann solution at its time."""
    t = float(record.times[index])
    rho_exact, m_exact = exact_field(solution, record.grid.centers, t, x_split)
    error = np.abs(record.rho[index] - rho_exact) + np.abs(record.m[index] - m_exact)
    return float(np.sum(error) * record.grid.dx)


def front_position(grid, rho, level):
    """
    Position of the first crossing of `level` by the density profile,
    linearly interpolated between cell centres.
    """
    centers = grid.centers
    sign = np.sign(np.asarray(rho, dtype=float) - level)
    crossings = np.nonzero(sign[:-1] * sign[1:] <= 0.0)[0]
    if crossings.size == 0:
        return None
    i = crossings[0]
    r0, r1 = rho[i] - level, rho[i + 1] - level
    if r1 == r0:
        return float(centers[i])
    return float(centers[i] + (centers[i + 1] - centers[i]) * r0 / (r0 - r1))
