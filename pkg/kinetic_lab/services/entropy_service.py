"""
Entropy Service

Entropy pairs and the entropy dissipation measure mu:
- closed-form evaluation of kinetic entropy pairs
- estimation of mu over (t, x, v) by replaying the collapse of every step
  against the one-sided kernels (v - v0)_+, whose second derivative is a
  point mass at v0
- bounded-ratio check of mu on small balls against kinetic mass on larger ones
- global entropy audit and jump-set density
"""

import logging

import numpy as np
from joblib import Parallel, delayed

from lab_project import settings
from kinetic_lab.exceptions import ConfigurationError, GeometryError, UnsupportedSchemeError
from kinetic_lab.models.dissipation import DissipationField, EntropyPair
from kinetic_lab.models.record import SchemeKind
from kinetic_lab.models.reports import EntropyAuditReport, JumpDensityReport, TvBoundReport
from kinetic_lab.models.state import KineticInterval, interval_from_conserved
from kinetic_lab.services.solver_service import collapse, kernel_drop, transport_moments

logger = logging.getLogger(__name__)


def entropy_eval(pair, state):
    """(eta, q) of an entropy pair at a ConservedState; vacuum gives (0, 0)."""
    return pair.evaluate(state.rho, state.m)


def _trapezoid_weights(times):
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return np.zeros_like(times)
    gaps = np.diff(times)
    weights = np.zeros_like(times)
    weights[:-1] += gaps / 2.0
    weights[1:] += gaps / 2.0
    return weights


class EntropyService:
    """Entropy diagnostics over one SpaceTimeRecord."""

    def __init__(self, record, n_jobs=None):
        """
        Args:
            record: SpaceTimeRecord to analyse (read only)
            n_jobs: joblib workers for time-slab parallelism
        """
        self.record = record
        self.n_jobs = settings.THREADS if n_jobs is None else n_jobs

    def _require_replayable(self):
        record = self.record
        if record.scheme is not SchemeKind.KINETIC:
            raise UnsupportedSchemeError(
                f"mu estimation needs collapse logs; the {record.scheme.value} scheme has none"
            )
        if record.config.stride != 1 and record.n_snapshots > 1:
            raise UnsupportedSchemeError(
                "mu estimation replays every step and needs a record with snapshot stride 1"
            )

    def _slab(self, steps, v_nodes, dv, t_edges, x_bin_of_cell, n_x_bins):
        record = self.record
        grid = record.grid
        mass = np.zeros((len(t_edges) - 1, n_x_bins, len(v_nodes)))
        for n in steps:
            dt = record.times[n + 1] - record.times[n]
            lambda1, lambda2, _ = interval_from_conserved(record.rho[n], record.m[n], record.rho_floor)
            before = KineticInterval(lambda1, lambda2, record.L)
            nu = dt / grid.dx
            rho_t, m_t, _ = transport_moments(before.lambda1, before.lambda2, grid, nu)
            rho_t = np.maximum(rho_t, 0.0)
            new1, new2, _ = collapse(rho_t, m_t, record.rho_floor)
            after = KineticInterval(new1, new2, record.L)
            drop = kernel_drop(before, after, grid, nu, v_nodes)
            drop[rho_t < record.rho_floor] = 0.0
            t_mid = 0.5 * (record.times[n] + record.times[n + 1])
            t_bin = min(int(np.searchsorted(t_edges, t_mid, side="right")) - 1, len(t_edges) - 2)
            np.add.at(mass[t_bin], x_bin_of_cell, drop * grid.dx * dv)
        return mass

    def mu_estimate(self, v_bins=None, t_bins=None, x_bins=None):
        """
        Binned estimate of the dissipation measure.

        Args:
            v_bins: midpoint nodes v0 on [-L, L]
            t_bins: number of time bins over the record
            x_bins: number of space bins over the grid

        Returns:
            DissipationField

        Raises:
            UnsupportedSchemeError: for Godunov records or strided records
        """
        self._require_replayable()
        record = self.record
        grid = record.grid
        v_bins = settings.MU_NODES if v_bins is None else int(v_bins)
        t_bins = settings.MU_TIME_BINS if t_bins is None else int(t_bins)
        x_bins = min(settings.MU_SPACE_BINS if x_bins is None else int(x_bins), grid.n_cells)

        L = record.L
        v_edges = np.linspace(-L, L, v_bins + 1)
        v_nodes = 0.5 * (v_edges[:-1] + v_edges[1:])
        dv = 2.0 * L / v_bins
        t_edges = np.linspace(record.t_start, max(record.t_final, record.t_start + 1e-300), t_bins + 1)
        x_edges = np.linspace(grid.x_min, grid.x_max, x_bins + 1)
        x_bin_of_cell = np.clip(
            np.searchsorted(x_edges, grid.centers, side="right") - 1, 0, x_bins - 1
        )

        n_steps = record.n_snapshots - 1
        n_slabs = max(1, min(n_steps, 4 * max(1, self.n_jobs)))
        slabs = [chunk for chunk in np.array_split(np.arange(n_steps), n_slabs) if chunk.size]
        partials = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self._slab)(chunk, v_nodes, dv, t_edges, x_bin_of_cell, x_bins)
            for chunk in slabs
        )
        mass = np.zeros((t_bins, x_bins, v_bins))
        for partial in partials:
            mass += partial

        field = DissipationField(t_edges, x_edges, v_nodes, dv, mass, L)
        logger.info(
            f"Estimated mu over {n_steps} steps: total mass {field.total():.6e} "
            f"({t_bins}x{x_bins}x{v_bins} bins)"
        )
        return field

    def _check_ball(self, center, radius):
        record = self.record
        t_c, x_c = center
        grid = record.grid
        if t_c - radius < record.t_start - 1e-12 or t_c + radius > record.t_final + 1e-12:
            raise GeometryError(
                f"ball of radius {radius} at t={t_c} leaves the recorded times "
                f"[{record.t_start}, {record.t_final}]"
            )
        if x_c - radius < grid.x_min or x_c + radius > grid.x_max:
            raise GeometryError(
                f"ball of radius {radius} at x={x_c} leaves the domain [{grid.x_min}, {grid.x_max}]"
            )

    def kinetic_mass(self, center, radius, v_lo, v_hi):
        """Integral over the ball of the kinetic density restricted to [v_lo, v_hi]."""
        record = self.record
        t_c, x_c = center
        lambda1, lambda2, vacuum = record.invariants()
        overlap = np.maximum(np.minimum(lambda2, v_hi) - np.maximum(lambda1, v_lo), 0.0)
        overlap = np.where(vacuum, 0.0, overlap)
        inside = (record.times[:, None] - t_c) ** 2 + (record.grid.centers[None, :] - x_c) ** 2 <= radius ** 2
        weights = _trapezoid_weights(record.times)[:, None] * record.grid.dx
        return float(np.sum(np.where(inside, overlap * weights, 0.0)))

    def tv_bound_check(self, field, r, R, a, center=None, side="below"):
        """
        Ratio mu(B_r x (-inf, a]) * (R - r) / (mass of f on B_R x [-L, a]).

        side="above" checks the mirrored bound with [a, inf) and [a, L].

        Raises:
            GeometryError: if B_R leaves the record or r >= R
        """
        record = self.record
        if not 0.0 < r < R:
            raise GeometryError(f"need 0 < r < R, got r={r}, R={R}")
        if center is None:
            center = (0.5 * (record.t_start + record.t_final), 0.5 * (record.grid.x_min + record.grid.x_max))
        center = (float(center[0]), float(center[1]))
        self._check_ball(center, R)
        L = record.L
        if side == "below":
            numerator = field.mass_in_ball(center, r, v_max=a)
            denominator = self.kinetic_mass(center, R, -L, a)
        elif side == "above":
            numerator = field.mass_in_ball(center, r, v_min=a)
            denominator = self.kinetic_mass(center, R, a, L)
        else:
            raise ConfigurationError(f"side must be 'below' or 'above', got {side!r}")
        ratio = 0.0 if denominator <= 0.0 else numerator * (R - r) / denominator
        logger.debug(f"TV bound ratio at {center}, r={r}, R={R}, a={a}: {ratio:.6g}")
        return TvBoundReport(ratio, numerator, denominator, r, R, a, center, side)

    def entropy_audit(self, pair=None, tolerance=None):
        """
        Per-step change of the total entropy.

        On outflow grids the change is corrected by the boundary entropy
        fluxes of the state at the start of each step.
        """
        record = self.record
        pair = EntropyPair.energy() if pair is None else pair
        eta, q = pair.evaluate(record.rho, record.m, record.rho_floor)
        eta = np.atleast_2d(eta)
        q = np.atleast_2d(q)
        totals = eta.sum(axis=1) * record.grid.dx
        changes = np.diff(totals)
        if not record.grid.periodic and changes.size:
            dt = np.diff(record.times)
            changes = changes + dt * (q[:-1, -1] - q[:-1, 0])
        if tolerance is None:
            tolerance = 1e-10 if record.grid.periodic else 1e-8
        max_increase = float(np.max(changes)) if changes.size else 0.0
        collapse_total = float(np.sum(record.dissipation)) if record.dissipation.size else 0.0
        passed = max_increase <= tolerance
        if not passed:
            logger.warning(f"Entropy audit ({pair.label()}): entropy grew by {max_increase:.3e} in one step")
        return EntropyAuditReport(
            entropy=pair.label(),
            totals=totals,
            changes=changes,
            max_increase=max_increase,
            total_drop=float(-np.sum(changes)) if changes.size else 0.0,
            collapse_dissipation=collapse_total,
            tolerance=tolerance,
            passed=passed,
        )

    def dissipation_rate(self):
        """Average energy dissipation per unit time from the collapse logs."""
        record = self.record
        duration = record.t_final - record.t_start
        if duration <= 0.0 or not record.dissipation.size:
            return 0.0
        return float(np.sum(record.dissipation) / duration)

    def jump_density(self, field, point, radii):
        """mu(B_r x R) / r for each radius around a (t, x) point."""
        radii = np.sort(np.asarray(radii, dtype=float))
        period = self.record.grid.length if self.record.grid.periodic else None
        density = np.array([field.mass_in_ball(point, r, x_period=period) / r for r in radii])
        return JumpDensityReport((float(point[0]), float(point[1])), radii, density)


def ratio_spread(reports):
    """max/min of the ratios of a refinement family (inf if some ratio is 0)."""
    ratios = np.array([report.ratio for report in reports])
    if ratios.size == 0:
        return 1.0
    if np.all(ratios == 0.0):
        return 1.0
    if np.any(ratios <= 0.0):
        return np.inf
    return float(ratios.max() / ratios.min())
