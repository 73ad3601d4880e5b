"""
Characteristic Service

Generalized characteristics of a recorded solution:
- mollified velocity fields V_eps built from one Riemann invariant, capped
  by a reference speed sigma
- integration of h' = V_eps(t, h) over a ladder of widths eps
- extraction of the limit curve and verification of its speed bounds
  against the one-sided traces of the record
"""

import logging

import numpy as np
from scipy.integrate import solve_ivp

from lab_project import settings
from kinetic_lab.exceptions import ConfigurationError, ConvergenceError, GeometryError
from kinetic_lab.models.characteristic import CharacteristicRun, MollifierKernel
from kinetic_lab.models.curve import LipschitzCurve
from kinetic_lab.models.reports import TraceSide
from kinetic_lab.models.state import interval_from_conserved
from kinetic_lab.services.regularity_service import RegularityService

logger = logging.getLogger(__name__)


class CharacteristicService:
    """Mollified generalized characteristics over one SpaceTimeRecord."""

    def __init__(self, record, n_jobs=None):
        self.record = record
        self.n_jobs = settings.THREADS if n_jobs is None else n_jobs
        self._lambda1, self._lambda2, self._vacuum = record.invariants()

    def default_sigma(self, family):
        """ess sup lambda1 for family 1, ess inf lambda2 for family 2."""
        live = ~self._vacuum
        if not live.any():
            return 0.0
        if family == 1:
            return float(self._lambda1[live].max())
        return float(self._lambda2[live].min())

    def capped_speed(self, lambda1, lambda2, vacuum, family, sigma):
        """min(lambda1, sigma) or max(lambda2, sigma); vacuum takes sigma."""
        if family == 1:
            speed = np.minimum(lambda1, sigma)
        else:
            speed = np.maximum(lambda2, sigma)
        return np.where(vacuum, sigma, speed)

    def velocity_bound(self, family, sigma):
        speed = self.capped_speed(self._lambda1, self._lambda2, self._vacuum, family, sigma)
        return float(np.max(np.abs(speed)))

    def _velocity(self, kernel, t, x, family, sigma):
        record = self.record
        offsets = kernel.offsets
        if t + kernel.eps > record.t_final + 1e-12:
            raise GeometryError(
                f"mollifier at t={t:.6g} with eps={kernel.eps:.3g} needs data past t={record.t_final:.6g}"
            )
        positions = x - offsets
        if not record.grid.periodic and not record.grid.contains(positions):
            raise GeometryError(f"characteristic at x={x:.6g} leaves the domain")
        lambda1, lambda2, vacuum = record.sample_invariants((t + offsets)[:, None], positions[None, :])
        speed = self.capped_speed(lambda1, lambda2, vacuum, family, sigma)
        value = float(kernel.weights @ speed @ kernel.weights)
        return min(max(value, float(speed.min())), float(speed.max())), bool(vacuum.any())

    def mollified_velocity(self, kernel, t, x, family, sigma):
        """
        V_eps(t, x) = sum_ab w_a w_b V(t + eps s_a, x - eps s_b).

        Raises:
            GeometryError: if the kernel support leaves the record
        """
        if family not in (1, 2):
            raise ConfigurationError(f"family must be 1 or 2, got {family}")
        return self._velocity(kernel, t, x, family, sigma)[0]

    def _integrate(self, kernel, x0, family, sigma, t_eval):
        touched = []

        def rhs(t, y):
            value, vacuum = self._velocity(kernel, t, float(y[0]), family, sigma)
            if vacuum:
                touched.append(t)
            return [value]

        t0, t1 = float(t_eval[0]), float(t_eval[-1])
        solution = solve_ivp(
            rhs,
            (t0, t1),
            [x0],
            method="RK45",
            t_eval=t_eval,
            max_step=kernel.eps / 4.0,
            rtol=1e-8,
            atol=1e-10,
        )
        if not solution.success:
            raise ConvergenceError(
                f"characteristic ODE failed at eps={kernel.eps:.3g}: {solution.message}",
                bracket=(t0, t1),
                iterations=int(solution.nfev),
            )
        h = solution.y[0]
        hdot = np.array([self._velocity(kernel, t, x, family, sigma)[0] for t, x in zip(t_eval, h)])
        return h, hdot, bool(touched)

    def solve_characteristic(
        self,
        x0,
        family=1,
        sigma=None,
        eps_ladder=None,
        t_end=None,
        tolerance=None,
        n_nodes=16,
        verify=True,
    ):
        """
        Integrate h_eps over the eps ladder and verify the limit curve.

        Args:
            x0: starting position at the first recorded time
            family: 1 (capped by sigma from above) or 2 (from below)
            sigma: reference speed; defaults to default_sigma(family)
            eps_ladder: widths, largest first; defaults to EPS_LADDER_CELLS * dx
            t_end: end time; defaults to t_final - max(eps)
            tolerance: slack on the speed bounds
            verify: extract traces along the limit and check the bounds

        Returns:
            CharacteristicRun
        """
        record = self.record
        if family not in (1, 2):
            raise ConfigurationError(f"family must be 1 or 2, got {family}")
        sigma = self.default_sigma(family) if sigma is None else float(sigma)
        tolerance = settings.CHARACTERISTIC_TOLERANCE if tolerance is None else tolerance
        if eps_ladder is None:
            eps_ladder = np.array(settings.EPS_LADDER_CELLS, dtype=float) * record.grid.dx
        eps_ladder = np.sort(np.asarray(eps_ladder, dtype=float))[::-1]
        horizon = record.t_final - eps_ladder[0]
        t_end = horizon if t_end is None else min(float(t_end), horizon)
        if t_end <= record.t_start:
            raise GeometryError(
                f"record ends at {record.t_final:.6g}; no room for eps={eps_ladder[0]:.3g}"
            )

        t_eval = record.times[record.times <= t_end]
        if t_eval[-1] < t_end - 1e-12:
            t_eval = np.append(t_eval, t_end)
        if t_eval.size < 2:
            t_eval = np.array([record.t_start, t_end])

        h_eps, hdot_eps = [], []
        vacuum_touched = False
        for eps in eps_ladder:
            h, hdot, touched = self._integrate(MollifierKernel(eps, n_nodes), float(x0), family, sigma, t_eval)
            h_eps.append(h)
            hdot_eps.append(hdot)
            vacuum_touched = vacuum_touched or touched
            logger.debug(f"eps={eps:.3g}: h(T)={h[-1]:.6g}")

        norms = np.array([np.max(np.abs(a - b)) for a, b in zip(h_eps[:-1], h_eps[1:])])
        converged = bool(np.all(np.diff(norms) <= 1e-12)) if norms.size > 1 else True
        if not converged:
            logger.warning(f"Characteristic ladder differences do not decrease: {norms}")

        bound = self.velocity_bound(family, sigma)
        run = CharacteristicRun(
            family=family,
            sigma=sigma,
            x0=float(x0),
            eps_ladder=eps_ladder,
            times=t_eval,
            h_eps=h_eps,
            hdot_eps=hdot_eps,
            velocity_bound=bound,
            ladder_norms=norms,
            ladder_converged=converged,
            vacuum_touched=vacuum_touched,
            tolerance=tolerance,
        )
        speeds_ok = all(np.all(np.abs(hdot) <= bound + 1e-12) for hdot in hdot_eps)
        run.passed = bool(speeds_ok)
        if verify:
            self._verify(run)
        logger.info(
            f"Characteristic from x0={x0:.6g} (family {family}, sigma={sigma:.6g}): "
            f"h(T)={run.h[-1]:.6g}, violations={run.violation_fraction}"
        )
        return run

    def _window_extremes(self, run, trace):
        """
        min lambda1 and max lambda2 over |x - h(t)| <= w at each time.

        w is the larger of the narrowest mollifier width and the outer edge
        of the trace band, the resolution of both the curve speed and the
        traces. Vacuum samples are left out.
        """
        dx = self.record.grid.dx
        width = max(float(np.min(run.eps_ladder)), float(trace.band[1]))
        n_half = int(np.ceil(2.0 * width / dx))
        offsets = np.linspace(-width, width, 2 * n_half + 1)
        lambda1, lambda2, vacuum = self.record.sample_invariants(
            run.times[:, None], run.h[:, None] + offsets[None, :]
        )
        window_min = np.where(vacuum, np.inf, lambda1).min(axis=1)
        window_max = np.where(vacuum, -np.inf, lambda2).max(axis=1)
        return window_min, window_max

    def _verify(self, run):
        """
        Trace-based speed bounds and dichotomy along the limit curve.

        Family 1 needs lambda1(u+) <= h' <= sigma and family 2 needs
        sigma <= h' <= lambda2(u-). At grid resolution the lower (upper)
        bound is relaxed to the extreme of lambda1 (lambda2) over the
        resolution window around the curve, which inside a rarefaction fan
        covers the spread of the invariant across the band gap; at an
        admissible shock the extreme sits on the trace side.
        """
        curve = LipschitzCurve(run.times, run.h, run.velocity_bound * (1.0 + 1e-6) + 1e-9)
        regularity = RegularityService(self.record, n_jobs=self.n_jobs)
        try:
            trace = regularity.extract_trace(curve, side=TraceSide.BOTH)
        except GeometryError as exc:
            logger.warning(f"Skipping trace verification: {exc}")
            return run
        lambda1_plus, _, vacuum_plus = interval_from_conserved(trace.rho_plus, trace.m_plus, self.record.rho_floor)
        _, lambda2_minus, vacuum_minus = interval_from_conserved(trace.rho_minus, trace.m_minus, self.record.rho_floor)
        window_min, window_max = self._window_extremes(run, trace)
        if run.family == 1:
            lower = np.where(vacuum_plus, -np.inf, np.minimum(lambda1_plus, window_min))
            upper = np.full_like(lower, run.sigma)
        else:
            upper = np.where(vacuum_minus, np.inf, np.maximum(lambda2_minus, window_max))
            lower = np.full_like(upper, run.sigma)
        flags = (run.hdot < lower - run.tolerance) | (run.hdot > upper + run.tolerance)
        run.lower_bound = lower
        run.upper_bound = upper
        run.violation_flags = flags
        run.violation_fraction = float(flags.mean())
        run.dichotomy = regularity.rh_dichotomy(curve, trace)
        run.passed = bool(run.passed and run.violation_fraction <= 0.01)
        return run
