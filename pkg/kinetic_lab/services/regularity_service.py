"""
Regularity Service

Empirical checkers for regularity of computed entropy solutions:
- one-sided strong traces along Lipschitz curves, with the error ladder and
  its uniform variant
- continuous / admissible-shock dichotomy along a curve, cross-checked by
  the mollified weak-form pairing
- blow-up rescalings around a curve point and their distance to the
  half-space trace states
- De Giorgi truncation monitor on nested balls
- semicontinuity of the Riemann invariants at VMO points

Grid limits: offsets smaller than a few cells sit inside the numerical shock
layer, so trace sampling starts at a resolution floor; essential bounds are
max/min over cell values.
"""

import logging

import numpy as np
from joblib import Parallel, delayed
from scipy.integrate import trapezoid
from scipy.stats import linregress

from lab_project import settings
from kinetic_lab.exceptions import GeometryError, VacuumError
from kinetic_lab.models.characteristic import MollifierKernel
from kinetic_lab.models.dissipation import EntropyPair
from kinetic_lab.models.reports import (
    BlowupFrame,
    DeGiorgiDirection,
    DeGiorgiReport,
    DichotomyLabel,
    DichotomyReport,
    EnvelopeLadder,
    PairingEstimate,
    RescaledPatch,
    SemicontinuityPoint,
    SemicontinuityReport,
    TraceReport,
    TraceSide,
)
from kinetic_lab.models.state import interval_from_conserved, momentum_flux

logger = logging.getLogger(__name__)


def degiorgi_alpha(theta):
    """Exponent alpha with 1/alpha = (7 theta + 2) / theta."""
    return theta / (7.0 * theta + 2.0)


def fit_exponent(reports):
    """
    Least-squares slope of log(sup) against log(eps) over a family of reports.

    Returns:
        Dict with the fitted exponent, the constant C and whether sup grows
        with eps; None entries when fewer than two usable reports exist
    """
    usable = [r for r in reports if r.eps > 0.0 and r.sup_bound > 0.0]
    if len(usable) < 2:
        return {"alpha_fit": None, "constant": None, "monotone": None, "points": len(usable)}
    usable.sort(key=lambda r: r.eps)
    eps = np.array([r.eps for r in usable])
    sup = np.array([r.sup_bound for r in usable])
    fit = linregress(np.log(eps), np.log(sup))
    return {
        "alpha_fit": float(fit.slope),
        "constant": float(np.exp(fit.intercept)),
        "monotone": bool(np.all(np.diff(sup) >= 0.0)),
        "points": len(usable),
    }


def trace_floor(dx, resolution_cells=None):
    """Offset below which trace sampling sits inside the numerical shock layer."""
    resolution_cells = settings.TRACE_RESOLUTION_CELLS if resolution_cells is None else resolution_cells
    return resolution_cells * max(dx, float(np.sqrt(dx * settings.TRACE_FLOOR_LENGTH)))


def _band_gradient(offsets, values):
    """Least-squares slope of values (n_times, n_offsets) against the offsets, per time."""
    centred = offsets - offsets.mean()
    return (values - values.mean(axis=1, keepdims=True)) @ centred / np.sum(centred**2)


class RegularityService:
    """Read-only regularity diagnostics over one SpaceTimeRecord."""

    def __init__(self, record, n_jobs=None):
        """
        Args:
            record: SpaceTimeRecord to analyse
            n_jobs: joblib workers for point batches
        """
        self.record = record
        self.n_jobs = settings.THREADS if n_jobs is None else n_jobs
        self.dx = record.grid.dx

    # ------------------------------------------------------------------
    # Strong traces
    # ------------------------------------------------------------------

    def _side_samples(self, times, h, offsets, sign):
        rho, m = self.record.sample(times[:, None], h[:, None] + sign * offsets[None, :])
        return rho, m

    def _check_times(self, times):
        record = self.record
        if times[0] < record.t_start - 1e-12 or times[-1] > record.t_final + 1e-12:
            raise GeometryError(
                f"curve times [{times[0]}, {times[-1]}] exceed the record "
                f"[{record.t_start}, {record.t_final}]"
            )

    def extract_trace(
        self,
        curve,
        side=TraceSide.BOTH,
        band_cells=None,
        resolution_cells=None,
        ladder_cells=None,
        tolerance=None,
        band_samples=4,
    ):
        """
        Trace candidates u+(t), u-(t) along a curve and their error ladder.

        u± is the average of u(t, h(t) ± y) over y in (floor, floor + y0]
        with y0 = band_cells * dx. The floor is resolution_cells cells while
        dx >= TRACE_FLOOR_LENGTH and resolution_cells * sqrt(dx * TRACE_FLOOR_LENGTH)
        below, so it shrinks with dx while covering more and more cells. The
        ladder halves the largest offset, max(ladder_cells * dx, 4 (floor + y0)),
        until it reaches the band.

        smooth_jump is the jump a smooth profile would show across the gap
        between the two bands: the local gradients, fitted on twice the band,
        times floor + y0, summed over components and sides.

        Raises:
            GeometryError: if the largest offset leaves the domain
        """
        side = TraceSide(side)
        band_cells = settings.TRACE_BAND_CELLS if band_cells is None else band_cells
        resolution_cells = settings.TRACE_RESOLUTION_CELLS if resolution_cells is None else resolution_cells
        ladder_cells = settings.TRACE_LADDER_CELLS if ladder_cells is None else ladder_cells
        tolerance = settings.TRACE_TOLERANCE if tolerance is None else tolerance

        dx = self.dx
        floor = trace_floor(dx, resolution_cells)
        y0 = band_cells * dx
        y_max = max(ladder_cells * dx, 4.0 * (floor + y0))
        times, h = curve.times, curve.h
        self._check_times(times)
        curve.check_inside(self.record.grid, y_max)

        band = floor + y0 * np.arange(1, band_samples + 1) / band_samples
        fit_band = floor + 2.0 * y0 * np.arange(1, 2 * band_samples + 1) / (2 * band_samples)
        offsets = floor + dx * np.arange(1, int(round((y_max - floor) / dx)) + 1)
        thresholds = [y_max]
        while thresholds[-1] / 2.0 >= floor + y0 - 1e-12:
            thresholds.append(thresholds[-1] / 2.0)
        thresholds = np.array(thresholds)

        states = {}
        ladders = {}
        smooth_jump = np.zeros_like(times, dtype=float)
        for name, sign in (("plus", 1.0), ("minus", -1.0)):
            rho_b, m_b = self._side_samples(times, h, band, sign)
            trace_rho, trace_m = rho_b.mean(axis=1), m_b.mean(axis=1)
            states[name] = (trace_rho, trace_m)
            rho_f, m_f = self._side_samples(times, h, fit_band, sign)
            gradient = np.abs(_band_gradient(fit_band, rho_f)) + np.abs(_band_gradient(fit_band, m_f))
            smooth_jump += gradient * (floor + y0)
            rho_y, m_y = self._side_samples(times, h, offsets, sign)
            deviation = np.abs(rho_y - trace_rho[:, None]) + np.abs(m_y - trace_m[:, None])
            integrals = trapezoid(deviation, times, axis=0)
            errors = np.array([integrals[offsets <= thr + 1e-12].max() for thr in thresholds])
            uniform = np.array(
                [trapezoid(deviation[:, offsets <= thr + 1e-12].max(axis=1), times) for thr in thresholds]
            )
            ladders[name] = (errors, uniform)

        if side is TraceSide.PLUS:
            errors, uniform = ladders["plus"]
        elif side is TraceSide.MINUS:
            errors, uniform = ladders["minus"]
        else:
            errors = np.maximum(ladders["plus"][0], ladders["minus"][0])
            uniform = np.maximum(ladders["plus"][1], ladders["minus"][1])

        duration = float(times[-1] - times[0])
        verified = bool(errors[-1] <= tolerance * max(duration, 1e-300))
        logger.debug(f"Trace ladder {errors} (verified={verified})")
        return TraceReport(
            times=times,
            side=side,
            rho_plus=states["plus"][0],
            m_plus=states["plus"][1],
            rho_minus=states["minus"][0],
            m_minus=states["minus"][1],
            offsets_max=thresholds,
            errors=errors,
            uniform_errors=uniform,
            band=(floor, floor + y0),
            tolerance=tolerance,
            verified=verified,
            smooth_jump=smooth_jump,
        )

    # ------------------------------------------------------------------
    # Rankine-Hugoniot dichotomy
    # ------------------------------------------------------------------

    def _pairing(self, curve, slope, eps, trace_jump):
        """Jumps recovered from psi_eps pairings of state and flux across the curve."""
        kernel = MollifierKernel(eps)
        times, h = curve.times, curve.h
        rho_p, m_p = self._side_samples(times, h, kernel.offsets, 1.0)
        rho_m, m_m = self._side_samples(times, h, kernel.offsets, -1.0)
        w = kernel.weights
        state_jump = np.vstack([(rho_p - rho_m) @ w, (m_p - m_m) @ w])
        flux_p = np.array(momentum_flux(rho_p, m_p, self.record.rho_floor))
        flux_m = np.array(momentum_flux(rho_m, m_m, self.record.rho_floor))
        flux_jump = (flux_p - flux_m) @ w
        duration = float(times[-1] - times[0])
        mean_state = trapezoid(state_jump, times, axis=1) / duration
        residual = trapezoid(slope[None, :] * state_jump - flux_jump, times, axis=1) / duration
        mean_trace = trapezoid(trace_jump, times, axis=1) / duration
        reference = float(np.sum(np.abs(mean_trace)))
        gap = None
        if reference > settings.TRACE_TOLERANCE:
            gap = float(np.sum(np.abs(mean_state - mean_trace)) / reference)
        return PairingEstimate(
            eps=eps,
            state_jump=mean_state,
            flux_jump=trapezoid(flux_jump, times, axis=1) / duration,
            rh_residual=float(np.max(np.abs(residual))),
            relative_gap=gap,
        )

    def rh_dichotomy(self, curve, trace, tolerance=None, pairing_cells=None, pairing_tolerance=None):
        """
        Classify every sampled time as CONTINUOUS or SHOCK.

        A time is SHOCK when the trace jump exceeds tolerance plus the jump
        a smooth profile shows across the band gap. SHOCK times report the
        Rankine-Hugoniot residual s[u] - [f(u)] and the energy entropy
        residual [q] - s[eta]; the weak-form pairing is evaluated at each
        width in pairing_cells * dx that fits the domain. With SHOCK times
        present, the narrowest pairing must recover the trace jump within
        pairing_tolerance.
        """
        tolerance = settings.TRACE_TOLERANCE if tolerance is None else tolerance
        pairing_cells = settings.PAIRING_LADDER_CELLS if pairing_cells is None else pairing_cells
        pairing_tolerance = settings.PAIRING_TOLERANCE if pairing_tolerance is None else pairing_tolerance
        floor = self.record.rho_floor
        slope = curve.derivative()
        jump = trace.jump()
        jump_size = np.abs(jump[0]) + np.abs(jump[1])
        threshold = tolerance + trace.jump_allowance()
        labels = [
            DichotomyLabel.SHOCK if size > limit else DichotomyLabel.CONTINUOUS
            for size, limit in zip(jump_size, threshold)
        ]

        flux_plus = np.array(momentum_flux(trace.rho_plus, trace.m_plus, floor))
        flux_minus = np.array(momentum_flux(trace.rho_minus, trace.m_minus, floor))
        rh = np.max(np.abs(slope[None, :] * jump - (flux_plus - flux_minus)), axis=0)

        energy = EntropyPair.energy()
        eta_p, q_p = energy.evaluate(trace.rho_plus, trace.m_plus, floor)
        eta_m, q_m = energy.evaluate(trace.rho_minus, trace.m_minus, floor)
        entropy = (q_p - q_m) - slope * (eta_p - eta_m)

        pairings = []
        for cells in pairing_cells:
            eps = cells * self.dx
            if not self.record.grid.contains(curve.h, eps):
                logger.warning(f"Skipping pairing at eps={eps:.3g}: kernel support leaves the domain")
                continue
            pairings.append(self._pairing(curve, slope, eps, jump))

        shock = np.array([label is DichotomyLabel.SHOCK for label in labels])
        pairing_gap = None
        if pairings:
            pairing_gap = min(pairings, key=lambda p: p.eps).relative_gap
        pairing_agrees = not shock.any() or pairing_gap is None or pairing_gap <= pairing_tolerance
        passed = bool(
            trace.verified
            and np.all(entropy[shock] <= tolerance)
            and np.all(rh[shock] <= tolerance)
            and pairing_agrees
        )
        if not passed:
            logger.warning(
                f"Dichotomy check failed: verified={trace.verified}, "
                f"max shock RH residual {np.max(rh[shock], initial=0.0):.3e}, "
                f"pairing gap {pairing_gap}"
            )
        else:
            logger.info(f"Dichotomy along curve: shock fraction {shock.mean():.2f}")
        return DichotomyReport(
            times=trace.times,
            labels=labels,
            jump_size=jump_size,
            rh_residual=rh,
            entropy_residual=entropy,
            pairings=pairings,
            tolerance=tolerance,
            passed=passed,
            pairing_gap=pairing_gap,
        )

    # ------------------------------------------------------------------
    # Blow-up
    # ------------------------------------------------------------------

    def blowup_rescale(
        self,
        t0,
        curve,
        eta,
        frame=BlowupFrame.CURVE,
        states=None,
        tau_max=0.5,
        n_tau=33,
        n_y=65,
        band=0.25,
    ):
        """
        Rescaled patch (tau, y) -> u(t0 + eta tau, base + eta y).

        The base is h(t0 + eta tau) in the curve frame and h(t0) in the
        straight frame, where the half-spaces are y <= slope * tau. Distances
        are mean L1 gaps to the trace states on the parts of each half-space
        at least `band` away from its boundary.

        Args:
            states: ((rho-, m-), (rho+, m+)); sampled at y = -1 and y = +1 when omitted

        Raises:
            GeometryError: if the patch leaves the record
        """
        frame = BlowupFrame(frame)
        record = self.record
        tau = np.linspace(-tau_max, tau_max, n_tau)
        y = np.linspace(-1.0, 1.0, n_y)
        t = t0 + eta * tau
        if t[0] < record.t_start - 1e-12 or t[-1] > record.t_final + 1e-12:
            raise GeometryError(f"blow-up at t0={t0}, eta={eta} leaves the recorded times")
        x0 = float(curve.at(t0))
        slope = float(curve.speed_at(t0))
        base = curve.at(t) if frame is BlowupFrame.CURVE else np.full_like(t, x0)
        x = base[:, None] + eta * y[None, :]
        if not record.grid.contains(x):
            raise GeometryError(f"blow-up at t0={t0}, eta={eta} leaves the domain")
        rho, m = record.sample(t[:, None], x)

        if states is None:
            left = record.sample(t0, x0 - eta)
            right = record.sample(t0, x0 + eta)
            states = ((float(left[0]), float(left[1])), (float(right[0]), float(right[1])))
        (rho_minus, m_minus), (rho_plus, m_plus) = states

        boundary = np.zeros_like(tau) if frame is BlowupFrame.CURVE else slope * tau
        offset = y[None, :] - boundary[:, None]
        minus_set = offset <= -band
        plus_set = offset >= band
        gap_minus = np.abs(rho - rho_minus) + np.abs(m - m_minus)
        gap_plus = np.abs(rho - rho_plus) + np.abs(m - m_plus)
        distance_minus = float(gap_minus[minus_set].mean()) if minus_set.any() else 0.0
        distance_plus = float(gap_plus[plus_set].mean()) if plus_set.any() else 0.0
        return RescaledPatch(
            eta=eta,
            frame=frame,
            t0=t0,
            x0=x0,
            slope=slope,
            tau=tau,
            y=y,
            rho=rho,
            m=m,
            distance_minus=distance_minus,
            distance_plus=distance_plus,
        )

    def blowup_series(self, t0, curve, etas, **kwargs):
        """Patches over a list of scales and whether the distance decreases with eta."""
        patches = [self.blowup_rescale(t0, curve, eta, **kwargs) for eta in sorted(etas)]
        distances = np.array([patch.distance for patch in patches])
        decreasing = bool(np.all(np.diff(distances) <= 1e-12))
        return patches, decreasing

    # ------------------------------------------------------------------
    # De Giorgi monitor
    # ------------------------------------------------------------------

    def _ball_points(self, center, radius_max):
        record = self.record
        t_c, x_c = center
        rows = record.time_window(t_c - radius_max, t_c + radius_max)
        cells = np.nonzero(np.abs(record.grid.centers - x_c) <= radius_max)[0]
        return rows, cells

    def degiorgi_monitor(
        self,
        center,
        reference,
        direction=DeGiorgiDirection.BELOW_LAMBDA1,
        eps_target=1e-3,
        scale=None,
        min_density=None,
        theta0=None,
        levels=None,
        c_tilde=1.0,
    ):
        """
        Truncated kinetic masses on balls B_k of radius 1 + 2**-k (in units of
        `scale`) with cut levels eta * (1 - 2**-k), eta = c_tilde * eps**alpha.

        For BELOW_LAMBDA1 the masses are V_k, the kinetic mass below
        lambda1(reference) - l_k; for ABOVE_LAMBDA2 they are U_k, the mass
        above lambda2(reference) + l_k.

        Raises:
            GeometryError: if B_2 leaves the record
            VacuumError: if the density drops below min_density in B_2
        """
        record = self.record
        direction = DeGiorgiDirection(direction)
        scale = 8.0 * self.dx if scale is None else scale
        min_density = settings.DEGIORGI_MIN_DENSITY if min_density is None else min_density
        theta0 = settings.DEGIORGI_THETA if theta0 is None else theta0
        levels = settings.DEGIORGI_LEVELS if levels is None else levels
        t_c, x_c = float(center[0]), float(center[1])
        outer = 2.0 * scale
        grid = record.grid
        if (t_c - outer < record.t_start - 1e-12 or t_c + outer > record.t_final + 1e-12
                or x_c - outer < grid.x_min or x_c + outer > grid.x_max):
            raise GeometryError(f"B_2 of radius {outer:.3g} around {center} leaves the record")

        rows, cells = self._ball_points((t_c, x_c), outer)
        times = record.times[rows]
        rho = record.rho[np.ix_(rows, cells)]
        m = record.m[np.ix_(rows, cells)]
        distance = np.sqrt(
            ((times[:, None] - t_c) / scale) ** 2 + ((grid.centers[cells][None, :] - x_c) / scale) ** 2
        )
        in_outer = distance <= 2.0
        if np.any(rho[in_outer] < min_density):
            raise VacuumError(
                f"density {rho[in_outer].min():.3e} below M={min_density} inside B_2 around {center}"
            )

        lambda1, lambda2, _ = interval_from_conserved(rho, m, record.rho_floor)
        ref_lambda1, ref_lambda2, _ = interval_from_conserved(reference.rho, reference.m, record.rho_floor)
        ref_lambda1, ref_lambda2 = float(ref_lambda1), float(ref_lambda2)
        L = record.L
        if times.size > 1:
            gaps = np.diff(times)
            tw = np.zeros_like(times)
            tw[:-1] += gaps / 2.0
            tw[1:] += gaps / 2.0
        else:
            tw = np.ones_like(times)
        weights = tw[:, None] * grid.dx / scale ** 2 * np.ones_like(distance)

        if direction is DeGiorgiDirection.BELOW_LAMBDA1:
            excess = np.maximum(ref_lambda1 - lambda1, 0.0)
        else:
            excess = np.maximum(lambda2 - ref_lambda2, 0.0)
        eps = float(np.sum(np.where(in_outer, excess * weights, 0.0)))
        alpha = degiorgi_alpha(theta0)
        eta = c_tilde * eps ** alpha if eps > 0.0 else 0.0

        k = np.arange(levels + 1)
        radii = 1.0 + 2.0 ** (-k)
        cuts = eta * (1.0 - 2.0 ** (-k))
        masses = []
        for radius, cut in zip(radii, cuts):
            inside = distance <= radius
            if direction is DeGiorgiDirection.BELOW_LAMBDA1:
                amount = np.minimum(lambda2, ref_lambda1 - cut) - np.maximum(lambda1, -L)
            else:
                amount = np.minimum(lambda2, L) - np.maximum(lambda1, ref_lambda2 + cut)
            masses.append(float(np.sum(np.where(inside, np.maximum(amount, 0.0) * weights, 0.0))))
        masses = np.array(masses)

        sup_bound = float(excess[distance <= 1.0].max()) if np.any(distance <= 1.0) else 0.0
        truncated = masses[-1] <= 1e-14 * max(1.0, masses[0])
        implied = eta if truncated else None
        consistent = implied is None or sup_bound <= eta + 1e-12
        converged = bool(masses[0] == 0.0 or masses[-1] <= 1e-3 * masses[0])
        passed = bool(consistent and (eps > eps_target or converged))
        logger.info(
            f"De Giorgi monitor at {center}: eps={eps:.3e}, eta={eta:.3e}, "
            f"U_0={masses[0]:.3e}, U_K={masses[-1]:.3e}, sup={sup_bound:.3e}"
        )
        return DeGiorgiReport(
            center=(t_c, x_c),
            scale=scale,
            direction=direction,
            reference=(reference.rho, reference.m),
            theta0=theta0,
            alpha=alpha,
            eps=eps,
            eta=eta,
            radii=radii,
            levels=cuts,
            masses=masses,
            sup_bound=sup_bound,
            implied_sup=implied,
            truncation_consistent=bool(consistent),
            eps_target=eps_target,
            converged=converged,
            passed=passed,
        )

    # ------------------------------------------------------------------
    # Semicontinuity
    # ------------------------------------------------------------------

    def envelope_radii(self, depth=None, base_cells=2):
        """Ball radii base_cells * dx * 2**j for j < depth, smallest first."""
        depth = settings.ENVELOPE_LADDER_DEPTH if depth is None else depth
        return base_cells * self.dx * 2.0 ** np.arange(depth)

    def sample_points(self, n, rng, shock_lines=(), depth=None, base_cells=2, max_rounds=100):
        """
        n random (t, x) points whose largest envelope ball fits the record.

        shock_lines holds (x0, speed) pairs for lines x = x0 + speed * t; a
        draw is kept only when |x - x0 - speed * t| > R (1 + |speed|), so its
        largest ball, of radius R, stays clear of every line.

        Raises:
            GeometryError: if the record cannot hold a ball of radius R, or
                the lines leave too little room after max_rounds draws
        """
        record = self.record
        grid = record.grid
        margin = float(self.envelope_radii(depth, base_cells)[-1])
        t_lo, t_hi = record.t_start + margin, record.t_final - margin
        x_lo, x_hi = grid.x_min + margin, grid.x_max - margin
        if t_hi <= t_lo or x_hi <= x_lo:
            raise GeometryError(f"record too small for envelope balls of radius {margin:.3g}")

        kept = np.empty((0, 2))
        for _ in range(max_rounds):
            t = rng.uniform(t_lo, t_hi, n)
            x = rng.uniform(x_lo, x_hi, n)
            clear = np.ones(n, dtype=bool)
            for x0, speed in shock_lines:
                clear &= np.abs(x - x0 - speed * t) > margin * (1.0 + abs(speed))
            kept = np.vstack([kept, np.column_stack([t, x])[clear]])
            if len(kept) >= n:
                return [(float(t_), float(x_)) for t_, x_ in kept[:n]]
        raise GeometryError(
            f"only {len(kept)} of {n} points clear of {len(shock_lines)} shock lines "
            f"after {max_rounds} draws"
        )

    def envelope_ladder(self, point, radii):
        """Means and essential bounds of the state over balls of the given radii."""
        record = self.record
        t_c, x_c = point
        rows, cells = self._ball_points(point, radii[-1])
        rho = record.rho[np.ix_(rows, cells)]
        m = record.m[np.ix_(rows, cells)]
        distance = np.sqrt((record.times[rows][:, None] - t_c) ** 2 + (record.grid.centers[cells][None, :] - x_c) ** 2)
        lambda1, lambda2, vacuum = interval_from_conserved(rho, m, record.rho_floor)

        columns = {name: [] for name in (
            "rho_mean", "rho_sup", "lambda1_mean", "lambda1_inf", "lambda2_mean",
            "lambda2_sup", "m_mean", "m_sup", "m_inf", "defect")}
        any_vacuum = False
        for radius in radii:
            inside = distance <= radius
            if not inside.any():
                raise GeometryError(f"no grid point within radius {radius:.3g} of {point}")
            r_in, m_in = rho[inside], m[inside]
            rho_hat, m_hat = r_in.mean(), m_in.mean()
            live = ~vacuum[inside]
            any_vacuum = any_vacuum or not live.all()
            hat1, hat2, _ = interval_from_conserved(rho_hat, m_hat, record.rho_floor)
            columns["rho_mean"].append(rho_hat)
            columns["rho_sup"].append(r_in.max())
            columns["lambda1_mean"].append(float(hat1))
            columns["lambda2_mean"].append(float(hat2))
            columns["lambda1_inf"].append(lambda1[inside][live].min() if live.any() else np.nan)
            columns["lambda2_sup"].append(lambda2[inside][live].max() if live.any() else np.nan)
            columns["m_mean"].append(m_hat)
            columns["m_sup"].append(m_in.max())
            columns["m_inf"].append(m_in.min())
            columns["defect"].append(np.mean(np.abs(r_in - rho_hat) + np.abs(m_in - m_hat)))
        ladder = EnvelopeLadder(radii=np.asarray(radii), **{k: np.array(v, dtype=float) for k, v in columns.items()})
        return ladder, any_vacuum

    def _semicontinuity_point(self, point, radii, tolerance, vmo_tolerance, entropy_service, dissipation):
        ladder, vacuum = self.envelope_ladder(point, radii)
        slack = 1e-12
        defect = ladder.defect
        vmo = bool(defect.max() <= vmo_tolerance and np.all(np.diff(defect) >= -vmo_tolerance * 1e-3 - slack))

        ordering_ok = True
        if not vacuum:
            ordering_ok = bool(
                np.all(ladder.rho_mean <= ladder.rho_sup + slack)
                and np.all(ladder.lambda1_inf <= ladder.lambda1_mean + slack)
                and np.all(ladder.lambda2_mean <= ladder.lambda2_sup + slack)
            )
        rho_gap = float(abs(ladder.rho_mean[0] - ladder.rho_sup[0]))
        lambda1_gap = float(abs(ladder.lambda1_mean[0] - ladder.lambda1_inf[0]))
        lambda2_gap = float(abs(ladder.lambda2_mean[0] - ladder.lambda2_sup[0]))

        if not vacuum and ladder.lambda1_inf[0] >= 0.0:
            regime, momentum_gap = "lambda1>=0", float(abs(ladder.m_mean[0] - ladder.m_sup[0]))
        elif not vacuum and ladder.lambda2_sup[0] <= 0.0:
            regime, momentum_gap = "lambda2<=0", float(abs(ladder.m_mean[0] - ladder.m_inf[0]))
        else:
            regime, momentum_gap = "not applicable", None

        if vacuum:
            passed = True
        elif vmo:
            gaps = [rho_gap, lambda1_gap, lambda2_gap]
            if momentum_gap is not None:
                gaps.append(momentum_gap)
            passed = ordering_ok and all(gap <= tolerance for gap in gaps)
        else:
            passed = ordering_ok

        density = None
        if dissipation is not None and not vmo:
            density = entropy_service.jump_density(dissipation, point, [radii[-1]]).limit
        return SemicontinuityPoint(
            point=(float(point[0]), float(point[1])),
            vmo=vmo,
            vacuum=vacuum,
            ordering_ok=ordering_ok,
            rho_gap=rho_gap,
            lambda1_gap=lambda1_gap,
            lambda2_gap=lambda2_gap,
            momentum_regime=regime,
            momentum_gap=momentum_gap,
            tolerance=tolerance,
            passed=bool(passed),
            ladder=ladder,
            jump_density=density,
        )

    def semicontinuity_check(
        self,
        points,
        depth=None,
        base_cells=2,
        tolerance=None,
        vmo_tolerance=None,
        dissipation=None,
    ):
        """
        Envelope and VMO checks at each (t, x) point.

        Radii are base_cells * dx * 2**j for j < depth; the smallest radius
        stands in for the limit r -> 0. A point is VMO when its mean
        oscillation stays below vmo_tolerance on the whole ladder and does
        not grow as r shrinks. Non-VMO points are reported, not failed.
        With a DissipationField, non-VMO points also carry the jump-set
        density mu(B_r x R) / r at the largest radius.
        """
        root_dx = float(np.sqrt(self.dx))
        tolerance = 5.0 * root_dx if tolerance is None else tolerance
        vmo_tolerance = 5.0 * root_dx if vmo_tolerance is None else vmo_tolerance
        radii = self.envelope_radii(depth, base_cells)

        entropy_service = None
        if dissipation is not None:
            from kinetic_lab.services.entropy_service import EntropyService

            entropy_service = EntropyService(self.record, n_jobs=1)

        results = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self._semicontinuity_point)(
                (float(p[0]), float(p[1])), radii, tolerance, vmo_tolerance, entropy_service, dissipation
            )
            for p in points
        )
        report = SemicontinuityReport(points=list(results))
        logger.info(
            f"Semicontinuity at {len(results)} points: VMO fraction {report.vmo_fraction:.2f}, "
            f"passed={report.passed}"
        )
        return report
