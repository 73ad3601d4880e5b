"""
Riemann Service

Exact Riemann solver for isentropic gas dynamics with gamma = 3:
- Hugoniot states with Lax admissibility per family
- Star density from the intersection of the 1-wave curve of the left state
  and the 2-wave curve of the right state, in (rho, u) variables
- Vacuum detection (lambda1 of the right state >= lambda2 of the left state)
- Sampling of the self-similar solution along rays x/t
- Vectorized interface fluxes for the Godunov scheme

The star solve runs on arrays so one code path serves single problems and
whole grids of interface problems.
"""

import logging

import numpy as np

from lab_project import settings
from kinetic_lab.exceptions import (
    AdmissibilityError,
    ConfigurationError,
    ConvergenceError,
    VacuumError,
)
from kinetic_lab.models.dissipation import EntropyPair
from kinetic_lab.models.riemann import RiemannSolution, Wave, WaveKind
from kinetic_lab.models.state import ConservedState, momentum_flux

logger = logging.getLogger(__name__)

# Relative density gap below which a family is treated as zero strength
_STRENGTH_TOLERANCE = 1e-10


def _pressure(rho):
    return rho ** 3 / 12.0


def _wave_curve(rho, rho_k, u_k, sign):
    """
    Velocity on a wave curve through (rho_k, u_k) and its rho-derivative.

    sign = -1 gives the 1-curve issued from a left state, sign = +1 the
    2-curve reaching a right state. Rarefaction branch for rho <= rho_k,
    Hugoniot branch above.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        rarefaction = u_k - sign * (rho_k - rho) / 2.0
        safe_rho = np.where(rho > 0.0, rho, 1.0)
        safe_k = np.where(rho_k > 0.0, rho_k, 1.0)
        jump_p = _pressure(rho) - _pressure(rho_k)
        jump_v = 1.0 / safe_k - 1.0 / safe_rho
        g = np.maximum(jump_p * jump_v, 0.0)
        root = np.sqrt(g)
        shock = u_k + sign * root
        dg = (rho ** 2 / 4.0) * jump_v + jump_p / safe_rho ** 2
        tiny = root < 1e-14 * np.maximum(1.0, rho)
        shock_slope = np.where(tiny, sign * 0.5, sign * dg / (2.0 * np.where(tiny, 1.0, root)))
    on_shock = rho > rho_k
    value = np.where(on_shock, shock, rarefaction)
    slope = np.where(on_shock, shock_slope, sign * 0.5)
    return value, slope


def _prepare(rho_l, m_l, rho_r, m_r, rho_floor):
    """
    Broadcast inputs and compute invariants with vacuum sides folded in.

    A vacuum side borrows the edge invariant of the other side, so a vacuum
    on the left becomes a degenerate 1-fan sitting at lambda1 of the right
    state. The problem is a vacuum problem iff lambda2 of the left is at or
    below lambda1 of the right afterwards.
    """
    rho_l, m_l, rho_r, m_r = np.broadcast_arrays(
        np.asarray(rho_l, dtype=float),
        np.asarray(m_l, dtype=float),
        np.asarray(rho_r, dtype=float),
        np.asarray(m_r, dtype=float),
    )
    if not (np.all(np.isfinite(rho_l)) and np.all(np.isfinite(rho_r))
            and np.all(np.isfinite(m_l)) and np.all(np.isfinite(m_r))):
        raise ConvergenceError("non-finite Riemann data")
    vac_l = rho_l < rho_floor
    vac_r = rho_r < rho_floor
    rho_l = np.where(vac_l, 0.0, rho_l)
    rho_r = np.where(vac_r, 0.0, rho_r)
    m_l = np.where(vac_l, 0.0, m_l)
    m_r = np.where(vac_r, 0.0, m_r)
    u_l = np.where(vac_l, 0.0, m_l / np.where(vac_l, 1.0, rho_l))
    u_r = np.where(vac_r, 0.0, m_r / np.where(vac_r, 1.0, rho_r))
    l1_l_raw, l2_l_raw = u_l - rho_l / 2.0, u_l + rho_l / 2.0
    l1_r_raw, l2_r_raw = u_r - rho_r / 2.0, u_r + rho_r / 2.0
    edge_l = np.where(vac_r, 0.0, l1_r_raw)
    edge_r = np.where(vac_l, 0.0, l2_l_raw)
    l1_l = np.where(vac_l, edge_l, l1_l_raw)
    l2_l = np.where(vac_l, edge_l, l2_l_raw)
    l1_r = np.where(vac_r, edge_r, l1_r_raw)
    l2_r = np.where(vac_r, edge_r, l2_r_raw)
    return {
        "rho_l": rho_l, "m_l": m_l, "u_l": u_l, "l1_l": l1_l, "l2_l": l2_l,
        "rho_r": rho_r, "m_r": m_r, "u_r": u_r, "l1_r": l1_r, "l2_r": l2_r,
        "vacuum": l2_l <= l1_r,
    }


def _star_density(data, tolerance=None, max_iterations=None):
    """
    Solve phi1(rho) = phi2(rho) for every non-vacuum problem.

    F = phi1 - phi2 is decreasing with F(0) = lambda2_L - lambda1_R > 0 and
    F(rho) <= F(0) - rho, so [0, F(0)] always brackets the root. Bisection
    to the tolerance, then a guarded Newton polish.

    Returns (rho_star, u_from_1_curve, u_from_2_curve, iterations).
    """
    tolerance = settings.RIEMANN_TOLERANCE if tolerance is None else tolerance
    max_iterations = settings.RIEMANN_MAX_ITERATIONS if max_iterations is None else max_iterations
    active = ~data["vacuum"]
    lo = np.zeros_like(data["rho_l"])
    hi = np.where(active, data["l2_l"] - data["l1_r"], 0.0)
    width_target = tolerance * np.maximum(1.0, hi)

    def residual(rho):
        phi1, d1 = _wave_curve(rho, data["rho_l"], data["u_l"], -1.0)
        phi2, d2 = _wave_curve(rho, data["rho_r"], data["u_r"], +1.0)
        return phi1 - phi2, d1 - d2

    iterations = 0
    while np.any(hi - lo > width_target):
        if iterations >= max_iterations:
            worst = int(np.argmax(hi - lo))
            raise ConvergenceError(
                "star density bisection did not converge",
                bracket=(float(lo.flat[worst]), float(hi.flat[worst])),
                iterations=iterations,
            )
        mid = 0.5 * (lo + hi)
        value, _ = residual(mid)
        positive = value > 0.0
        lo = np.where(positive, mid, lo)
        hi = np.where(positive, hi, mid)
        iterations += 1

    rho_star = 0.5 * (lo + hi)
    for _ in range(3):
        value, slope = residual(rho_star)
        with np.errstate(divide="ignore", invalid="ignore"):
            candidate = rho_star - value / slope
        candidate_value, _ = residual(np.where(np.isfinite(candidate), candidate, rho_star))
        better = (
            np.isfinite(candidate)
            & (candidate >= lo - width_target)
            & (candidate <= hi + width_target)
            & (np.abs(candidate_value) < np.abs(value))
        )
        rho_star = np.where(better, candidate, rho_star)
    rho_star = np.where(active, np.maximum(rho_star, 0.0), 0.0)

    u_one, _ = _wave_curve(rho_star, data["rho_l"], data["u_l"], -1.0)
    u_two, _ = _wave_curve(rho_star, data["rho_r"], data["u_r"], +1.0)
    # the edges of the vacuum region play the role of star velocities
    u_one = np.where(active, u_one, data["l2_l"])
    u_two = np.where(active, u_two, data["l1_r"])
    return rho_star, u_one, u_two, iterations


def _sample(data, rho_star, u_one, u_two, xi):
    """Vectorized evaluation of the self-similar solution at rays xi."""
    xi = np.asarray(xi, dtype=float)
    vacuum = data["vacuum"]
    rho_l, m_l, rho_r, m_r = data["rho_l"], data["m_l"], data["rho_r"], data["m_r"]
    l1_l, l2_l, l1_r, l2_r = data["l1_l"], data["l2_l"], data["l1_r"], data["l2_r"]

    gap_l = rho_star - rho_l
    gap_r = rho_star - rho_r
    shock1 = ~vacuum & (gap_l > _STRENGTH_TOLERANCE * np.maximum(1.0, rho_l))
    shock2 = ~vacuum & (gap_r > _STRENGTH_TOLERANCE * np.maximum(1.0, rho_r))
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = (rho_star * u_one - m_l) / np.where(shock1, gap_l, 1.0)
        s2 = (m_r - rho_star * u_two) / np.where(shock2, -gap_r, 1.0)

    head1 = np.where(shock1, s1, l1_l)
    tail1 = np.where(shock1, s1, np.where(vacuum, l2_l, u_one - rho_star / 2.0))
    head2 = np.where(shock2, s2, np.where(vacuum, l1_r, u_two + rho_star / 2.0))
    tail2 = np.where(shock2, s2, l2_r)

    u_mid = 0.5 * (u_one + u_two)
    rho = np.where(vacuum, 0.0, rho_star) + 0.0 * xi
    m = np.where(vacuum, 0.0, rho_star * u_mid) + 0.0 * xi

    fan2 = ~shock2 & (xi >= head2) & (xi <= tail2)
    fan2_rho = np.maximum(xi - l1_r, 0.0)
    rho = np.where(fan2, fan2_rho, rho)
    m = np.where(fan2, fan2_rho * (xi + l1_r) / 2.0, m)

    right = xi > tail2
    rho = np.where(right, rho_r, rho)
    m = np.where(right, m_r, m)

    fan1 = ~shock1 & (xi >= head1) & (xi <= tail1)
    fan1_rho = np.maximum(l2_l - xi, 0.0)
    rho = np.where(fan1, fan1_rho, rho)
    m = np.where(fan1, fan1_rho * (l2_l + xi) / 2.0, m)

    left = xi < head1
    rho = np.where(left, rho_l, rho)
    m = np.where(left, m_l, m)
    return rho, m


def hugoniot_state(u_left, rho_star, family):
    """
    Admissible Hugoniot state of density rho_star connected to u_left.

    Args:
        u_left: state on the left of the shock
        rho_star: density on the right of the shock
        family: 1 or 2

    Returns:
        (m_star, speed) solving the Rankine-Hugoniot conditions. A
        zero-strength shock returns (m_left, lambda_family(u_left)).

    Raises:
        VacuumError: for non-positive densities
        AdmissibilityError: if the density jump has the wrong sign for the family
    """
    if family not in (1, 2):
        raise ConfigurationError(f"family must be 1 or 2, got {family}")
    rho_l, m_l = u_left.rho, u_left.m
    if rho_l <= 0.0 or rho_star <= 0.0:
        raise VacuumError(f"Hugoniot states need positive densities, got {rho_l} and {rho_star}")
    if rho_star == rho_l:
        lambda1, lambda2 = u_left.invariants()
        return m_l, lambda1 if family == 1 else lambda2
    # 1-shocks compress the flow entering from the left, 2-shocks expand it
    if family == 1 and rho_star < rho_l:
        raise AdmissibilityError(
            f"a 1-shock needs rho_star > rho_left ({rho_star} <= {rho_l})"
        )
    if family == 2 and rho_star > rho_l:
        raise AdmissibilityError(
            f"a 2-shock needs rho_star < rho_left ({rho_star} >= {rho_l})"
        )
    u_l = m_l / rho_l
    root = np.sqrt((_pressure(rho_star) - _pressure(rho_l)) * (1.0 / rho_l - 1.0 / rho_star))
    m_star = rho_star * (u_l - root)
    speed = (m_star - m_l) / (rho_star - rho_l)
    return float(m_star), float(speed)


def solve_riemann(u_left, u_right, rho_floor=None):
    """
    Exact self-similar entropy solution for the data (u_left, u_right).

    Raises:
        ConvergenceError: if the star density bisection exhausts its iterations
    """
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    data = _prepare(u_left.rho, u_left.m, u_right.rho, u_right.m, floor)
    rho_star, u_one, u_two, iterations = _star_density(data)
    rho_star, u_one, u_two = float(rho_star), float(u_one), float(u_two)
    vacuum = bool(data["vacuum"])
    left = ConservedState(float(data["rho_l"]), float(data["m_l"]))
    right = ConservedState(float(data["rho_r"]), float(data["m_r"]))
    common = {"rho_floor": floor, "iterations": iterations}

    if left == right:
        return RiemannSolution(left, right, (), left, star_velocities=(left.velocity,) * 2, **common)

    l1_l, l2_l = float(data["l1_l"]), float(data["l2_l"])
    l1_r, l2_r = float(data["l1_r"]), float(data["l2_r"])

    if vacuum:
        void = ConservedState.vacuum()
        waves = []
        lo = -np.inf if left.is_vacuum(floor) else l2_l
        hi = np.inf if right.is_vacuum(floor) else l1_r
        if not left.is_vacuum(floor):
            waves.append(Wave(1, WaveKind.RAREFACTION, l1_l, l2_l, left, void))
        if not right.is_vacuum(floor):
            waves.append(Wave(2, WaveKind.RAREFACTION, l1_r, l2_r, void, right))
        logger.debug(f"Riemann problem opens a vacuum on [{lo}, {hi}]")
        return RiemannSolution(
            left, right, tuple(waves), None,
            vacuum=True, vacuum_region=(lo, hi), star_velocities=(u_one, u_two), **common,
        )

    star_one = ConservedState(rho_star, rho_star * u_one)
    star_two = ConservedState(rho_star, rho_star * u_two)
    star = ConservedState(rho_star, rho_star * 0.5 * (u_one + u_two))

    if rho_star - left.rho > _STRENGTH_TOLERANCE * max(1.0, left.rho):
        s1 = (star_one.m - left.m) / (star_one.rho - left.rho)
        first = Wave(1, WaveKind.SHOCK, s1, s1, left, star_one)
    elif left.rho - rho_star > _STRENGTH_TOLERANCE * max(1.0, left.rho):
        first = Wave(1, WaveKind.RAREFACTION, l1_l, u_one - rho_star / 2.0, left, star_one)
    else:
        first = Wave(1, WaveKind.CONTACTLESS, l1_l, l1_l, left, left)

    if rho_star - right.rho > _STRENGTH_TOLERANCE * max(1.0, right.rho):
        s2 = (right.m - star_two.m) / (right.rho - star_two.rho)
        second = Wave(2, WaveKind.SHOCK, s2, s2, star_two, right)
    elif right.rho - rho_star > _STRENGTH_TOLERANCE * max(1.0, right.rho):
        second = Wave(2, WaveKind.RAREFACTION, u_two + rho_star / 2.0, l2_r, star_two, right)
    else:
        second = Wave(2, WaveKind.CONTACTLESS, l2_r, l2_r, right, right)

    logger.debug(
        f"Riemann star state rho*={rho_star:.12g} after {iterations} bisection steps: "
        f"{first.kind.value}/{second.kind.value}"
    )
    return RiemannSolution(
        left, right, (first, second), star,
        star_velocities=(u_one, u_two), **common,
    )


def _solution_arrays(solution):
    data = _prepare(
        solution.left.rho, solution.left.m, solution.right.rho, solution.right.m,
        solution.rho_floor,
    )
    rho_star = 0.0 if solution.star is None else solution.star.rho
    u_one, u_two = solution.star_velocities
    return data, np.asarray(rho_star), np.asarray(u_one), np.asarray(u_two)


def sample_riemann_profile(solution, xi):
    """Vectorized sampler: (rho, m) arrays at the rays xi."""
    if not solution.waves:
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape, solution.left.rho), np.full(xi.shape, solution.left.m)
    data, rho_star, u_one, u_two = _solution_arrays(solution)
    return _sample(data, rho_star, u_one, u_two, xi)


def sample_riemann(solution, xi):
    """State of the self-similar solution on the ray x/t = xi."""
    rho, m = sample_riemann_profile(solution, float(xi))
    rho, m = float(rho), float(m)
    return ConservedState(rho, m if rho > 0.0 else 0.0)


def exact_field(solution, x, t, x_split=0.0):
    """Exact solution at positions x and time t for a jump placed at x_split."""
    x = np.asarray(x, dtype=float)
    if t <= 0.0:
        xi = np.where(x < x_split, -np.inf, np.inf)
    else:
        xi = (x - x_split) / t
    return sample_riemann_profile(solution, xi)


def riemann_flux(rho_l, m_l, rho_r, m_r, rho_floor=None):
    """
    Godunov interface fluxes: flux of the Riemann solution on the ray x/t = 0.

    All arguments are arrays of interface states; returns (mass_flux, momentum_flux).
    """
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    data = _prepare(rho_l, m_l, rho_r, m_r, floor)
    rho_star, u_one, u_two, _ = _star_density(data)
    rho, m = _sample(data, rho_star, u_one, u_two, 0.0)
    return momentum_flux(rho, m, floor)


def shock_entropy_residuals(wave, v0_samples=None):
    """
    Entropy residuals [q] - s [eta] across a wave.

    Evaluated for the energy pair and, when v0_samples is given, for the
    one-sided kinetic pairs (v - v0)_+ and (v0 - v)_+ at each sample.
    Admissible shocks give residuals <= 0.

    Returns:
        Dict with key "energy" and, if requested, "plus" / "minus" arrays
    """
    s = wave.speed
    up, down = wave.upstream, wave.downstream

    def residual(pair):
        eta_up, q_up = pair.evaluate(up.rho, up.m)
        eta_down, q_down = pair.evaluate(down.rho, down.m)
        return (q_down - q_up) - s * (eta_down - eta_up)

    result = {"energy": float(residual(EntropyPair.energy()))}
    if v0_samples is not None:
        result["plus"] = np.array([residual(EntropyPair.plus(v0)) for v0 in v0_samples])
        result["minus"] = np.array([residual(EntropyPair.minus(v0)) for v0 in v0_samples])
    return result


def check_solution(solution, v0_samples=None, tolerance=1e-10):
    """
    Audit a solution: RH residuals, Lax inequalities, entropy residuals.

    Returns:
        Dict of worst-case residuals and an overall "passed" flag
    """
    worst_rh = 0.0
    worst_lax = np.inf
    worst_entropy = -np.inf
    for wave in solution.shocks:
        worst_rh = max(worst_rh, float(np.max(np.abs(wave.rh_residual()))))
        worst_lax = min(worst_lax, wave.lax_gap())
        residuals = shock_entropy_residuals(wave, v0_samples)
        worst_entropy = max(worst_entropy, residuals["energy"])
        for key in ("plus", "minus"):
            if key in residuals and residuals[key].size:
                worst_entropy = max(worst_entropy, float(np.max(residuals[key])))
    passed = (
        worst_rh <= tolerance
        and (worst_lax == np.inf or worst_lax >= -1e-12)
        and (worst_entropy == -np.inf or worst_entropy <= tolerance)
    )
    if not passed:
        logger.warning(
            f"Riemann solution audit failed: rh={worst_rh:.3e}, lax={worst_lax:.3e}, "
            f"entropy={worst_entropy:.3e}"
        )
    return {
        "rh_residual": worst_rh,
        "lax_gap": None if worst_lax == np.inf else worst_lax,
        "entropy_residual": None if worst_entropy == -np.inf else worst_entropy,
        "passed": passed,
    }
