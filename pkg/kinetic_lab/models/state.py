"""
Conserved and kinetic state representations.

For gamma = 3 the kinetic density is exactly the indicator of the interval
[lambda1, lambda2] in velocity space, so every velocity integral used in the
package is a closed-form integral of a polynomial over an interval. The
helpers at the top of this module are those integrals.
"""

from dataclasses import dataclass

import numpy as np

from lab_project import settings
from kinetic_lab.exceptions import (
    ConfigurationError,
    InvariantViolation,
    OrderingError,
    VacuumError,
)


def _scalar_or_array(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def interval_power_integral(k, p, q):
    """
    Integral of v**k over [p, q].

    Uses the factored form (q - p) * sum(q**i * p**(k - i)) / (k + 1) so
    narrow intervals far from the origin do not lose digits.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    total = np.zeros(np.broadcast(p, q).shape)
    for i in range(k + 1):
        total = total + q ** i * p ** (k - i)
    return (q - p) * total / (k + 1)


def positive_part_integral(k, p, q):
    """Integral of v_+ * v**k over [p, q]."""
    return interval_power_integral(k + 1, np.maximum(p, 0.0), np.maximum(q, 0.0))


def negative_part_integral(k, p, q):
    """Integral of v_- * v**k over [p, q], with v_- = max(-v, 0)."""
    return -interval_power_integral(k + 1, np.minimum(p, 0.0), np.minimum(q, 0.0))


def momentum_flux(rho, m, rho_floor=None):
    """Flux (m, m**2/rho + rho**3/12); vacuum cells carry no flux."""
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    vacuum = rho < floor
    safe = np.where(vacuum, 1.0, rho)
    mass_flux = np.where(vacuum, 0.0, m)
    momentum = np.where(vacuum, 0.0, m * m / safe + rho ** 3 / 12.0)
    return _scalar_or_array(mass_flux), _scalar_or_array(momentum)


def riemann_invariants(rho, m, rho_floor=None):
    """
    Riemann invariants lambda1 = m/rho - rho/2 and lambda2 = m/rho + rho/2.

    Raises:
        VacuumError: if any density is at or below the vacuum floor
    """
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(~(rho > 0.0)) or np.any(rho < floor):
        raise VacuumError(
            f"Riemann invariants are undefined at vacuum (min density {np.min(rho):.3e}, "
            f"floor {floor:.1e})"
        )
    velocity = m / rho
    return _scalar_or_array(velocity - rho / 2.0), _scalar_or_array(velocity + rho / 2.0)


def from_invariants(lambda1, lambda2):
    """
    Conserved state of the interval [lambda1, lambda2].

    Raises:
        OrderingError: if lambda1 > lambda2 anywhere
    """
    lambda1 = np.asarray(lambda1, dtype=float)
    lambda2 = np.asarray(lambda2, dtype=float)
    if np.any(lambda1 > lambda2):
        worst = float(np.max(lambda1 - lambda2))
        raise OrderingError(f"lambda1 exceeds lambda2 by {worst:.3e}")
    rho = lambda2 - lambda1
    m = rho * (lambda2 + lambda1) / 2.0
    return _scalar_or_array(rho), _scalar_or_array(m)


def interval_from_conserved(rho, m, rho_floor=None):
    """
    Kinetic interval of (rho, m) with the vacuum rule applied.

    Cells below the floor keep their density, lose their momentum and are
    centred at v = 0. Returns (lambda1, lambda2, vacuum_mask).
    """
    floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    vacuum = rho < floor
    velocity = np.where(vacuum, 0.0, m / np.where(vacuum, 1.0, rho))
    return velocity - rho / 2.0, velocity + rho / 2.0, vacuum


def kinetic_moments(interval):
    """
    Moments (rho, m, e2) of the indicator of [lambda1, lambda2].

    Accepts a KineticInterval or a (lambda1, lambda2) pair.
    """
    if isinstance(interval, KineticInterval):
        lambda1, lambda2 = interval.lambda1, interval.lambda2
    else:
        lambda1, lambda2 = interval
    lambda1 = np.asarray(lambda1, dtype=float)
    lambda2 = np.asarray(lambda2, dtype=float)
    if np.any(lambda1 > lambda2):
        raise OrderingError("kinetic interval with lambda1 > lambda2")
    rho = interval_power_integral(0, lambda1, lambda2)
    m = interval_power_integral(1, lambda1, lambda2)
    e2 = interval_power_integral(2, lambda1, lambda2)
    return _scalar_or_array(rho), _scalar_or_array(m), _scalar_or_array(e2)


@dataclass(frozen=True)
class ConservedState:
    """A single (rho, m) state."""

    rho: float
    m: float

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "m", float(self.m))
        if not (np.isfinite(self.rho) and np.isfinite(self.m)):
            raise InvariantViolation(f"non-finite state ({self.rho}, {self.m})")
        if self.rho < 0.0:
            raise InvariantViolation(f"negative density {self.rho}")

    @classmethod
    def from_velocity(cls, rho, velocity):
        return cls(rho, rho * velocity)

    @classmethod
    def from_invariants(cls, lambda1, lambda2):
        return cls(*from_invariants(lambda1, lambda2))

    @classmethod
    def vacuum(cls):
        return cls(0.0, 0.0)

    def is_vacuum(self, rho_floor=None):
        floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
        return self.rho < floor

    @property
    def velocity(self):
        return self.m / self.rho if self.rho > 0.0 else 0.0

    def invariants(self, rho_floor=None):
        return riemann_invariants(self.rho, self.m, rho_floor)

    def flux(self, rho_floor=None):
        return momentum_flux(self.rho, self.m, rho_floor)

    def as_array(self):
        return np.array([self.rho, self.m])

    def mirrored(self):
        return ConservedState(self.rho, -self.m)

    def to_dict(self):
        return {"rho": self.rho, "m": self.m}


@dataclass(frozen=True, eq=False)
class ConservedField:
    """Per-cell mass and momentum densities."""

    rho: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        m = np.array(self.m, dtype=float)
        if rho.ndim != 1 or rho.shape != m.shape:
            raise InvariantViolation(
                f"rho and m must be 1-D arrays of equal length, got {rho.shape} and {m.shape}"
            )
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(m))):
            raise InvariantViolation("field contains non-finite values")
        if np.any(rho < 0.0):
            raise InvariantViolation(f"negative density {rho.min():.3e} in field")
        if np.any((rho == 0.0) & (m != 0.0)):
            raise InvariantViolation("vacuum cells must carry zero momentum")
        rho.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "m", m)

    @classmethod
    def constant(cls, n_cells, state):
        return cls(np.full(n_cells, state.rho), np.full(n_cells, state.m))

    @classmethod
    def from_invariants(cls, lambda1, lambda2):
        return cls(*from_invariants(lambda1, lambda2))

    @property
    def n_cells(self):
        return self.rho.size

    def state(self, index):
        return ConservedState(self.rho[index], self.m[index])

    def vacuum_mask(self, rho_floor=None):
        floor = settings.RHO_FLOOR if rho_floor is None else rho_floor
        return self.rho < floor

    def invariants(self, rho_floor=None):
        """(lambda1, lambda2, vacuum) with both invariants reported as 0 at vacuum."""
        lambda1, lambda2, vacuum = interval_from_conserved(self.rho, self.m, rho_floor)
        return np.where(vacuum, 0.0, lambda1), np.where(vacuum, 0.0, lambda2), vacuum

    def velocity(self, rho_floor=None):
        vacuum = self.vacuum_mask(rho_floor)
        return np.where(vacuum, 0.0, self.m / np.where(vacuum, 1.0, self.rho))

    def kinetic_interval(self, L, rho_floor=None):
        lambda1, lambda2, _ = interval_from_conserved(self.rho, self.m, rho_floor)
        return KineticInterval(lambda1, lambda2, L)

    def max_speed(self, rho_floor=None):
        lambda1, lambda2, vacuum = self.invariants(rho_floor)
        if np.all(vacuum):
            return 0.0
        return float(max(np.max(np.abs(lambda1[~vacuum])), np.max(np.abs(lambda2[~vacuum]))))

    def totals(self, dx):
        """Total mass and momentum."""
        return float(np.sum(self.rho) * dx), float(np.sum(self.m) * dx)

    def l1_distance(self, other, dx):
        return float(np.sum(np.abs(self.rho - other.rho) + np.abs(self.m - other.m)) * dx)


@dataclass(frozen=True, eq=False)
class KineticInterval:
    """
    Per-cell velocity intervals [lambda1, lambda2] inside [-L, L].

    The kinetic density of cell j is the indicator of its interval.
    """

    lambda1: np.ndarray
    lambda2: np.ndarray
    L: float

    def __post_init__(self):
        lambda1 = np.array(self.lambda1, dtype=float)
        lambda2 = np.array(self.lambda2, dtype=float)
        if lambda1.shape != lambda2.shape:
            raise InvariantViolation("lambda1 and lambda2 must have the same shape")
        if np.any(lambda1 > lambda2):
            raise OrderingError(
                f"kinetic interval with lambda1 > lambda2 (by {np.max(lambda1 - lambda2):.3e})"
            )
        L = float(self.L)
        slack = 1e-10 * max(1.0, L)
        if lambda1.size and (np.min(lambda1) < -L - slack or np.max(lambda2) > L + slack):
            raise ConfigurationError(
                f"velocity support [{np.min(lambda1):.6g}, {np.max(lambda2):.6g}] "
                f"exceeds the bound L = {L:.6g}"
            )
        lambda1.flags.writeable = False
        lambda2.flags.writeable = False
        object.__setattr__(self, "lambda1", lambda1)
        object.__setattr__(self, "lambda2", lambda2)
        object.__setattr__(self, "L", L)

    @property
    def rho(self):
        return self.lambda2 - self.lambda1

    def moments(self):
        return kinetic_moments(self)

    def to_field(self):
        return ConservedField.from_invariants(self.lambda1, self.lambda2)

    def density_on(self, velocities):
        """Indicator values f(v) on a velocity grid, shape (n_cells, n_velocities)."""
        v = np.asarray(velocities, dtype=float)[None, :]
        return ((v >= self.lambda1[:, None]) & (v <= self.lambda2[:, None])).astype(float)


@dataclass(frozen=True)
class StateBounds:
    """
    Bounds of a family of states.

    Gamma bounds max rho + max |m/rho|, M is a lower density bound and L a
    velocity support bound. L >= 1.5 * Gamma is sufficient since
    |lambda_i| <= |m/rho| + rho/2.
    """

    Gamma: float
    M: float = 0.0
    L: float = None

    def __post_init__(self):
        if not 0.0 <= self.M <= self.Gamma:
            raise ConfigurationError(
                f"state bounds need 0 <= M <= Gamma, got M={self.M}, Gamma={self.Gamma}"
            )
        if self.L is None:
            object.__setattr__(self, "L", 1.5 * self.Gamma)

    @property
    def sufficient(self):
        return self.L >= 1.5 * self.Gamma

    @classmethod
    def from_field(cls, field, rho_floor=None):
        velocity = field.velocity(rho_floor)
        gamma = float(np.max(field.rho) + np.max(np.abs(velocity)))
        return cls(Gamma=gamma, M=float(np.min(field.rho)))

    def contains(self, field, rho_floor=None):
        velocity = field.velocity(rho_floor)
        size = float(np.max(field.rho) + np.max(np.abs(velocity)))
        return size <= self.Gamma + 1e-12 and float(np.min(field.rho)) >= self.M - 1e-12
