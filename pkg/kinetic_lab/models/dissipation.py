from dataclasses import dataclass
from enum import Enum

import numpy as np

from kinetic_lab.exceptions import ConfigurationError, InvariantViolation
from kinetic_lab.models.state import interval_from_conserved, interval_power_integral


class EntropyKind(str, Enum):
    ENERGY = "energy"
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class EntropyPair:
    """
    Kinetic entropy pair generated by a convex velocity kernel g.

    eta(u) = integral of g(v) over [lambda1, lambda2] and q(u) the integral
    of v g(v). Kernels: energy v**2/2, and the one-sided (v - v0)_+ and
    (v0 - v)_+.
    """

    kind: EntropyKind
    v0: float = 0.0

    @classmethod
    def energy(cls):
        return cls(EntropyKind.ENERGY)

    @classmethod
    def plus(cls, v0):
        return cls(EntropyKind.PLUS, float(v0))

    @classmethod
    def minus(cls, v0):
        return cls(EntropyKind.MINUS, float(v0))

    def kernel(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind is EntropyKind.ENERGY:
            return v * v / 2.0
        if self.kind is EntropyKind.PLUS:
            return np.maximum(v - self.v0, 0.0)
        return np.maximum(self.v0 - v, 0.0)

    def evaluate_interval(self, lambda1, lambda2):
        """(eta, q) of the indicator of [lambda1, lambda2], in closed form."""
        lambda1 = np.asarray(lambda1, dtype=float)
        lambda2 = np.asarray(lambda2, dtype=float)
        v0 = self.v0
        if self.kind is EntropyKind.ENERGY:
            eta = interval_power_integral(2, lambda1, lambda2) / 2.0
            q = interval_power_integral(3, lambda1, lambda2) / 2.0
        elif self.kind is EntropyKind.PLUS:
            lo, hi = np.maximum(lambda1, v0), np.maximum(lambda2, v0)
            eta = interval_power_integral(1, lo, hi) - v0 * interval_power_integral(0, lo, hi)
            q = interval_power_integral(2, lo, hi) - v0 * interval_power_integral(1, lo, hi)
        else:
            lo, hi = np.minimum(lambda1, v0), np.minimum(lambda2, v0)
            eta = v0 * interval_power_integral(0, lo, hi) - interval_power_integral(1, lo, hi)
            q = v0 * interval_power_integral(1, lo, hi) - interval_power_integral(2, lo, hi)
        return eta, q

    def evaluate(self, rho, m, rho_floor=None):
        """(eta, q) at conserved states; vacuum gives (0, 0)."""
        lambda1, lambda2, vacuum = interval_from_conserved(rho, m, rho_floor)
        eta, q = self.evaluate_interval(lambda1, lambda2)
        eta = np.where(vacuum, 0.0, eta)
        q = np.where(vacuum, 0.0, q)
        if eta.ndim == 0:
            return float(eta), float(q)
        return eta, q

    def label(self):
        if self.kind is EntropyKind.ENERGY:
            return "energy"
        return f"{self.kind.value}({self.v0:g})"


@dataclass(frozen=True, eq=False)
class DissipationField:
    """
    Binned estimate of the entropy dissipation measure over (t, x, v).

    mass[i, j, k] is the measure of time bin i, space bin j and the velocity
    cell centred at v_nodes[k] with width dv.
    """

    t_edges: np.ndarray
    x_edges: np.ndarray
    v_nodes: np.ndarray
    dv: float
    mass: np.ndarray
    L: float

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        expected = (len(self.t_edges) - 1, len(self.x_edges) - 1, len(self.v_nodes))
        if mass.shape != expected:
            raise ConfigurationError(f"mass has shape {mass.shape}, expected {expected}")
        if not np.all(np.isfinite(mass)):
            raise InvariantViolation("dissipation field contains non-finite masses")
        if mass.size and mass.min() < -1e-12:
            raise InvariantViolation(f"negative dissipation mass {mass.min():.3e}")
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "t_edges", np.asarray(self.t_edges, dtype=float))
        object.__setattr__(self, "x_edges", np.asarray(self.x_edges, dtype=float))
        object.__setattr__(self, "v_nodes", np.asarray(self.v_nodes, dtype=float))

    @property
    def t_centers(self):
        return 0.5 * (self.t_edges[:-1] + self.t_edges[1:])

    @property
    def x_centers(self):
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    @property
    def duration(self):
        return float(self.t_edges[-1] - self.t_edges[0])

    def total(self):
        return float(self.mass.sum())

    def velocity_marginal(self):
        return self.mass.sum(axis=(0, 1))

    def time_marginal(self):
        return self.mass.sum(axis=(1, 2))

    def mass_in_ball(self, center, radius, v_min=-np.inf, v_max=np.inf, x_period=None):
        """
        Mass of bins whose (t, x) centre lies in the Euclidean ball and whose
        velocity node lies in [v_min, v_max].
        """
        t_c, x_c = center
        dx = self.x_centers[None, :] - x_c
        if x_period is not None:
            dx = (dx + 0.5 * x_period) % x_period - 0.5 * x_period
        inside = (self.t_centers[:, None] - t_c) ** 2 + dx ** 2 <= radius ** 2
        velocities = (self.v_nodes >= v_min) & (self.v_nodes <= v_max)
        return float(self.mass[inside][:, velocities].sum())

    def summary(self):
        return {
            "total_mass": self.total(),
            "min_bin": float(self.mass.min()) if self.mass.size else 0.0,
            "time_bins": len(self.t_edges) - 1,
            "space_bins": len(self.x_edges) - 1,
            "velocity_nodes": len(self.v_nodes),
            "dv": self.dv,
            "L": self.L,
            "duration": self.duration,
        }
