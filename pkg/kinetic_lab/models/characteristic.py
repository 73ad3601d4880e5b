from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.integrate import quad

from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.models.reports import DichotomyReport


def bump(s):
    """Unnormalized smooth bump exp(-1/(s(1 - s))) supported in (0, 1)."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    safe = np.where(inside, s, 0.5)
    return np.where(inside, np.exp(-1.0 / (safe * (1.0 - safe))), 0.0)


_BUMP_MASS = quad(lambda s: float(bump(s)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)[0]


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    """
    psi_eps(y) = psi(y / eps) / eps for the normalized smooth bump psi on (0, 1).

    Quadrature uses Gauss-Legendre nodes on (0, 1); the weights are psi at
    the nodes times the Gauss weights, renormalized so they sum to one.
    """

    eps: float
    n_nodes: int = 16

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ConfigurationError(f"mollifier width must be positive, got {self.eps}")
        if self.n_nodes < 2:
            raise ConfigurationError("a mollifier needs at least two quadrature nodes")
        nodes, weights = np.polynomial.legendre.leggauss(self.n_nodes)
        unit_nodes = 0.5 * (nodes + 1.0)
        kernel_weights = 0.5 * weights * bump(unit_nodes) / _BUMP_MASS
        kernel_weights = kernel_weights / kernel_weights.sum()
        unit_nodes.flags.writeable = False
        kernel_weights.flags.writeable = False
        object.__setattr__(self, "unit_nodes", unit_nodes)
        object.__setattr__(self, "weights", kernel_weights)

    @property
    def offsets(self):
        """Quadrature points of psi_eps, all inside (0, eps)."""
        return self.eps * self.unit_nodes

    def density(self, y):
        return bump(np.asarray(y, dtype=float) / self.eps) / (_BUMP_MASS * self.eps)

    def total_weight(self):
        return float(self.weights.sum())


@dataclass
class CharacteristicRun:
    """Mollified characteristics over an eps ladder and the extracted limit."""

    family: int
    sigma: float
    x0: float
    eps_ladder: np.ndarray
    times: np.ndarray
    h_eps: List[np.ndarray]
    hdot_eps: List[np.ndarray]
    velocity_bound: float
    ladder_norms: np.ndarray
    ladder_converged: bool
    vacuum_touched: bool
    tolerance: float
    lower_bound: Optional[np.ndarray] = None
    upper_bound: Optional[np.ndarray] = None
    violation_flags: Optional[np.ndarray] = None
    violation_fraction: Optional[float] = None
    dichotomy: Optional[DichotomyReport] = None
    passed: bool = False

    @property
    def h(self):
        return self.h_eps[-1]

    @property
    def hdot(self):
        return self.hdot_eps[-1]

    def mean_speed(self, t_from=None):
        """Chord slope of the limit curve from t_from (default mid-run) to the end."""
        times = self.times
        start = 0.5 * (times[0] + times[-1]) if t_from is None else t_from
        i = int(np.searchsorted(times, start))
        i = min(i, times.size - 2)
        return float((self.h[-1] - self.h[i]) / (times[-1] - times[i]))
