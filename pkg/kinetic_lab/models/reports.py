"""
Result types returned by the diagnostic services.

Reports are plain dataclasses holding numpy arrays; the report serializer
turns them into JSON and plot-data CSV.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np


class TraceSide(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    BOTH = "both"


class DichotomyLabel(str, Enum):
    CONTINUOUS = "continuous"
    SHOCK = "shock"


class BlowupFrame(str, Enum):
    # follow the curve: (t + eta*tau, h(t + eta*tau) + eta*y)
    CURVE = "curve"
    # freeze the base point: (t + eta*tau, h(t) + eta*y)
    STRAIGHT = "straight"


class DeGiorgiDirection(str, Enum):
    BELOW_LAMBDA1 = "below-lambda1"
    ABOVE_LAMBDA2 = "above-lambda2"


@dataclass
class TvBoundReport:
    """Dissipation versus kinetic mass on nested balls."""

    ratio: float
    numerator: float
    denominator: float
    r: float
    R: float
    a: float
    center: Tuple[float, float]
    side: str


@dataclass
class EntropyAuditReport:
    """Per-step change of the total entropy of a record."""

    entropy: str
    totals: np.ndarray
    changes: np.ndarray
    max_increase: float
    total_drop: float
    collapse_dissipation: float
    tolerance: float
    passed: bool


@dataclass
class JumpDensityReport:
    """mu(B_r x R) / r along a radius ladder around a point."""

    point: Tuple[float, float]
    radii: np.ndarray
    density: np.ndarray

    @property
    def limit(self):
        return float(self.density[0]) if self.density.size else 0.0


@dataclass
class TraceReport:
    """
    One-sided trace candidates along a curve and their error ladders.

    errors[k] is the sup over offsets y < offsets_max[k] of the time
    integral of |u(t, h + y) - u_side(t)|; uniform_errors[k] exchanges the
    sup and the integral.
    """

    times: np.ndarray
    side: TraceSide
    rho_plus: np.ndarray
    m_plus: np.ndarray
    rho_minus: np.ndarray
    m_minus: np.ndarray
    offsets_max: np.ndarray
    errors: np.ndarray
    uniform_errors: np.ndarray
    band: Tuple[float, float]
    tolerance: float
    verified: bool
    smooth_jump: Optional[np.ndarray] = None

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    def jump(self):
        """Componentwise u+ - u-, shape (2, n_times)."""
        return np.vstack([self.rho_plus - self.rho_minus, self.m_plus - self.m_minus])

    def jump_allowance(self):
        """Jump a smooth profile shows across the band gap; zeros when unknown."""
        if self.smooth_jump is None:
            return np.zeros_like(self.times, dtype=float)
        return np.asarray(self.smooth_jump, dtype=float)


@dataclass
class PairingEstimate:
    """Jumps recovered from the mollified weak-form pairing at one width."""

    eps: float
    state_jump: np.ndarray
    flux_jump: np.ndarray
    rh_residual: float
    relative_gap: Optional[float]


@dataclass
class DichotomyReport:
    """Per-time CONTINUOUS / SHOCK classification along a curve."""

    times: np.ndarray
    labels: List[DichotomyLabel]
    jump_size: np.ndarray
    rh_residual: np.ndarray
    entropy_residual: np.ndarray
    pairings: List[PairingEstimate]
    tolerance: float
    passed: bool
    pairing_gap: Optional[float] = None

    @property
    def shock_fraction(self):
        if not self.labels:
            return 0.0
        return sum(label is DichotomyLabel.SHOCK for label in self.labels) / len(self.labels)

    def max_shock_rh_residual(self):
        mask = np.array([label is DichotomyLabel.SHOCK for label in self.labels])
        return float(np.max(self.rh_residual[mask])) if mask.any() else 0.0


@dataclass
class RescaledPatch:
    """Blow-up of a record around a point of a curve at scale eta."""

    eta: float
    frame: BlowupFrame
    t0: float
    x0: float
    slope: float
    tau: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    m: np.ndarray
    distance_minus: float
    distance_plus: float

    @property
    def distance(self):
        return self.distance_minus + self.distance_plus


@dataclass
class DeGiorgiReport:
    """Nested-ball truncation sequence around a reference state."""

    center: Tuple[float, float]
    scale: float
    direction: DeGiorgiDirection
    reference: Tuple[float, float]
    theta0: float
    alpha: float
    eps: float
    eta: float
    radii: np.ndarray
    levels: np.ndarray
    masses: np.ndarray
    sup_bound: float
    implied_sup: Optional[float]
    truncation_consistent: bool
    eps_target: float
    converged: bool
    passed: bool


@dataclass
class EnvelopeLadder:
    """Envelope values at each radius of the ladder around one point."""

    radii: np.ndarray
    rho_mean: np.ndarray
    rho_sup: np.ndarray
    lambda1_mean: np.ndarray
    lambda1_inf: np.ndarray
    lambda2_mean: np.ndarray
    lambda2_sup: np.ndarray
    m_mean: np.ndarray
    m_sup: np.ndarray
    m_inf: np.ndarray
    defect: np.ndarray


@dataclass
class SemicontinuityPoint:
    """Semicontinuity verdict at one sampled point."""

    point: Tuple[float, float]
    vmo: bool
    vacuum: bool
    ordering_ok: bool
    rho_gap: float
    lambda1_gap: float
    lambda2_gap: float
    momentum_regime: str
    momentum_gap: Optional[float]
    tolerance: float
    passed: bool
    ladder: EnvelopeLadder
    jump_density: Optional[float] = None


@dataclass
class SemicontinuityReport:
    points: List[SemicontinuityPoint] = field(default_factory=list)

    @property
    def passed(self):
        return all(point.passed for point in self.points)

    @property
    def vmo_fraction(self):
        if not self.points:
            return 0.0
        return sum(point.vmo for point in self.points) / len(self.points)
