from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from kinetic_lab.models.state import ConservedState


class WaveKind(str, Enum):
    SHOCK = "shock"
    RAREFACTION = "rarefaction"
    # zero-strength family in a non-trivial solution
    CONTACTLESS = "contactless"


@dataclass(frozen=True)
class Wave:
    """
    One elementary wave of a self-similar solution.

    upstream is the state on the left of the wave and downstream the state
    on its right. Shocks have speed_lo == speed_hi.
    """

    family: int
    kind: WaveKind
    speed_lo: float
    speed_hi: float
    upstream: ConservedState
    downstream: ConservedState

    @property
    def speed(self):
        return 0.5 * (self.speed_lo + self.speed_hi)

    def rh_residual(self):
        """Components of s [u] - [f(u)]."""
        s = self.speed
        jump_rho = self.downstream.rho - self.upstream.rho
        jump_m = self.downstream.m - self.upstream.m
        flux_down = np.array(self.downstream.flux())
        flux_up = np.array(self.upstream.flux())
        return np.array([s * jump_rho, s * jump_m]) - (flux_down - flux_up)

    def lax_gap(self):
        """
        Signed slack of lambda_i(downstream) <= s <= lambda_i(upstream).

        Returns min(s - lambda_i(down), lambda_i(up) - s); nonnegative for an
        admissible shock.
        """
        index = self.family - 1
        down = self.downstream.invariants()[index]
        up = self.upstream.invariants()[index]
        return min(self.speed - down, up - self.speed)

    def to_dict(self):
        return {
            "family": self.family,
            "kind": self.kind.value,
            "speed_lo": self.speed_lo,
            "speed_hi": self.speed_hi,
            "upstream": self.upstream.to_dict(),
            "downstream": self.downstream.to_dict(),
        }


@dataclass(frozen=True)
class RiemannSolution:
    """
    Self-similar entropy solution of a Riemann problem.

    star is the middle state (None when a vacuum opens). star_velocities
    holds the velocity of the star state as seen from the 1-wave and the
    2-wave; the two agree to root-finder tolerance unless there is vacuum,
    where they are the edges of the vacuum region.
    """

    left: ConservedState
    right: ConservedState
    waves: Tuple[Wave, ...]
    star: Optional[ConservedState]
    vacuum: bool = False
    vacuum_region: Optional[Tuple[float, float]] = None
    star_velocities: Tuple[float, float] = (0.0, 0.0)
    rho_floor: float = 0.0
    iterations: int = 0

    @property
    def shocks(self):
        return [wave for wave in self.waves if wave.kind is WaveKind.SHOCK]

    @property
    def rarefactions(self):
        return [wave for wave in self.waves if wave.kind is WaveKind.RAREFACTION]

    @property
    def nontrivial_waves(self):
        return [wave for wave in self.waves if wave.kind is not WaveKind.CONTACTLESS]

    @property
    def max_speed(self):
        speeds = [abs(w.speed_lo) for w in self.waves] + [abs(w.speed_hi) for w in self.waves]
        return max(speeds, default=0.0)

    def to_dict(self):
        region = None
        if self.vacuum_region is not None:
            region = [None if not np.isfinite(v) else v for v in self.vacuum_region]
        return {
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
            "waves": [wave.to_dict() for wave in self.waves],
            "star": None if self.star is None else self.star.to_dict(),
            "vacuum": self.vacuum,
            "vacuum_region": region,
            "iterations": self.iterations,
        }
