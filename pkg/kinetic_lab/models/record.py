from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from lab_project import settings
from kinetic_lab.exceptions import ConfigurationError, InvariantViolation
from kinetic_lab.models.grid import Grid1D
from kinetic_lab.models.state import ConservedField, interval_from_conserved


class SchemeKind(str, Enum):
    KINETIC = "kinetic"
    GODUNOV = "godunov"


@dataclass(frozen=True)
class SchemeConfig:
    """Time-stepping parameters; each step uses dt = cfl * dx / L."""

    t_end: float
    cfl: float = 0.5
    scheme: SchemeKind = SchemeKind.KINETIC
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigurationError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.scheme is SchemeKind.GODUNOV and self.cfl > 0.5:
            raise ConfigurationError(
                f"the Godunov scheme needs cfl <= 0.5, got {self.cfl}"
            )
        if not np.isfinite(self.t_end) or self.t_end < 0.0:
            raise ConfigurationError(f"t_end must be finite and >= 0, got {self.t_end}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigurationError(f"stride must be a positive integer, got {self.stride}")

    def to_dict(self):
        return {
            "t_end": self.t_end,
            "cfl": self.cfl,
            "scheme": self.scheme.value,
            "stride": int(self.stride),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            t_end=float(data["t_end"]),
            cfl=float(data.get("cfl", 0.5)),
            scheme=SchemeKind(data.get("scheme", SchemeKind.KINETIC.value)),
            stride=int(data.get("stride", 1)),
        )


@dataclass
class RunAudit:
    """Per-step conservation and invariant-region audits of a run."""

    mass_drift: list = field(default_factory=list)
    momentum_drift: list = field(default_factory=list)
    lambda1_drop: list = field(default_factory=list)
    lambda2_rise: list = field(default_factory=list)
    min_dissipation: list = field(default_factory=list)
    conservative: bool = True

    def record_step(self, mass, momentum, lambda1_drop, lambda2_rise, min_dissipation):
        self.mass_drift.append(float(mass))
        self.momentum_drift.append(float(momentum))
        self.lambda1_drop.append(float(lambda1_drop))
        self.lambda2_rise.append(float(lambda2_rise))
        self.min_dissipation.append(float(min_dissipation))

    @property
    def n_steps(self):
        return len(self.mass_drift)

    def summary(self, scheme=SchemeKind.KINETIC):
        def worst(values, default=0.0):
            return float(max(values)) if values else default

        summary = {
            "steps": self.n_steps,
            "max_mass_drift_per_step": worst(self.mass_drift),
            "max_momentum_drift_per_step": worst(self.momentum_drift),
            "max_lambda1_drop": worst(self.lambda1_drop),
            "max_lambda2_rise": worst(self.lambda2_rise),
            "min_dissipation": float(min(self.min_dissipation)) if self.min_dissipation else 0.0,
            "conservative": self.conservative,
        }
        checks = [summary["min_dissipation"] >= -1e-12]
        if self.conservative:
            checks.append(summary["max_mass_drift_per_step"] <= 1e-12)
            checks.append(summary["max_momentum_drift_per_step"] <= 1e-12)
        if SchemeKind(scheme) is SchemeKind.KINETIC:
            checks.append(summary["max_lambda1_drop"] <= 1e-10)
            checks.append(summary["max_lambda2_rise"] <= 1e-10)
        summary["passed"] = bool(all(checks))
        return summary


@dataclass(frozen=True, eq=False)
class SpaceTimeRecord:
    """
    History of a run: snapshots of (rho, m) on a fixed grid.

    rho and m have shape (n_snapshots, n_cells). dissipation holds the total
    collapse energy drop of every step (empty for the Godunov scheme).
    Values between snapshots are piecewise constant in x and linear in t.
    """

    grid: Grid1D
    times: np.ndarray
    rho: np.ndarray
    m: np.ndarray
    config: SchemeConfig
    L: float
    dissipation: np.ndarray = None
    audit: Optional[RunAudit] = None
    rho_floor: float = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rho = np.atleast_2d(np.asarray(self.rho, dtype=float))
        m = np.atleast_2d(np.asarray(self.m, dtype=float))
        if times.ndim != 1 or times.size == 0:
            raise InvariantViolation("a record needs at least one snapshot time")
        if np.any(np.diff(times) <= 0.0):
            raise InvariantViolation("snapshot times must be strictly increasing")
        if rho.shape != (times.size, self.grid.n_cells) or m.shape != rho.shape:
            raise InvariantViolation(
                f"snapshot arrays of shape {rho.shape} do not match "
                f"{times.size} times x {self.grid.n_cells} cells"
            )
        if np.any(rho < 0.0):
            raise InvariantViolation("record contains negative densities")
        dissipation = np.zeros(0) if self.dissipation is None else np.asarray(self.dissipation, dtype=float)
        floor = settings.RHO_FLOOR if self.rho_floor is None else float(self.rho_floor)
        for array in (times, rho, m, dissipation):
            array.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "dissipation", dissipation)
        object.__setattr__(self, "rho_floor", floor)
        object.__setattr__(self, "L", float(self.L))

    @property
    def n_snapshots(self):
        return self.times.size

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_final(self):
        return float(self.times[-1])

    @property
    def scheme(self):
        return self.config.scheme

    def snapshot(self, index):
        return ConservedField(self.rho[index], self.m[index])

    @property
    def final(self):
        return self.snapshot(-1)

    def invariants(self):
        """(lambda1, lambda2, vacuum) over the whole record, each (n_snapshots, n_cells)."""
        lambda1, lambda2, vacuum = interval_from_conserved(self.rho, self.m, self.rho_floor)
        return lambda1, lambda2, vacuum

    def sample(self, t, x):
        """
        (rho, m) at arbitrary (t, x): cell value in x, linear in t.

        t and x broadcast against each other. Times outside the record are
        clamped to its ends.
        """
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        t, x = np.broadcast_arrays(t, x)
        cells = self.grid.cell_index(x)
        if self.n_snapshots == 1:
            return self.rho[0][cells], self.m[0][cells]
        lower = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.n_snapshots - 2)
        span = self.times[lower + 1] - self.times[lower]
        weight = np.clip((t - self.times[lower]) / span, 0.0, 1.0)
        rho = (1.0 - weight) * self.rho[lower, cells] + weight * self.rho[lower + 1, cells]
        m = (1.0 - weight) * self.m[lower, cells] + weight * self.m[lower + 1, cells]
        return rho, m

    def sample_invariants(self, t, x):
        """(lambda1, lambda2, vacuum) of sampled states."""
        rho, m = self.sample(t, x)
        return interval_from_conserved(rho, m, self.rho_floor)

    def time_window(self, t_lo, t_hi):
        indices = np.nonzero((self.times >= t_lo) & (self.times <= t_hi))[0]
        return indices

    def metadata(self):
        return {
            "grid": self.grid.to_dict(),
            "config": self.config.to_dict(),
            "L": self.L,
            "rho_floor": self.rho_floor,
            "n_snapshots": int(self.n_snapshots),
            "t_final": self.t_final,
        }
