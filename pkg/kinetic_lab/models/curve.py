from dataclasses import dataclass

import numpy as np

from kinetic_lab.exceptions import GeometryError


@dataclass(frozen=True, eq=False)
class LipschitzCurve:
    """
    Curve x = h(t) sampled on a time grid.

    lip is the Lipschitz bound the samples must respect; derivative() is a
    finite-difference estimate of h'.
    """

    times: np.ndarray
    h: np.ndarray
    lip: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if times.ndim != 1 or times.shape != h.shape or times.size < 2:
            raise GeometryError("a curve needs at least two samples with matching times")
        if np.any(np.diff(times) <= 0.0):
            raise GeometryError("curve sample times must be strictly increasing")
        steps = np.abs(np.diff(h))
        allowed = self.lip * np.diff(times) + 1e-12
        if np.any(steps > allowed):
            raise GeometryError(
                f"curve violates its Lipschitz bound {self.lip} "
                f"(largest slope {np.max(steps / np.diff(times)):.6g})"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lip", float(self.lip))

    @classmethod
    def line(cls, times, x0, speed, t0=0.0):
        times = np.asarray(times, dtype=float)
        return cls(times, x0 + speed * (times - t0), abs(speed) + 1e-12)

    @classmethod
    def from_samples(cls, times, h):
        times = np.asarray(times, dtype=float)
        h = np.asarray(h, dtype=float)
        lip = float(np.max(np.abs(np.diff(h)) / np.diff(times))) if times.size > 1 else 0.0
        return cls(times, h, lip)

    def derivative(self):
        return np.gradient(self.h, self.times)

    def at(self, t):
        return np.interp(t, self.times, self.h)

    def speed_at(self, t):
        return np.interp(t, self.times, self.derivative())

    def check_inside(self, grid, margin=0.0):
        if not grid.contains(self.h, margin):
            raise GeometryError(
                f"curve with margin {margin:.3g} leaves the domain "
                f"[{grid.x_min}, {grid.x_max}]"
            )
