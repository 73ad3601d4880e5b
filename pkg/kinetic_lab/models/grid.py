from dataclasses import dataclass
from enum import Enum

import numpy as np

from kinetic_lab.exceptions import ConfigurationError


class Boundary(str, Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"


@dataclass(frozen=True)
class Grid1D:
    """
    Uniform cell-centred grid on [x_min, x_max].

    Periodic grids wrap ghost cells around; outflow grids copy the
    boundary cell.
    """

    x_min: float
    x_max: float
    n_cells: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigurationError(f"n_cells must be an integer >= 2, got {self.n_cells}")
        if not np.isfinite(self.x_min) or not np.isfinite(self.x_max):
            raise ConfigurationError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ConfigurationError(
                f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]"
            )
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def dx(self):
        return self.length / self.n_cells

    @property
    def centers(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def edges(self):
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    @property
    def periodic(self):
        return self.boundary is Boundary.PERIODIC

    def cell_index(self, x):
        """Index of the cell containing x (wrapped or clipped by boundary)."""
        index = np.floor((np.asarray(x, dtype=float) - self.x_min) / self.dx).astype(int)
        if self.periodic:
            return np.mod(index, self.n_cells)
        return np.clip(index, 0, self.n_cells - 1)

    def pad(self, values, width=1):
        """Append ghost cells on both sides."""
        mode = "wrap" if self.periodic else "edge"
        return np.pad(np.asarray(values, dtype=float), width, mode=mode)

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.x_min + margin) & (x <= self.x_max - margin)))

    def refined(self, factor=2):
        return Grid1D(self.x_min, self.x_max, self.n_cells * factor, self.boundary)

    def to_dict(self):
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "n_cells": self.n_cells,
            "boundary": self.boundary.value,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            x_min=float(data["x_min"]),
            x_max=float(data["x_max"]),
            n_cells=int(data["n_cells"]),
            boundary=Boundary(data.get("boundary", Boundary.PERIODIC.value)),
        )
