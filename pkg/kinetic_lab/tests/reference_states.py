"""Hand-checked states shared by the tests."""

import numpy as np

from kinetic_lab.models.state import ConservedField, ConservedState
from kinetic_lab.services.riemann_service import exact_field, solve_riemann

# Admissible 1-shock: (1, 0) on the left, (2, -sqrt(7/6)) on the right
SHOCK_SPEED = -np.sqrt(7.0 / 6.0)
SHOCK_LEFT = ConservedState(1.0, 0.0)
SHOCK_RIGHT = ConservedState(2.0, SHOCK_SPEED)

# Pure 1-rarefaction: lambda1 opens from -1 to 0, lambda2 = 1 throughout,
# so inside the fan lambda1 = x / t, rho = 1 - x / t and m = (1 - (x / t)**2) / 2
FAN_LEFT = ConservedState(2.0, 0.0)
FAN_RIGHT = ConservedState(1.0, 0.5)
# the developed-fan fixtures start from the fan this long after it opened
FAN_AGE = 0.2


def developed_fan(grid, age, x_split=0.0):
    """The centred fan as it stands `age` after opening, as initial data."""
    rho, m = exact_field(solve_riemann(FAN_LEFT, FAN_RIGHT), grid.centers, age, x_split)
    return ConservedField(rho, m)
