"""
Initial-data presets.

Each generator returns a ConservedField on the given grid. Randomized
presets draw from numpy's default_rng so a seed fixes the field.
"""

import logging

import numpy as np

from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.models.state import ConservedField, ConservedState, StateBounds

logger = logging.getLogger(__name__)


def _state(value, name):
    if value is None:
        raise ConfigurationError(f"preset needs a '{name}' state [rho, m]")
    if isinstance(value, ConservedState):
        return value
    return ConservedState(*value)


def riemann(grid, left, right, x_split=None):
    """Two constant states separated at x_split (domain midpoint by default)."""
    left, right = _state(left, "left"), _state(right, "right")
    x_split = 0.5 * (grid.x_min + grid.x_max) if x_split is None else x_split
    on_left = grid.centers < x_split
    return ConservedField(
        np.where(on_left, left.rho, right.rho),
        np.where(on_left, left.m, right.m),
    )


def smooth_sine(grid, amplitude=0.1, rho0=1.0, velocity0=0.0, wavenumber=1):
    """rho = rho0 (1 + amplitude sin(2 pi k x / length)) moving at a uniform velocity."""
    if not 0.0 <= amplitude < 1.0:
        raise ConfigurationError(f"sine amplitude must lie in [0, 1), got {amplitude}")
    phase = 2.0 * np.pi * wavenumber * (grid.centers - grid.x_min) / grid.length
    rho = rho0 * (1.0 + amplitude * np.sin(phase))
    return ConservedField(rho, rho * velocity0)


def shock_pair(grid, left=None, right=None, middle=None):
    """
    Colliding streams that open a 1-shock and a 2-shock.

    Without a middle state the streams meet at the midpoint; with one, the
    middle state fills the central third.
    """
    left = _state(left if left is not None else (1.0, 0.5), "left")
    right = _state(right if right is not None else (1.0, -0.5), "right")
    x = grid.centers
    if middle is None:
        return riemann(grid, left, right)
    middle = _state(middle, "middle")
    third = grid.length / 3.0
    rho = np.where(x < grid.x_min + third, left.rho, np.where(x < grid.x_max - third, middle.rho, right.rho))
    m = np.where(x < grid.x_min + third, left.m, np.where(x < grid.x_max - third, middle.m, right.m))
    return ConservedField(rho, m)


def random_linfty(grid, seed=0, rho_min=0.5, rho_max=2.0, velocity_max=1.0, blocks=16):
    """
    Piecewise-constant field with `blocks` random states.

    Densities are uniform in [rho_min, rho_max] and velocities uniform in
    [-velocity_max, velocity_max], so the field lies in
    StateBounds(Gamma=rho_max + velocity_max, M=rho_min).
    """
    if not 0.0 <= rho_min <= rho_max:
        raise ConfigurationError(f"need 0 <= rho_min <= rho_max, got {rho_min}, {rho_max}")
    rng = np.random.default_rng(seed)
    rho_blocks = rng.uniform(rho_min, rho_max, blocks)
    velocity_blocks = rng.uniform(-velocity_max, velocity_max, blocks)
    index = np.minimum((np.arange(grid.n_cells) * blocks) // grid.n_cells, blocks - 1)
    rho = rho_blocks[index]
    field = ConservedField(rho, rho * velocity_blocks[index])
    bounds = StateBounds(Gamma=rho_max + velocity_max, M=rho_min)
    if not bounds.contains(field):
        raise ConfigurationError("random field escaped its configured bounds")
    return field


def random_riemann_states(seed=0, count=20, rho_min=0.5, rho_max=2.0, velocity_max=1.0):
    """
    Pairs of non-vacuum states whose Riemann problems open no vacuum.

    Returns:
        List of (left, right) ConservedState pairs
    """
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        rho = rng.uniform(rho_min, rho_max, 2)
        velocity = rng.uniform(-velocity_max, velocity_max, 2)
        left = ConservedState.from_velocity(rho[0], velocity[0])
        right = ConservedState.from_velocity(rho[1], velocity[1])
        # lambda2(left) > lambda1(right) keeps the star density positive
        if velocity[0] + rho[0] / 2.0 > velocity[1] - rho[1] / 2.0:
            pairs.append((left, right))
    return pairs


def build_initial(preset, grid, seed=None):
    """
    Field for a PresetSpec.

    Args:
        preset: validated PresetSpec
        grid: Grid1D
        seed: overrides preset.seed for batch runs
    """
    if preset.id == "riemann":
        return riemann(grid, preset.left, preset.right, preset.x_split)
    if preset.id == "smooth_sine":
        return smooth_sine(grid, preset.amplitude, preset.rho0, preset.velocity0, preset.wavenumber)
    if preset.id == "shock_pair":
        return shock_pair(grid, preset.left, preset.right, preset.middle)
    if preset.id == "random_linfty":
        chosen = seed if seed is not None else (preset.seed if preset.seed is not None else 0)
        logger.debug(f"Drawing random_linfty field with seed {chosen}")
        return random_linfty(
            grid, chosen, preset.rho_min, preset.rho_max, preset.velocity_max, preset.blocks
        )
    raise ConfigurationError(f"unknown preset '{preset.id}'")
