"""
Tests for run-file parsing and validation.
"""

from textwrap import dedent
from unittest import TestCase

import pytest

from lab_project import settings
from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.models.grid import Boundary
from kinetic_lab.models.record import SchemeKind
from kinetic_lab.serializers.config_serializer import (
    config_to_dict,
    parse_config,
    validate_config,
    with_override,
)


def minimal(**overrides):
    data = {
        "scheme": {"t_end": 0.1},
        "preset": {"id": "riemann", "left": [1.0, 0.0], "right": [2.0, -1.0]},
    }
    data.update(overrides)
    return data


class ValidateConfigTestCase(TestCase):

    def test_defaults_are_filled(self):
        config = validate_config(minimal())
        self.assertEqual(config.name, "run")
        self.assertEqual(config.grid.n_cells, 200)
        self.assertEqual(config.grid.boundary, settings.DEFAULT_BOUNDARY)
        self.assertEqual(config.scheme.cfl, settings.DEFAULT_CFL)
        self.assertEqual(config.scheme.stride, settings.DEFAULT_STRIDE)
        self.assertEqual(config.checkers, [])
        self.assertIsNone(config.sweep)

    def test_build_grid_and_scheme(self):
        config = validate_config(minimal(grid={"x_min": -1.0, "x_max": 1.0, "n_cells": 40, "boundary": "outflow"}))
        grid = config.grid.build()
        self.assertEqual(grid.n_cells, 40)
        self.assertIs(grid.boundary, Boundary.OUTFLOW)
        self.assertIs(config.scheme.build().scheme, SchemeKind.KINETIC)

    def test_cfl_above_one_is_rejected(self):
        with self.assertRaises(ConfigurationError) as ctx:
            validate_config(minimal(scheme={"t_end": 0.1, "cfl": 1.5}))
        self.assertTrue(any("scheme.cfl" in error for error in ctx.exception.errors))

    def test_godunov_needs_half_cfl(self):
        with self.assertRaises(ConfigurationError):
            validate_config(minimal(scheme={"t_end": 0.1, "cfl": 0.8, "scheme": "godunov"}))
        config = validate_config(minimal(scheme={"t_end": 0.1, "cfl": 0.5, "scheme": "godunov"}))
        self.assertEqual(config.scheme.scheme, "godunov")

    def test_negative_density_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            validate_config(minimal(preset={"id": "riemann", "left": [-1.0, 0.0], "right": [1.0, 0.0]}))

    def test_state_needs_two_components(self):
        with self.assertRaises(ConfigurationError):
            validate_config(minimal(preset={"id": "riemann", "left": [1.0], "right": [1.0, 0.0]}))

    def test_unknown_preset(self):
        with self.assertRaises(ConfigurationError):
            validate_config(minimal(preset={"id": "blast_wave"}))

    def test_empty_sweep_values(self):
        with self.assertRaises(ConfigurationError):
            validate_config(minimal(sweep={"parameter": "grid.n_cells", "values": []}))

    def test_every_problem_is_reported(self):
        data = minimal(scheme={"t_end": -1.0, "cfl": 2.0}, grid={"n_cells": 1})
        with self.assertRaises(ConfigurationError) as ctx:
            validate_config(data)
        self.assertEqual(len(ctx.exception.errors), 3)


def test_parse_config_reads_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        dedent(
            """
            name = "shock"

            [grid]
            x_min = -1.0
            x_max = 1.0
            n_cells = 64
            boundary = "outflow"

            [scheme]
            t_end = 0.2

            [preset]
            id = "riemann"
            left = [1.0, 0.0]
            right = [2.0, -1.0801234497346435]
            x_split = 0.0

            [[checkers]]
            kind = "trace"
            params = { x0 = 0.0, speed = -1.0801234497346435 }
            """
        ),
        encoding="utf-8",
    )
    config = parse_config(path)
    assert config.name == "shock"
    assert config.grid.n_cells == 64
    assert config.checkers[0].kind == "trace"
    assert config.checkers[0].params["speed"] == pytest.approx(-1.0801234497346435)


def test_unknown_key_gets_line_and_suggestion(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        '[scheme]\nt_end = 0.1\ncflx = 0.4\n\n[preset]\nid = "smooth_sine"\n',
        encoding="utf-8",
    )
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config(path)
    (error,) = excinfo.value.errors
    assert error.startswith("line 3: scheme.cflx")
    assert "did you mean 'cfl'?" in error


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        parse_config(tmp_path / "absent.toml")


def test_invalid_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[scheme\nt_end = ", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="not valid TOML"):
        parse_config(path)


def test_config_echo_is_plain_data():
    echo = config_to_dict(validate_config(minimal()))
    assert echo["scheme"]["t_end"] == 0.1
    assert echo["preset"]["left"] == [1.0, 0.0]
    assert echo["batch"] is None


def test_with_override_coerces_integral_floats():
    config = validate_config(minimal(sweep={"parameter": "grid.n_cells", "values": [32.0, 64.0]}))
    changed = with_override(config, "grid.n_cells", 64.0)
    assert changed.grid.n_cells == 64
    assert isinstance(changed.grid.n_cells, int)
    assert changed.sweep is None
    assert config.grid.n_cells == 200

    amplitude = with_override(validate_config(minimal(preset={"id": "smooth_sine"})), "preset.amplitude", 0.3)
    assert amplitude.preset.amplitude == pytest.approx(0.3)


def test_with_override_rejects_unknown_parameters():
    config = validate_config(minimal())
    with pytest.raises(ConfigurationError, match="did you mean 'n_cells'"):
        with_override(config, "grid.n_cell", 10)
    with pytest.raises(ConfigurationError):
        with_override(config, "mesh.n_cells", 10)


def test_with_override_revalidates():
    config = validate_config(minimal())
    with pytest.raises(ConfigurationError):
        with_override(config, "scheme.cfl", 1.5)
