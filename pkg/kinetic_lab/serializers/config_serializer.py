"""
Run configuration schema and TOML parsing.

A run file looks like

    [grid]
    n_cells = 1000
    boundary = "outflow"

    [scheme]
    t_end = 0.2

    [preset]
    id = "riemann"
    left = [1.0, 0.0]
    right = [2.0, -1.0801234497346435]

    [[checkers]]
    kind = "trace"
    params = { x0 = 0.0, speed = -1.0801234497346435 }
"""

import difflib
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from lab_project import settings
from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.models.grid import Boundary, Grid1D
from kinetic_lab.models.record import SchemeConfig


class Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(Spec):
    x_min: float = 0.0
    x_max: float = 1.0
    n_cells: int = Field(200, ge=2)
    boundary: Literal["periodic", "outflow"] = Field(default_factory=lambda: settings.DEFAULT_BOUNDARY)

    @model_validator(mode="after")
    def check_extent(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        return self

    def build(self):
        return Grid1D(self.x_min, self.x_max, self.n_cells, Boundary(self.boundary))


class SchemeSpec(Spec):
    t_end: float = Field(ge=0.0)
    cfl: float = Field(default_factory=lambda: settings.DEFAULT_CFL)
    scheme: Literal["kinetic", "godunov"] = "kinetic"
    stride: int = Field(default_factory=lambda: settings.DEFAULT_STRIDE, ge=1)

    @field_validator("cfl")
    @classmethod
    def check_cfl(cls, value):
        if not 0.0 < value <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {value}")
        return value

    @model_validator(mode="after")
    def check_godunov(self):
        if self.scheme == "godunov" and self.cfl > 0.5:
            raise ValueError(f"the godunov scheme needs cfl <= 0.5, got {self.cfl}")
        return self

    def build(self):
        return SchemeConfig(t_end=self.t_end, cfl=self.cfl, scheme=self.scheme, stride=self.stride)


class PresetSpec(Spec):
    id: Literal["riemann", "smooth_sine", "shock_pair", "random_linfty"]
    # riemann / shock_pair: states as [rho, m]
    left: Optional[List[float]] = None
    right: Optional[List[float]] = None
    middle: Optional[List[float]] = None
    x_split: Optional[float] = None
    # smooth_sine
    amplitude: float = 0.1
    rho0: float = 1.0
    velocity0: float = 0.0
    wavenumber: int = 1
    # random_linfty
    seed: Optional[int] = None
    rho_min: float = 0.5
    rho_max: float = 2.0
    velocity_max: float = 1.0
    blocks: int = Field(16, ge=1)

    @field_validator("left", "right", "middle")
    @classmethod
    def check_state(cls, value):
        if value is not None and len(value) != 2:
            raise ValueError("a state is a pair [rho, m]")
        if value is not None and value[0] < 0.0:
            raise ValueError(f"density must be nonnegative, got {value[0]}")
        return value


class CheckerSpec(Spec):
    kind: Literal[
        "riemann_check",
        "exact_error",
        "entropy_audit",
        "mu",
        "tv",
        "trace",
        "rh",
        "blowup",
        "degiorgi",
        "semicont",
        "characteristic",
    ]
    params: Dict[str, Any] = Field(default_factory=dict)


class BatchSpec(Spec):
    seeds: List[int] = Field(min_length=1)


class SweepSpec(Spec):
    # dotted path into the run config, e.g. "grid.n_cells" or "preset.amplitude"
    parameter: str
    values: List[float] = Field(min_length=1)
    metric: Literal["total_dissipation", "mu_total", "l1_exact", "degiorgi"] = "total_dissipation"

    @field_validator("values")
    @classmethod
    def check_finite(cls, values):
        if any(value != value or value in (float("inf"), float("-inf")) for value in values):
            raise ValueError("sweep values must be finite")
        return values


class RunConfig(Spec):
    name: str = "run"
    grid: GridSpec = Field(default_factory=GridSpec)
    scheme: SchemeSpec
    preset: PresetSpec
    checkers: List[CheckerSpec] = Field(default_factory=list)
    output: Optional[str] = None
    seed: int = 0
    batch: Optional[BatchSpec] = None
    sweep: Optional[SweepSpec] = None


_SPEC_MODELS = (RunConfig, GridSpec, SchemeSpec, PresetSpec, CheckerSpec, BatchSpec, SweepSpec)
_KNOWN_KEYS = sorted({name for model in _SPEC_MODELS for name in model.model_fields})


def _line_of(source, key):
    if not source or not isinstance(key, str):
        return None
    pattern = re.compile(rf"^\s*(\[+\s*)?{re.escape(key)}\b", re.MULTILINE)
    match = pattern.search(source)
    if match is None:
        return None
    return source.count("\n", 0, match.start()) + 1


def _describe(error, source):
    location = [str(part) for part in error["loc"]]
    key = location[-1] if location else ""
    entry = {"key": ".".join(location), "message": error["msg"], "type": error["type"]}
    line = _line_of(source, key)
    if line is not None:
        entry["line"] = line
    if error["type"] == "extra_forbidden":
        matches = difflib.get_close_matches(key, _KNOWN_KEYS, n=1)
        if matches:
            entry["suggestion"] = matches[0]
    return entry


def _format(entry):
    text = f"{entry['key']}: {entry['message']}"
    if "line" in entry:
        text = f"line {entry['line']}: {text}"
    if "suggestion" in entry:
        text = f"{text} (did you mean '{entry['suggestion']}'?)"
    return text


def validate_config(data, source=None):
    """
    Validate a parsed mapping against RunConfig.

    Raises:
        ConfigurationError: with one entry per problem (key, message, line, suggestion)
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        entries = [_describe(error, source) for error in exc.errors()]
        raise ConfigurationError(
            f"invalid run configuration ({len(entries)} problem(s))",
            errors=[_format(entry) for entry in entries],
        ) from exc


def parse_config(path):
    """
    Read and validate a TOML run file.

    Raises:
        ConfigurationError: if the file is missing, not TOML, or fails validation
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    source = path.read_text(encoding="utf-8")
    try:
        data = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid TOML", errors=[str(exc)]) from exc
    return validate_config(data, source)


def config_to_dict(config):
    """JSON-ready echo of a validated config, defaults filled."""
    return config.model_dump(mode="json")


def with_override(config, parameter, value):
    """
    Copy of a config with one dotted parameter replaced and revalidated.

    Integer fields accept integral floats (sweep axes are floats).
    """
    data = config_to_dict(config)
    target = data
    parts = parameter.split(".")
    for part in parts[:-1]:
        if not isinstance(target.get(part), dict):
            raise ConfigurationError(f"unknown sweep parameter '{parameter}'")
        target = target[part]
    if parts[-1] not in target:
        matches = difflib.get_close_matches(parts[-1], _KNOWN_KEYS, n=1)
        hint = f" (did you mean '{matches[0]}'?)" if matches else ""
        raise ConfigurationError(f"unknown sweep parameter '{parameter}'{hint}")
    if isinstance(target[parts[-1]], int) and float(value).is_integer():
        value = int(value)
    target[parts[-1]] = value
    data["sweep"] = None
    return validate_config(data)
