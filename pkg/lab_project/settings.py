"""
Settings for the kinetic_lab project.

Module-level constants read once at import. Each tunable can be overridden
from the environment with the KINETIC_LAB_ prefix, e.g.

    KINETIC_LAB_CFL=0.4 KINETIC_LAB_LOG_LEVEL=DEBUG python manage.py simulate ...
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

ENV_PREFIX = "KINETIC_LAB_"


def _env(name, default, cast=str):
    raw = os.environ.get(f"{ENV_PREFIX}{name}")
    if raw is None or raw == "":
        return default
    return cast(raw)


# Time stepping
DEFAULT_CFL = _env("CFL", 0.5, float)
DEFAULT_BOUNDARY = _env("BOUNDARY", "periodic")
DEFAULT_STRIDE = _env("STRIDE", 1, int)

# Below this density a cell is treated as vacuum
RHO_FLOOR = _env("RHO_FLOOR", 1e-12, float)

# L = VELOCITY_MARGIN * max |lambda_i| over the initial field
VELOCITY_MARGIN = 1.05

# Star-state root finder
RIEMANN_TOLERANCE = 1e-12
RIEMANN_MAX_ITERATIONS = 200

# Dissipation measure estimation
MU_NODES = _env("MU_NODES", 64, int)
MU_TIME_BINS = 16
MU_SPACE_BINS = 64

# Diagnostics ladders, in units of the cell width
TRACE_BAND_CELLS = 2
TRACE_RESOLUTION_CELLS = 6
# Below this cell width the trace floor grows like sqrt(dx * TRACE_FLOOR_LENGTH)
TRACE_FLOOR_LENGTH = 4e-3
TRACE_LADDER_CELLS = 32
PAIRING_LADDER_CELLS = (64, 32, 16)
EPS_LADDER_CELLS = (16, 8, 4)
ENVELOPE_LADDER_DEPTH = 4

# Default checker tolerances
TRACE_TOLERANCE = 5e-2
PAIRING_TOLERANCE = 0.1
CHARACTERISTIC_TOLERANCE = 5e-2
DEGIORGI_THETA = 1.0 / 7.0
DEGIORGI_LEVELS = 12
DEGIORGI_MIN_DENSITY = 0.1

# Parallelism (joblib workers)
THREADS = _env("THREADS", 1, int)

OUTPUT_DIR = _env("OUTPUT_DIR", str(BASE_DIR / "runs"))

LOG_LEVEL = _env("LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "kinetic_lab": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
}
