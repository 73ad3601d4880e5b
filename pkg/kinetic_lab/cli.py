"""
Command-line interface.

    python manage.py simulate --config run.toml --out runs/tube
    python manage.py rh --config run.toml --threads 4
    python manage.py sweep --config refine.toml

Exit codes: 0 ok, 1 a check failed, 2 usage or configuration error,
3 internal error.
"""

import argparse
import json
import logging
import sys

from kinetic_lab.exceptions import ConfigurationError
from kinetic_lab.pipeline import run_pipeline, sweep, write_riemann_profile
from kinetic_lab.serializers.config_serializer import config_to_dict, parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

COMMANDS = {
    "simulate": "run the preset and every configured checker",
    "riemann": "write the exact Riemann solution of the preset at t_end",
    "trace": "extract one-sided traces along a line",
    "rh": "classify a line as continuous or admissible shock",
    "degiorgi": "run the De Giorgi truncation monitor",
    "semicont": "check semicontinuity of the invariants at sampled points",
    "characteristic": "integrate mollified generalized characteristics",
    "sweep": "run the config along its sweep axis and fit a slope",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kinetic-lab",
        description="Numerical laboratory for 1-D isentropic gas dynamics with gamma = 3",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        command = subparsers.add_parser(name, help=help_text, description=help_text)
        command.add_argument("--config", required=True, help="TOML run configuration")
        command.add_argument("--out", default=None, help="artifact directory")
        command.add_argument("--dry-run", action="store_true", help="validate and echo the config only")
        command.add_argument("--threads", type=int, default=None, help="joblib workers")
    return parser


def dispatch(args):
    config = parse_config(args.config)
    if args.threads is not None and args.threads < 1:
        raise ConfigurationError(f"--threads must be at least 1, got {args.threads}")
    if args.dry_run:
        print(json.dumps(config_to_dict(config), indent=2, sort_keys=True))
        return EXIT_OK

    if args.command == "sweep":
        result = sweep(config, out=args.out, threads=args.threads)
        print(json.dumps({"slope": result["slope"], "failures": result["failures"]}, sort_keys=True))
        return EXIT_OK if result["failures"] == 0 else EXIT_CHECK_FAILED

    if args.command == "riemann":
        audit, out = write_riemann_profile(config, out=args.out)
        print(f"Exact solution written to {out}")
        return EXIT_OK if audit["passed"] else EXIT_CHECK_FAILED

    only = None if args.command == "simulate" else args.command
    status, out = run_pipeline(config, out=args.out, threads=args.threads, only=only)
    print(f"Artifacts written to {out} ({'passed' if status == EXIT_OK else 'check failures'})")
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        return dispatch(args)
    except ConfigurationError as exc:
        logger.error(f"Configuration error: {exc}")
        sys.stderr.write(f"Error: {exc}\n")
        return EXIT_USAGE
    except Exception as exc:
        logger.exception(f"{args.command} failed: {exc}")
        sys.stderr.write(f"Internal error: {exc}\n")
        return EXIT_INTERNAL
