#!/usr/bin/env python
"""Command-line utility for kinetic_lab runs."""
import logging.config
import sys

from lab_project import settings


def main():
    """Run command-line tasks."""
    from kinetic_lab.cli import main as run_command

    logging.config.dictConfig(settings.LOGGING)
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
