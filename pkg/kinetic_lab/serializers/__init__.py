"""
Serializers module for kinetic_lab.
Config parsing, record persistence and report output live here.
"""

from .config_serializer import RunConfig, parse_config, validate_config
from .snapshot_serializer import load_record, write_record
from .report_serializer import read_json, to_jsonable, write_json
