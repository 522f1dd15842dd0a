"""
Command-line package: run configuration, JSON reports, oracle suites and subcommands
"""

from .commands import build_parser, main
from .run_config import RunConfig, load_run_config, parse_run_config
from .verify import SUITES, CheckResult, run_verification

__all__ = [
    'build_parser',
    'main',
    'RunConfig',
    'load_run_config',
    'parse_run_config',
    'SUITES',
    'CheckResult',
    'run_verification',
]
