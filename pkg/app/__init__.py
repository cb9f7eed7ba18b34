"""
adslens command-line application

Configuration parsing, the ordered verification pipelines and report
emission for the ``adslens`` entry point.

Usage:
    adslens verify --config run.toml
"""

from .config import DEFAULT_PARAMS, DEFAULT_TOLERANCES, PIPELINES, RunConfig, parse_config

__all__ = [
    'DEFAULT_PARAMS',
    'DEFAULT_TOLERANCES',
    'PIPELINES',
    'RunConfig',
    'parse_config',
]
