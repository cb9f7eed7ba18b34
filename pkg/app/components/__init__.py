"""Pipelines and report emission used by the CLI."""
