"""
Shared utilities for adslens: the exception hierarchy, logging setup and
small array helpers used across the geometry and mass modules.
"""

import logging
from typing import Optional, Tuple

import numpy as np


LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


class AdsLensError(Exception):
    """Base class for every error raised by adslens."""


class DomainError(AdsLensError, ValueError):
    """A point, index or parameter lies outside the domain of an operation."""


class DataError(AdsLensError):
    """Initial data cannot be evaluated (degenerate metric, non-finite values)."""


class ConfigError(AdsLensError, ValueError):
    """A run configuration is malformed or invalid."""


class ContractViolation(AdsLensError):
    """An input breaks a documented structural contract (e.g. Hermiticity)."""


class NotConvergedError(AdsLensError):
    """An extrapolated invariant did not converge and cannot be consumed."""


def configure_logging(level: str = "WARNING") -> None:
    """
    Install a single stderr handler on the package loggers.

    Args:
        level: Logging level name (DEBUG, INFO, WARNING, ERROR)
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ConfigError(f"Log level '{level}' not supported")

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    for name in ("src", "app"):
        pkg_logger = logging.getLogger(name)
        pkg_logger.handlers = [handler]
        pkg_logger.setLevel(numeric)
        pkg_logger.propagate = False


def validate_chart_arrays(
    r: np.ndarray,
    theta: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Check radial and polar coordinates against the hyperboloidal polar chart.

    Args:
        r: Geodesic radii, must be positive
        theta: Colatitudes, must lie strictly inside (0, pi)

    Returns:
        The inputs as float arrays
    """
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("Geodesic radius must be finite and positive")
    if theta is None:
        return r, None
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)) or np.any((theta <= 0) | (theta >= np.pi)):
        raise DomainError("Colatitude must lie strictly inside (0, pi); the frame degenerates at the poles")
    return r, theta


def max_abs(values: np.ndarray) -> float:
    """Max-norm of an array, 0.0 for empty input."""
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))


def symmetrize(t: np.ndarray) -> np.ndarray:
    """Symmetric part of a stack of matrices over the last two axes."""
    return 0.5 * (t + np.swapaxes(t, -1, -2))
