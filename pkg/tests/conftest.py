"""
Shared fixtures and sample builders for the adslens test suite.
"""

import numpy as np
import pytest

from src.initial_data import family_ads, family_kottler, family_perturbation


def create_sample_points(rng, n=20, r_min=0.5, r_max=4.0, kappa=1.0):
    """Random chart points away from the poles."""
    r = rng.uniform(r_min / kappa, r_max / kappa, n)
    theta = rng.uniform(0.3, np.pi - 0.3, n)
    psi = rng.uniform(0.0, 2.0 * np.pi, n)
    return r, theta, psi


def create_config_text(family="ads", kappa=1.0, parameters=None, pipelines=None, extra=""):
    """Minimal TOML run description."""
    lines = [f'family = "{family}"', f"kappa = {kappa!r}"]
    if parameters:
        lines.append("")
        lines.append("[parameters]")
        for key, value in parameters.items():
            lines.append(f'{key} = "{value}"' if isinstance(value, str) else f"{key} = {value!r}")
    if pipelines is not None:
        lines.append("")
        lines.append("[pipelines]")
        lines.append("selected = [" + ", ".join(f'"{p}"' for p in pipelines) + "]")
    if extra:
        lines.append("")
        lines.append(extra)
    return "\n".join(lines) + "\n"


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def ads():
    return family_ads(1.0)


@pytest.fixture
def kottler():
    return family_kottler(1.0, 1.0)


@pytest.fixture
def perturbed():
    """Off-axis dipole in a with a dipole second fundamental form."""
    return family_perturbation(0.05, tau=3.0, mode="dipole_x", h_profile="dipole", eta=0.03)


@pytest.fixture
def slow_decay():
    """Declares tau = 2 but decays at rate 1.6."""
    return family_perturbation(0.01, tau=2.0, rate=1.6)
