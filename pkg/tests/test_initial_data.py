#!/usr/bin/env python3
"""
Tests for the initial data families, decay validation, constraint densities
and rigidity residuals
"""

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from src.clifford_spinor import KillingVariant
from src.geometry_engine import Point
from src.initial_data import (
    FAMILY_REGISTRY,
    build_family,
    constraint_densities,
    energy_identity_residual,
    family_ads,
    family_kottler,
    family_perturbation,
    kottler_areal_radius,
    kottler_geodesic_radius,
    kottler_horizon,
    kottler_profile,
    list_families,
    rigidity_residuals,
    validate_decay,
)
from src.utils import ConfigError, DataError, DomainError

from conftest import create_sample_points

RADII = (3.0, 4.0, 5.0, 6.0)


def test_ads_family_is_exact_hyperbolic_space():
    sample = family_ads(0.5).evaluate(np.array([1.0, 2.0]), np.array([0.5, 1.5]), 0.0)
    for tensor in (sample.a, sample.da, sample.dda, sample.h, sample.dh):
        assert np.all(tensor == 0.0)
    with pytest.raises(DomainError):
        family_ads(0.0)


@pytest.mark.parametrize("mass, kappa", [(0.5, 1.0), (1.0, 1.0), (2.0, 0.5)])
def test_kottler_horizon_and_radius_inverse(mass, kappa):
    r_h = kottler_horizon(mass, kappa)
    assert kappa**2 * r_h**3 + r_h - 2.0 * mass == pytest.approx(0.0, abs=1e-12)
    for s in (1.5 / kappa, 3.0 / kappa, 6.0 / kappa):
        rhat = kottler_areal_radius(s, mass, kappa)
        assert rhat > r_h
        assert kottler_geodesic_radius(rhat, mass, kappa) == pytest.approx(s, rel=1e-12)


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_kottler_profile_leading_decay(kappa):
    s = 6.0 / kappa
    A, dA, _ = kottler_profile(s, 1.0, kappa)
    lead = 16.0 * kappa / 3.0 * np.exp(-3.0 * kappa * s)
    assert A == pytest.approx(lead, rel=1e-3)
    assert dA == pytest.approx(-3.0 * kappa * lead, rel=1e-3)


def test_kottler_profile_derivatives_match_differences():
    s, h = 2.0, 1e-3
    A, dA, ddA = kottler_profile(s, 1.0, 1.0)
    A_plus = kottler_profile(s + h, 1.0, 1.0)[0]
    A_minus = kottler_profile(s - h, 1.0, 1.0)[0]
    assert dA == pytest.approx((A_plus - A_minus) / (2.0 * h), rel=1e-5)
    assert ddA == pytest.approx((A_plus - 2.0 * A + A_minus) / h**2, rel=1e-4)


def test_kottler_reduces_to_ads_at_zero_mass():
    sample = family_kottler(0.0).evaluate(np.array([0.5, 3.0]), 1.0, 0.0)
    assert np.all(sample.a == 0.0)


def test_kottler_rejects_points_inside_horizon(kottler):
    with pytest.raises(DomainError):
        kottler.evaluate(np.array([0.05]), np.array([1.0]), np.array([0.0]))
    with pytest.raises(DomainError):
        family_kottler(-1.0)


def test_perturbation_analytic_jet_matches_finite_differences(perturbed, rng):
    r, theta, psi = create_sample_points(rng, 5, r_min=1.0, r_max=3.0)
    analytic = perturbed.evaluate(r, theta, psi)
    fd = perturbed.evaluate(r, theta, psi, fd_step=1e-4)
    assert_allclose(fd.a, analytic.a)
    assert_allclose(fd.da, analytic.da, atol=1e-8)
    assert_allclose(fd.dda, analytic.dda, atol=1e-6)
    assert_allclose(fd.dh, analytic.dh, atol=1e-8)


@pytest.mark.parametrize("kwargs, error", [
    ({"epsilon": 1.2}, DataError),
    ({"epsilon": 0.1, "tau": 1.4}, DomainError),
    ({"epsilon": 0.1, "mode": "quadrupole"}, ConfigError),
    ({"epsilon": 0.1, "h_profile": "spiral"}, ConfigError),
    ({"epsilon": 0.1, "kappa": -1.0}, DomainError),
])
def test_perturbation_validation(kwargs, error):
    with pytest.raises(error):
        family_perturbation(**kwargs)


def test_family_registry_and_builder():
    table = list_families()
    assert isinstance(table, pd.DataFrame)
    assert set(table["family"]) == set(FAMILY_REGISTRY) == {"ads", "kottler", "perturbation"}

    data = build_family("kottler", 0.5, {"mass": 2})
    assert data.mass == 2.0 and data.kappa == 0.5
    assert build_family("perturbation", 1.0, {"mode": "dipole"}).mode == "dipole"

    with pytest.raises(DataError):
        build_family("schwarzschild", 1.0)
    with pytest.raises(ConfigError):
        build_family("kottler", 1.0, {"charge": 1.0})
    with pytest.raises(ConfigError):
        build_family("kottler", 1.0, {"mass": "heavy"})


@pytest.mark.parametrize("data", [
    family_ads(1.0),
    family_kottler(1.0, 1.0),
    family_perturbation(0.01),
    family_perturbation(0.02, mode="dipole", h_profile="isotropic", eta=0.01),
])
def test_decay_validation_passes_for_builtin_families(data):
    report = validate_decay(data, RADII, n_theta=8, n_psi=16)
    assert report.passed, report.slopes
    assert report.tau_ok
    frame = report.to_frame()
    assert list(frame.index) == list(RADII)
    assert set(frame.columns) == {"a", "nabla_a", "nabla2_a", "h", "nabla_h"}


def test_decay_validation_flags_slow_decay(slow_decay):
    report = validate_decay(slow_decay, RADII, n_theta=8, n_psi=16)
    assert not report.passed
    assert not report.bounded["a"]
    assert report.slopes["a"] == pytest.approx(0.4, abs=1e-6)


def test_decay_validation_rejects_unordered_radii(ads):
    with pytest.raises(ConfigError, match="radii not increasing"):
        validate_decay(ads, (3.0, 2.0, 4.0))


@pytest.mark.parametrize("data", [family_ads(1.0), family_kottler(1.0, 1.0), family_kottler(0.5, 0.5)])
def test_vacuum_families_have_vanishing_densities(data, rng):
    r, theta, psi = create_sample_points(rng, 10, r_min=2.0, r_max=5.0, kappa=data.kappa)
    dens = constraint_densities(data, Point(r, theta, psi))
    assert np.max(np.abs(dens.mu)) < 1e-7
    assert np.max(np.abs(dens.omega)) < 1e-7
    assert np.max(np.abs(dens.rho)) < 1e-7


def test_energy_identity_on_random_tensors(rng):
    h = rng.standard_normal((1000, 3, 3))
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    scal = rng.standard_normal(1000)
    for kappa in (0.5, 1.0, 3.0):
        assert np.max(np.abs(energy_identity_residual(scal, h, kappa))) < 1e-12 * max(1.0, kappa**2) * 100


def test_dipole_momentum_density_is_nonzero(perturbed):
    dens = constraint_densities(perturbed, Point(np.array([1.0, 1.5]), np.array([0.7, 2.0]), 0.3))
    assert np.max(np.abs(dens.omega)) > 1e-6
    assert_allclose(dens.margin, dens.mu - np.linalg.norm(dens.omega, axis=-1))


@pytest.mark.parametrize("variant", list(KillingVariant))
def test_rigidity_holds_on_ads(variant, rng):
    r, theta, psi = create_sample_points(rng, 10, r_min=1.0, r_max=5.0)
    res = rigidity_residuals(family_ads(1.0), Point(r, theta, psi), variant)
    assert res.variant is variant
    assert res.res_gauss < 1e-9
    assert res.res_codazzi < 1e-9


@pytest.mark.parametrize("variant", list(KillingVariant))
def test_rigidity_fails_on_kottler(kottler, variant):
    res = rigidity_residuals(kottler, Point(2.0, 1.0, 0.0), variant)
    assert res.res_gauss > 1e-4
    assert res.res_codazzi < 1e-12
