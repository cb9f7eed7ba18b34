#!/usr/bin/env python3
"""
Tests for mass aspects, sphere integrals, extrapolation, the energy-momentum
invariants and the Hermitian matrix analysis
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.geometry_engine import Point
from src.initial_data import family_ads, family_kottler, family_perturbation
from src.mass_invariants import (
    Definiteness,
    EnergyMomentum,
    ExtrapolationFit,
    boundary_quadratic_form,
    corollary_margins,
    energy_momentum,
    extrapolate_limit,
    geometric_invariant,
    hermitian4,
    mass_aspect,
    positivity_report,
    q1_matrix,
    q2_matrix,
    sphere_integral,
    sphere_measure,
)
from src.spinor_connections import KillingParams
from src.utils import ConfigError, ContractViolation, DomainError, NotConvergedError

from conftest import create_sample_points

RADII = (3.0, 4.0, 5.0, 6.0)


def create_energy_momentum(E, P, fits=None):
    """EnergyMomentum with given limits and no per-radius data."""
    E = np.asarray(E, dtype=float)
    P = np.asarray(P, dtype=float)
    return EnergyMomentum(
        E=E, P=P, beta=E + P[:, 0], radii=[3.0, 4.0, 5.0],
        raw_E=np.zeros((3, 4)), raw_P=np.zeros((3, 4, 3)), raw_beta=np.zeros((3, 4)),
        fits=fits or {},
    )


def test_aspects_vanish_on_ads(rng):
    aspect = mass_aspect(family_ads(1.0), Point(*create_sample_points(rng, 10)))
    for values in (aspect.epsilon, aspect.momentum, aspect.alpha, aspect.beta):
        assert np.all(values == 0.0)


def test_beta_identity_holds_pointwise(perturbed, rng):
    aspect = mass_aspect(perturbed, Point(*create_sample_points(rng, 50)))
    assert aspect.identity_residual() < 1e-12


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_energy_aspect_of_tangential_perturbation(kappa):
    eps = 0.02
    r = np.array([0.7, 1.5, 3.0]) / kappa
    x = kappa * r
    at_rate_three = mass_aspect(family_perturbation(eps, kappa=kappa), Point(r, 1.0, 0.3))
    expected = kappa * eps * np.exp(-3.0 * x) * (8.0 - 2.0 / np.tanh(x))
    assert_allclose(at_rate_three.epsilon[..., 0], expected, rtol=1e-12)

    at_rate_two = mass_aspect(family_perturbation(eps, kappa=kappa, rate=2.0), Point(r, 1.0, 0.3))
    expected = eps * np.exp(-2.0 * x) * (6.0 * kappa - 2.0 * kappa / np.tanh(x))
    assert_allclose(at_rate_two.epsilon[..., 0], expected, rtol=1e-12)


def test_sphere_integral_of_constants():
    r, kappa = 2.0, 0.5
    assert sphere_integral(lambda t, p: np.ones_like(t), r, 0, kappa) == pytest.approx(
        4.0 * np.pi * sphere_measure(r, kappa))
    assert abs(sphere_integral(np.ones((24, 48)), r, 1, kappa)) < 1e-12 * sphere_measure(r, kappa)
    dipole = sphere_integral(lambda t, p: np.cos(t), r, 3, kappa, n_theta=8, n_psi=8)
    assert dipole == pytest.approx(4.0 * np.pi / 3.0 * sphere_measure(r, kappa))


def test_sphere_integral_errors():
    with pytest.raises(DomainError):
        sphere_integral(lambda t, p: t, 0.0, 0, 1.0)
    with pytest.raises(DomainError):
        sphere_integral(lambda t, p: t, 1.0, 4, 1.0)
    with pytest.raises(ConfigError):
        sphere_integral(lambda t, p: t, 1.0, 0, 1.0, n_theta=0)


def test_extrapolation_recovers_exponential_model():
    radii = np.array(RADII)
    values = 2.0 + 3.0 * np.exp(-2.0 * radii)
    fit = extrapolate_limit(radii, values, 1.0)
    assert fit.converged
    assert fit.limit == pytest.approx(2.0, rel=1e-6)
    assert fit.sigma == pytest.approx(2.0, rel=1e-3)


def test_extrapolation_edge_cases():
    fit = extrapolate_limit(RADII, [0.5, 0.5, 0.5, 0.5], 1.0)
    assert fit.constant and fit.converged and fit.limit == 0.5

    oscillating = extrapolate_limit(RADII, [1.0, -1.0, 1.0, -1.0], 1.0)
    assert not oscillating.converged

    with pytest.raises(ConfigError):
        extrapolate_limit(RADII[:2], [1.0, 2.0], 1.0)
    assert set(fit.to_dict()) == {"limit", "amplitude", "sigma", "residual", "tolerance", "converged", "constant"}


def test_ads_energy_momentum_is_zero():
    em = energy_momentum(family_ads(1.0))
    assert em.converged
    assert np.all(em.E == 0.0)
    assert np.all(em.P == 0.0)
    assert em.bookkeeping_residual == 0.0


@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_tangential_perturbation_energy(kappa):
    eps = 0.01
    data = family_perturbation(eps, kappa=kappa)
    radii = [r / kappa for r in RADII]
    em = energy_momentum(data, radii, n_theta=8, n_psi=8)

    x = np.array(RADII)
    raw = eps / (16.0 * kappa) * (1.0 - np.exp(-2.0 * x)) ** 2 * (8.0 - 2.0 / np.tanh(x))
    assert_allclose(em.raw_E[:, 0], raw, rtol=1e-10)
    assert em.converged, em.not_converged
    assert em.E[0] == pytest.approx(3.0 * eps / (8.0 * kappa), rel=1e-3)
    assert np.max(np.abs(em.E[1:])) < 1e-12
    assert np.all(em.P == 0.0)


def test_isotropic_second_fundamental_form_momentum():
    eta, kappa = 0.02, 1.0
    data = family_perturbation(0.0, h_profile="isotropic", eta=eta, kappa=kappa)
    em = energy_momentum(data, RADII, n_theta=8, n_psi=8)
    x = np.array(RADII)
    assert_allclose(em.raw_P[:, 0, 0], -eta / (4.0 * kappa**2) * (1.0 - np.exp(-2.0 * x)) ** 2, rtol=1e-10)
    assert em.P[0, 0] == pytest.approx(-eta / (4.0 * kappa**2), rel=1e-3)
    assert em.bookkeeping_residual < 1e-14


def test_dipole_perturbation_moves_energy_into_e3():
    eps = 0.01
    em = energy_momentum(family_perturbation(eps, mode="dipole"), RADII)
    assert abs(em.E[0]) < 1e-12
    assert em.E[3] == pytest.approx(eps / 8.0, rel=1e-3)


@pytest.mark.slow
@pytest.mark.parametrize("mass, kappa", [(0.5, 1.0), (1.0, 1.0), (2.0, 0.5)])
def test_kottler_energy(mass, kappa):
    em = energy_momentum(family_kottler(mass, kappa))
    assert em.converged, em.not_converged
    assert em.E[0] == pytest.approx(2.0 * mass, rel=1e-2)
    assert np.max(np.abs(em.E[1:])) < 1e-3 * mass
    assert np.max(np.abs(em.P)) < 1e-3 * mass

    for matrix in (q1_matrix(em), q2_matrix(em)):
        assert matrix.verdict is Definiteness.POSITIVE_DEFINITE
        assert_allclose(matrix.eigenvalues, 2.0 * mass, rtol=1e-2)

    margins = corollary_margins(em)
    assert margins["energy_momentum"] == pytest.approx(2.0 * mass, rel=1e-2)
    assert margins["energy"] == pytest.approx(2.0 * mass, rel=1e-2)
    assert geometric_invariant(em, 1.0, 0.0) == pytest.approx(4.0 * mass**2, rel=2e-2)


def test_bookkeeping_identity_on_perturbed_data(perturbed):
    em = energy_momentum(perturbed, RADII, n_theta=12, n_psi=16)
    scale = max(1.0, np.max(np.abs(em.raw_E)), np.max(np.abs(em.raw_P)))
    assert em.bookkeeping_residual < 1e-10 * scale
    frame = em.to_frame()
    assert list(frame.index) == list(RADII)
    assert {"E0", "P01", "P33", "beta3"} <= set(frame.columns)


def test_threads_do_not_change_results(perturbed):
    serial = energy_momentum(perturbed, RADII, n_theta=8, n_psi=8)
    parallel = energy_momentum(perturbed, RADII, n_theta=8, n_psi=8, threads=3)
    assert np.array_equal(serial.raw_E, parallel.raw_E)
    assert np.array_equal(serial.raw_P, parallel.raw_P)


@pytest.mark.parametrize("radii", [(3.0, 4.0), (3.0, 5.0, 4.0)])
def test_energy_momentum_rejects_bad_radii(ads, radii):
    with pytest.raises(ConfigError):
        energy_momentum(ads, radii)


def test_hermitian4_verdicts():
    pd_matrix = hermitian4(np.diag([1.0, 2.0, 3.0, 4.0]))
    assert pd_matrix.verdict is Definiteness.POSITIVE_DEFINITE
    assert pd_matrix.cholesky_ok
    assert_allclose(pd_matrix.minors, [1.0, 2.0, 6.0, 24.0])
    assert_allclose(pd_matrix.eigenvalues, [1.0, 2.0, 3.0, 4.0])

    psd = hermitian4(np.diag([1.0, 0.0, 2.0, 3.0]))
    assert psd.verdict is Definiteness.POSITIVE_SEMIDEFINITE
    assert not psd.cholesky_ok

    indefinite = hermitian4(np.diag([1.0, -1.0, 1.0, 1.0]))
    assert indefinite.verdict is Definiteness.INDEFINITE
    assert hermitian4(-np.eye(4)).negative_definite


def test_hermitian4_contract():
    with pytest.raises(ContractViolation):
        hermitian4(np.array([[1.0, 1.0, 0, 0], [0, 1.0, 0, 0], [0, 0, 1.0, 0], [0, 0, 0, 1.0]]))
    with pytest.raises(ContractViolation):
        hermitian4(np.eye(3))


def test_matrices_have_expected_spectra(rng):
    E = np.array([3.0, 1.0, 0.5, -0.2])
    em = create_energy_momentum(E, np.zeros((4, 3)))
    spatial = np.linalg.norm(E[1:])
    expected = [3.0 - spatial, 3.0 - spatial, 3.0 + spatial, 3.0 + spatial]
    assert_allclose(q1_matrix(em).eigenvalues, expected, atol=1e-12)
    assert_allclose(q2_matrix(em).eigenvalues, expected, atol=1e-12)

    P = rng.standard_normal((4, 3))
    q = q2_matrix(create_energy_momentum(E, P)).matrix
    assert_allclose(q, q.conj().T)
    assert q[3, 3] == pytest.approx(E[0] - E[3])
    assert q[2, 3] == pytest.approx(-E[1] + 1j * E[2])


def test_matrices_require_converged_series():
    fit = ExtrapolationFit(limit=0.0, amplitude=0.0, sigma=1.0, residual=1.0, tolerance=1e-3, converged=False)
    em = create_energy_momentum(np.zeros(4), np.zeros((4, 3)), {"E0": fit})
    assert em.not_converged == ["E0"]
    with pytest.raises(NotConvergedError, match="E0"):
        q1_matrix(em)
    with pytest.raises(NotConvergedError):
        q2_matrix(em)


def test_boundary_form_equals_q1_quadratic_form(rng):
    em = create_energy_momentum(rng.standard_normal(4), rng.standard_normal((4, 3)))
    Q1 = q1_matrix(em).matrix
    for _ in range(100):
        lam = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        direct = float(np.real(np.conj(lam) @ Q1 @ lam))
        assert boundary_quadratic_form(em, lam) == pytest.approx(direct, rel=1e-10, abs=1e-12)
    params = KillingParams(tuple(lam))
    assert boundary_quadratic_form(em, params) == pytest.approx(boundary_quadratic_form(em, lam))


def test_positivity_report_corollaries():
    em = create_energy_momentum([2.0, 0.5, 0.0, 0.0], np.zeros((4, 3)))
    report = positivity_report(q1_matrix(em), em)
    assert report.verdict is Definiteness.POSITIVE_DEFINITE
    assert report.margins["energy"] == pytest.approx(1.5)
    assert all(report.corollaries.values())
    assert geometric_invariant(em, 1.0, 0.0) == pytest.approx(4.0 - 0.25)
    assert positivity_report(np.eye(4)).corollaries == {}
