#!/usr/bin/env python3
"""
Tests for the hyperbolic frame, the curvature engine and sphere quadrature
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.geometry_engine import (
    Point,
    constant_curvature_tensor,
    covariant_derivative_h,
    curvature_symmetry_residuals,
    geometry_at,
    hyperbolic_connection,
    hyperbolic_frame,
    riemann,
    scalar_curvature,
    sphere_grid,
)
from src.initial_data import family_ads, kottler_areal_radius
from src.utils import ConfigError, DomainError

from conftest import create_sample_points


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_hyperbolic_space_has_constant_curvature(rng, kappa):
    r, theta, psi = create_sample_points(rng, 10, kappa=kappa)
    R = riemann(family_ads(kappa), Point(r, theta, psi))
    expected = np.broadcast_to(constant_curvature_tensor(kappa), R.components.shape)
    assert_allclose(R.components, expected, atol=1e-9 * kappa**2)
    assert_allclose(R.scalar(), -6.0 * kappa**2, rtol=1e-10)


def test_sectional_curvature_convention():
    R = constant_curvature_tensor(1.5)
    assert R[0, 1, 0, 1] == pytest.approx(-1.5**2)
    assert R[0, 1, 1, 0] == pytest.approx(1.5**2)


def test_kottler_sectional_curvatures(kottler):
    s = np.array([1.5, 2.5, 4.0])
    R = riemann(kottler, Point(s, np.full(3, 1.1), 0.4)).components
    rhat = np.array([kottler_areal_radius(float(x), 1.0, 1.0) for x in s])
    assert_allclose(R[:, 0, 1, 0, 1], -1.0 - 1.0 / rhat**3, rtol=1e-6)
    assert_allclose(R[:, 0, 2, 0, 2], -1.0 - 1.0 / rhat**3, rtol=1e-6)
    assert_allclose(R[:, 1, 2, 1, 2], -1.0 + 2.0 / rhat**3, rtol=1e-6)
    # time-symmetric vacuum slice: Scal = -6 kappa^2 although R is not constant
    assert_allclose(scalar_curvature(kottler, Point(s, 1.1, 0.4)), -6.0, atol=1e-6)


def test_curvature_symmetries(perturbed, rng):
    r, theta, psi = create_sample_points(rng, 8)
    residuals = curvature_symmetry_residuals(riemann(perturbed, Point(r, theta, psi)).components)
    for name, value in residuals.items():
        assert value < 1e-10, name


def test_finite_differences_agree_with_analytic_jet(perturbed):
    p = Point(np.array([1.2, 2.0]), np.array([0.9, 2.1]), np.array([0.3, 4.0]))
    analytic = geometry_at(perturbed, p)
    fd = geometry_at(perturbed, p, fd_step=1e-4)
    assert_allclose(fd.riemann, analytic.riemann, atol=1e-6)
    assert_allclose(fd.nabla_h, analytic.nabla_h, atol=1e-7)


def test_frame_connection_is_antisymmetric(perturbed, rng):
    r, theta, psi = create_sample_points(rng, 6)
    geom = geometry_at(perturbed, Point(r, theta, psi))
    assert_allclose(geom.connection, -np.swapaxes(geom.connection, -1, -2), atol=1e-10)


def test_hyperbolic_frame_and_connection():
    p = Point(1.3, 0.8, 2.0)
    frame = hyperbolic_frame(p, 2.0)
    assert frame.frame[1, 1] == pytest.approx(2.0 / np.sinh(2.6))
    assert frame.coframe[2, 2] == pytest.approx(np.sinh(2.6) * np.sin(0.8) / 2.0)
    gam = hyperbolic_connection(p, 2.0)
    assert_allclose(gam, -np.swapaxes(gam, -1, -2))
    assert gam[1, 0, 1] == pytest.approx(2.0 / np.tanh(2.6))


def test_hyperbolic_connection_matches_engine_on_ads():
    p = Point(np.array([0.7, 2.2]), np.array([0.5, 1.9]), 0.0)
    geom = geometry_at(family_ads(1.0), p)
    assert_allclose(geom.connection, hyperbolic_connection(p, 1.0), atol=1e-12)


def test_second_fundamental_form_derivative_vanishes_on_ads():
    dh = covariant_derivative_h(family_ads(1.0), Point(2.0, 1.0, 0.5))
    assert np.all(dh.nabla == 0.0)
    assert np.all(dh.divergence == 0.0)


@pytest.mark.parametrize("r, theta", [(-1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (1.0, np.pi)])
def test_point_outside_chart(r, theta):
    with pytest.raises(DomainError):
        Point(r, theta, 0.0)


def test_sphere_grid_quadrature():
    grid = sphere_grid(16, 32)
    assert grid.shape == (16, 32)
    assert np.sum(grid.weights) == pytest.approx(4.0 * np.pi)
    assert np.sum(grid.weights * np.cos(grid.theta) ** 2) == pytest.approx(4.0 * np.pi / 3.0)
    assert np.sum(grid.weights * grid.unit_normal(1) ** 2) == pytest.approx(4.0 * np.pi / 3.0)
    assert abs(np.sum(grid.weights * grid.unit_normal(2))) < 1e-14
    with pytest.raises(DomainError):
        grid.unit_normal(4)


@pytest.mark.parametrize("orders", [(0, 8), (8, 0), (-2, 4)])
def test_sphere_grid_rejects_nonpositive_orders(orders):
    with pytest.raises(ConfigError):
        sphere_grid(*orders)
