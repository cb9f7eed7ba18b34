#!/usr/bin/env python3
"""
Tests for the Clifford representation and spinor products
"""

import numpy as np
import pytest
import sympy as sp
from numpy.testing import assert_allclose

from src.clifford_spinor import (
    ETA,
    GAMMA,
    IDENTITY4,
    KillingVariant,
    Spinor,
    anticommutator_residuals,
    clifford_apply,
    clifford_matrix,
    gamma,
    gamma_exact,
    inner_lorentz,
    inner_pos,
    killing_term,
)
from src.utils import ContractViolation, DomainError


def test_exact_representation_passes_all_identities():
    failures = anticommutator_residuals()
    assert failures == {"anticommutator": 0, "hermitian_e0": 0, "skew_hermitian_ei": 0}


@pytest.mark.parametrize("a", range(4))
@pytest.mark.parametrize("b", range(4))
def test_numeric_anticommutators(a, b):
    anti = GAMMA[a] @ GAMMA[b] + GAMMA[b] @ GAMMA[a]
    assert np.max(np.abs(anti + 2.0 * ETA[a, b] * IDENTITY4)) <= 1e-15


def test_generator_squares_and_adjoints():
    assert_allclose(GAMMA[0] @ GAMMA[0], IDENTITY4)
    assert_allclose(GAMMA[0].conj().T, GAMMA[0])
    for i in range(1, 4):
        assert_allclose(GAMMA[i] @ GAMMA[i], -IDENTITY4)
        assert_allclose(GAMMA[i].conj().T, -GAMMA[i])


def test_gamma_matches_exact_entries():
    g3 = gamma_exact(3)
    assert g3[0, 3] == sp.I
    assert g3[1, 2] == -sp.I
    assert gamma(3).label == 3
    assert_allclose(gamma(2).matrix, np.array(gamma_exact(2).tolist(), dtype=complex))


@pytest.mark.parametrize("bad", [-1, 4, 1.5, True])
def test_gamma_rejects_bad_index(bad):
    with pytest.raises(DomainError):
        gamma(bad)


def test_spinor_validation():
    with pytest.raises(DomainError):
        Spinor(np.ones(3))
    with pytest.raises(ContractViolation):
        Spinor([1.0, np.nan, 0.0, 0.0])
    phi = Spinor([1, 2j, 0, -1])
    assert (2 * phi - phi).norm() == pytest.approx(phi.norm())
    assert Spinor.zero().norm() == 0.0


def test_clifford_multiplication_squares_to_minus_norm(rng):
    xi = rng.standard_normal(4)
    phi = Spinor(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    twice = clifford_apply(xi, clifford_apply(xi, phi))
    lorentz_norm = xi @ ETA @ xi
    assert_allclose(twice.components, -lorentz_norm * phi.components, atol=1e-12)


def test_clifford_apply_single_generator():
    phi = Spinor([1, 0, 0, 0])
    assert_allclose(clifford_apply([0, 1, 0, 0], phi).components, gamma(1).apply(phi).components)
    assert clifford_matrix(np.zeros((5, 4))).shape == (5, 4, 4)


def test_inner_products(rng):
    phi = Spinor(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    psi = Spinor(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    assert inner_pos(phi, phi).imag == pytest.approx(0.0, abs=1e-14)
    assert inner_pos(phi, phi).real == pytest.approx(phi.norm() ** 2)
    assert inner_pos(phi, psi) == pytest.approx(np.conj(inner_pos(psi, phi)))
    # gamma_0 is Hermitian, so the Lorentzian product of a spinor with itself is real
    assert inner_lorentz(phi, phi).imag == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("variant", list(KillingVariant))
def test_killing_terms_are_hermitian(variant):
    K = killing_term(variant, 0.7)
    assert K.shape == (3, 4, 4)
    assert_allclose(K, np.conj(np.swapaxes(K, -1, -2)), atol=1e-15)


def test_unknown_variant():
    with pytest.raises(ValueError):
        killing_term("bogus", 1.0)
