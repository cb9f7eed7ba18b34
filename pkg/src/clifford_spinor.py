"""
Fixed Clifford representation for the AdS slice, spinor vectors and the two
spinor inner products.

Generator matrices are held exactly as sympy matrices; numeric work uses the
complex numpy copies in ``GAMMA``.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Sequence, Union

import numpy as np
import sympy as sp

from .utils import ContractViolation, DomainError

logger = logging.getLogger(__name__)


_I = sp.I

# Columns follow the component order (Phi^1, Phi^2, Phi^3, Phi^4).
GAMMA_EXACT = (
    sp.Matrix([
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [1, 0, 0, 0],
        [0, 1, 0, 0],
    ]),
    sp.Matrix([
        [0, 0, -1, 0],
        [0, 0, 0, 1],
        [1, 0, 0, 0],
        [0, -1, 0, 0],
    ]),
    sp.Matrix([
        [0, 0, 0, 1],
        [0, 0, 1, 0],
        [0, -1, 0, 0],
        [-1, 0, 0, 0],
    ]),
    sp.Matrix([
        [0, 0, 0, _I],
        [0, 0, -_I, 0],
        [0, -_I, 0, 0],
        [_I, 0, 0, 0],
    ]),
)

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])

GAMMA = np.array(
    [np.array(m.tolist(), dtype=complex) for m in GAMMA_EXACT]
)
IDENTITY4 = np.eye(4, dtype=complex)

# gamma_0 gamma_i for the spatial frame, indexed 0..2 for e_1..e_3
GAMMA0_GAMMA = np.einsum("ab,ibc->iac", GAMMA[0], GAMMA[1:])
# gamma_k gamma_l over spatial indices
GAMMA_PAIR = np.einsum("kab,lbc->klac", GAMMA[1:], GAMMA[1:])


@dataclass(frozen=True)
class Spinor:
    """A 4-component complex spinor in the representation basis."""
    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=complex).reshape(-1)
        if comps.shape != (4,):
            raise DomainError(f"Spinor needs 4 components, got {comps.shape[0]}")
        if not np.all(np.isfinite(comps)):
            raise ContractViolation("Spinor components must be finite")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    def __add__(self, other: "Spinor") -> "Spinor":
        return Spinor(self.components + other.components)

    def __sub__(self, other: "Spinor") -> "Spinor":
        return Spinor(self.components - other.components)

    def __mul__(self, scalar: complex) -> "Spinor":
        return Spinor(scalar * self.components)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    @classmethod
    def zero(cls) -> "Spinor":
        return cls(np.zeros(4, dtype=complex))


@dataclass(frozen=True)
class CliffordElement:
    """A 4x4 complex matrix in the Clifford algebra, labelled by its origin."""
    matrix: np.ndarray
    label: Union[int, str] = "product"

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (4, 4):
            raise DomainError(f"Clifford element must be 4x4, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __matmul__(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(self.matrix @ other.matrix, "product")

    def __add__(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(self.matrix + other.matrix, "product")

    def apply(self, phi: Spinor) -> Spinor:
        return Spinor(self.matrix @ phi.components)


def _check_index(alpha: int) -> int:
    if isinstance(alpha, bool) or int(alpha) != alpha or not 0 <= int(alpha) <= 3:
        raise DomainError(f"Frame index {alpha!r} not supported; use 0, 1, 2 or 3")
    return int(alpha)


def gamma(alpha: int) -> CliffordElement:
    """
    Clifford generator for the frame vector e_alpha.

    Args:
        alpha: Frame index, 0 for the timelike normal and 1..3 for the slice

    Returns:
        The generator as a CliffordElement
    """
    alpha = _check_index(alpha)
    return CliffordElement(GAMMA[alpha], alpha)


def gamma_exact(alpha: int) -> sp.Matrix:
    """Exact (Gaussian-integer) generator matrix."""
    return GAMMA_EXACT[_check_index(alpha)].copy()


def clifford_matrix(xi: Sequence[complex]) -> np.ndarray:
    """Matrix of Clifford multiplication by X = xi^alpha e_alpha."""
    xi = np.asarray(xi, dtype=complex)
    if xi.shape[-1] != 4:
        raise DomainError("Frame vector needs components xi^0..xi^3")
    return np.einsum("...a,aij->...ij", xi, GAMMA)


def clifford_apply(xi: Sequence[complex], phi: Spinor) -> Spinor:
    """
    Clifford multiplication X . phi.

    Args:
        xi: Frame components (xi^0, xi^1, xi^2, xi^3)
        phi: Spinor to act on

    Returns:
        (sum_alpha xi^alpha gamma_alpha) phi
    """
    return Spinor(clifford_matrix(xi) @ phi.components)


def inner_pos(phi: Spinor, psi: Spinor) -> complex:
    """Positive definite Hermitian product, conjugate-linear in phi."""
    return complex(np.vdot(phi.components, psi.components))


def inner_lorentz(phi: Spinor, psi: Spinor) -> complex:
    """Indefinite product (phi, psi) = <e_0 . phi, psi>."""
    return complex(np.vdot(GAMMA[0] @ phi.components, psi.components))


def anticommutator_residuals() -> Dict[str, int]:
    """
    Exact check of {gamma_a, gamma_b} = -2 eta_ab I and the adjoint properties.

    Returns:
        Count of failing identities per check; all zeros for a valid representation.
    """
    eye = sp.eye(4)
    failures = {"anticommutator": 0, "hermitian_e0": 0, "skew_hermitian_ei": 0}
    for a in range(4):
        for b in range(a, 4):
            ga, gb = GAMMA_EXACT[a], GAMMA_EXACT[b]
            target = -2 * int(ETA[a, b]) * eye
            if sp.simplify(ga * gb + gb * ga - target) != sp.zeros(4, 4):
                failures["anticommutator"] += 1
    if GAMMA_EXACT[0].H != GAMMA_EXACT[0]:
        failures["hermitian_e0"] += 1
    for i in range(1, 4):
        if GAMMA_EXACT[i].H != -GAMMA_EXACT[i]:
            failures["skew_hermitian_ei"] += 1
    if any(failures.values()):
        logger.warning("Clifford representation check failed: %s", failures)
    return failures


def spinor_array(components: np.ndarray) -> np.ndarray:
    """Validate a stack of spinor components with shape (..., 4)."""
    components = np.asarray(components, dtype=complex)
    if components.shape[-1] != 4:
        raise DomainError("Spinor arrays need a trailing axis of length 4")
    return components


class KillingVariant(str, Enum):
    """Which Killing term shifts the hypersurface connection."""
    E0_KILLING = "e0"
    IMAGINARY = "imaginary"


def killing_term(variant: Union[str, KillingVariant], kappa: float) -> np.ndarray:
    """
    Endomorphisms K_i added to nabla_i, stacked over i = 1..3.

    E0 variant: (kappa/2) gamma_0 gamma_i. Imaginary variant: (i kappa/2) gamma_i.
    Both are Hermitian for the positive product.
    """
    variant = KillingVariant(variant)
    if variant is KillingVariant.E0_KILLING:
        return 0.5 * kappa * GAMMA0_GAMMA
    return 0.5j * kappa * GAMMA[1:]
