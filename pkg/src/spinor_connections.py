"""
Killing spinor families, hypersurface spin connections, Dirac-Witten
operators, curvature endomorphisms and Weitzenbock residuals.

Spinor components refer to the g-orthonormal frame produced by
``geometry_engine.local_geometry``. The Levi-Civita connection lifts as

    nabla-bar_j phi = e_j(phi) + 1/4 sum_kl Gamma_jkl gamma_k gamma_l phi,

with Gamma_jkl = g(nabla_{e_j} e_k, e_l), and the hypersurface connection is
nabla_i = nabla-bar_i - 1/2 h_ij gamma_0 gamma_j.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .clifford_spinor import (
    GAMMA,
    GAMMA0_GAMMA,
    GAMMA_PAIR,
    IDENTITY4,
    KillingVariant,
    Spinor,
    killing_term,
)
from .geometry_engine import LocalGeometry, Point, local_geometry
from .initial_data import InitialDataFamily, constraint_densities_from_geometry
from .utils import ConfigError, DomainError, validate_chart_arrays

logger = logging.getLogger(__name__)

DEFAULT_SPINOR_STEP = 1e-4

VariantLike = Union[str, KillingVariant, None]
SpinorEvaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KillingParams:
    """Coefficients lambda_1..lambda_4 of a Killing spinor and the variant they belong to."""
    lam: Tuple[complex, complex, complex, complex]
    variant: KillingVariant = KillingVariant.E0_KILLING
    kappa: float = 1.0

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex).reshape(-1)
        if lam.shape != (4,):
            raise DomainError(f"Killing spinors need 4 coefficients, got {lam.shape[0]}")
        if not np.all(np.isfinite(lam)):
            raise DomainError("Killing coefficients must be finite")
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")
        object.__setattr__(self, "lam", tuple(complex(x) for x in lam))
        object.__setattr__(self, "variant", KillingVariant(self.variant))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.lam, dtype=complex)


@dataclass(frozen=True)
class SpinorField:
    """
    A spinor field on the chart.

    ``evaluate`` maps chart arrays to components (..., 4). ``gradient`` maps them
    to coordinate partials (..., 3, 4) ordered (d_r, d_theta, d_psi); without it
    the partials are taken by central differences.
    """
    evaluate: SpinorEvaluator
    gradient: Optional[SpinorEvaluator] = None
    support: str = "global"
    support_radius: Optional[Tuple[float, float]] = None
    label: str = "field"

    def value(self, p: Point) -> Spinor:
        r, theta, psi = p.arrays()
        return Spinor(np.asarray(self.evaluate(r, theta, psi)).reshape(4))

    def partials(
        self,
        r: np.ndarray,
        theta: np.ndarray,
        psi: np.ndarray,
        step: float = DEFAULT_SPINOR_STEP
    ) -> np.ndarray:
        if self.gradient is not None:
            return np.asarray(self.gradient(r, theta, psi), dtype=complex)
        coords = [np.asarray(c, dtype=float) for c in (r, theta, psi)]
        out = []
        for mu in range(3):
            h = step * np.maximum(1.0, coords[0]) if mu == 0 else np.full(coords[0].shape, step)
            plus = [c.copy() for c in coords]
            minus = [c.copy() for c in coords]
            plus[mu] = plus[mu] + h
            minus[mu] = minus[mu] - h
            diff = (np.asarray(self.evaluate(*plus)) - np.asarray(self.evaluate(*minus)))
            out.append(diff / (2.0 * h[..., None]))
        return np.stack(out, axis=-2)


def _angular_blocks(theta: np.ndarray, psi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Y = blockdiag(Y2, Y2) with Y2 = [[E s, E* c], [-E c, E* s]] and its theta, psi partials.

    E = exp(i psi/2), s = sin(theta/2), c = cos(theta/2).
    """
    E = np.exp(0.5j * psi)
    Eb = np.conj(E)
    s, c = np.sin(0.5 * theta), np.cos(0.5 * theta)
    shape = np.shape(E)

    Y2 = np.empty(shape + (2, 2), dtype=complex)
    Y2[..., 0, 0] = E * s
    Y2[..., 0, 1] = Eb * c
    Y2[..., 1, 0] = -E * c
    Y2[..., 1, 1] = Eb * s

    dY2_theta = np.empty_like(Y2)
    dY2_theta[..., 0, 0] = 0.5 * E * c
    dY2_theta[..., 0, 1] = -0.5 * Eb * s
    dY2_theta[..., 1, 0] = 0.5 * E * s
    dY2_theta[..., 1, 1] = 0.5 * Eb * c

    dY2_psi = Y2 * np.array([0.5j, -0.5j])

    def block(m: np.ndarray) -> np.ndarray:
        out = np.zeros(shape + (4, 4), dtype=complex)
        out[..., :2, :2] = m
        out[..., 2:, 2:] = m
        return out

    return block(Y2), block(dY2_theta), block(dY2_psi)


def _radial_blocks(variant: KillingVariant, r: np.ndarray, kappa: float) -> Tuple[np.ndarray, np.ndarray]:
    """Radial matrix K(r) of the closed-form family and its r-derivative."""
    p = np.exp(0.5 * kappa * r)
    m = np.exp(-0.5 * kappa * r)
    dp, dm = 0.5 * kappa * p, -0.5 * kappa * m
    shape = np.shape(p)

    def build(pp: np.ndarray, mm: np.ndarray) -> np.ndarray:
        K = np.zeros(shape + (4, 4), dtype=complex)
        if variant is KillingVariant.E0_KILLING:
            K[..., 0, 0] = mm
            K[..., 1, 1] = pp
            K[..., 2, 2] = pp
            K[..., 3, 3] = mm
        else:
            # rows act on (u+, v-, u-, v+) read off Y lambda
            K[..., 0, 0] = pp
            K[..., 0, 2] = mm
            K[..., 1, 1] = mm
            K[..., 1, 3] = pp
            K[..., 2, 0] = -1j * pp
            K[..., 2, 2] = 1j * mm
            K[..., 3, 1] = -1j * mm
            K[..., 3, 3] = 1j * pp
        return K

    return build(p, m), build(dp, dm)


def _killing_arrays(
    lam: np.ndarray,
    variant: KillingVariant,
    kappa: float,
    r: np.ndarray,
    theta: np.ndarray,
    psi: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    r, theta, psi = np.broadcast_arrays(
        np.asarray(r, dtype=float), np.asarray(theta, dtype=float), np.asarray(psi, dtype=float)
    )
    Y, dY_theta, dY_psi = _angular_blocks(theta, psi)
    K, dK = _radial_blocks(variant, r, kappa)
    w = np.einsum("...ab,b->...a", Y, lam)
    phi = np.einsum("...ab,...b->...a", K, w)
    grad = np.stack([
        np.einsum("...ab,...b->...a", dK, w),
        np.einsum("...ab,...bc,c->...a", K, dY_theta, lam),
        np.einsum("...ab,...bc,c->...a", K, dY_psi, lam),
    ], axis=-2)
    return phi, grad


def killing_field(params: KillingParams) -> SpinorField:
    """The closed-form Killing spinor of ``params`` as a field with analytic partials."""
    lam = params.vector

    def evaluate(r, theta, psi):
        return _killing_arrays(lam, params.variant, params.kappa, r, theta, psi)[0]

    def gradient(r, theta, psi):
        return _killing_arrays(lam, params.variant, params.kappa, r, theta, psi)[1]

    return SpinorField(evaluate=evaluate, gradient=gradient, label=f"killing_{params.variant.value}")


def e0_killing_spinor(params: KillingParams, p: Point) -> Spinor:
    """
    Closed-form solution of nabla_X Phi + (kappa/2) e_0 . X . Phi = 0 on hyperbolic space.

    Phi = diag(e^{-kr/2}, e^{kr/2}, e^{kr/2}, e^{-kr/2}) Y(theta, psi) lambda, i.e.
    Phi^1 = (l1 E s + l2 E* c) e^{-kr/2}, Phi^2 = (l2 E* s - l1 E c) e^{kr/2} and the
    same pattern in (l3, l4) for Phi^3 (e^{kr/2}) and Phi^4 (e^{-kr/2}).
    """
    r, theta, psi = p.arrays()
    phi, _ = _killing_arrays(params.vector, KillingVariant.E0_KILLING, params.kappa, r, theta, psi)
    return Spinor(phi.reshape(4))


def imaginary_killing_spinor(params: KillingParams, p: Point) -> Spinor:
    """
    Closed-form solution of nabla_X Phi + (i kappa/2) X . Phi = 0 on hyperbolic space.

    Phi = (u+ P + u- M, v+ P + v- M, -i u+ P + i u- M, i v+ P - i v- M) with
    P = e^{kr/2}, M = e^{-kr/2}, u+ = l1 E s + l2 E* c, u- = l3 E s + l4 E* c,
    v+ = l4 E* s - l3 E c and v- = l2 E* s - l1 E c.
    """
    r, theta, psi = p.arrays()
    phi, _ = _killing_arrays(params.vector, KillingVariant.IMAGINARY, params.kappa, r, theta, psi)
    return Spinor(phi.reshape(4))


def lambda_at_time(C: Sequence[complex], t: float, kappa: float) -> np.ndarray:
    """
    Coefficients of the spacetime imaginary Killing spinor on the slice at time t.

    lambda_1 = C1 cos + C3 sin, lambda_3 = C3 cos - C1 sin,
    lambda_2 = C2 cos + C4 sin, lambda_4 = C4 cos - C2 sin, all at angle kappa t / 2.
    """
    C = np.asarray(C, dtype=complex).reshape(-1)
    if C.shape != (4,):
        raise DomainError("Time-dependent Killing coefficients need C1..C4")
    cos, sin = np.cos(0.5 * kappa * t), np.sin(0.5 * kappa * t)
    return np.array([
        C[0] * cos + C[2] * sin,
        C[1] * cos + C[3] * sin,
        C[2] * cos - C[0] * sin,
        C[3] * cos - C[1] * sin,
    ])


def imaginary_killing_spinor_at_time(C: Sequence[complex], t: float, p: Point, kappa: float) -> Spinor:
    """Imaginary Killing spinor of the AdS spacetime restricted to the slice at time t."""
    params = KillingParams(tuple(lambda_at_time(C, t, kappa)), KillingVariant.IMAGINARY, kappa)
    return imaginary_killing_spinor(params, p)


def killing_gram_determinant(variant: Union[str, KillingVariant], kappa: float, p: Point) -> float:
    """det of the inner_pos Gram matrix of the four basis solutions at p."""
    variant = KillingVariant(variant)
    r, theta, psi = p.arrays()
    columns = np.stack([
        _killing_arrays(np.eye(4, dtype=complex)[k], variant, kappa, r, theta, psi)[0].reshape(4)
        for k in range(4)
    ], axis=1)
    gram = columns.conj().T @ columns
    return float(np.real(np.linalg.det(gram)))


def _bump(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    inside = np.abs(x) < 1.0
    safe = np.where(inside, x, 0.0)
    b = np.where(inside, np.exp(-1.0 / (1.0 - safe**2)), 0.0)
    db = np.where(inside, b * (-2.0 * safe / (1.0 - safe**2) ** 2), 0.0)
    return b, db


def polynomial_bump_field(coeffs: np.ndarray, r0: float, width: float) -> SpinorField:
    """
    Compactly supported test field phi_a = b(x) sum_k C_ak m_k.

    x = (r - r0)/width, b(x) = exp(-1/(1 - x^2)) on |x| < 1, and the monomials are
    m = (1, x, cos(theta), sin(theta) cos(psi), sin(theta) sin(psi)).

    Args:
        coeffs: Complex array (4, 5)
        r0: Centre of the radial support
        width: Half-width of the support, r0 - width must stay positive
    """
    C = np.asarray(coeffs, dtype=complex)
    if C.shape != (4, 5):
        raise ConfigError(f"Bump field coefficients must have shape (4, 5), got {C.shape}")
    if width <= 0 or r0 - width <= 0:
        raise DomainError("Bump support must lie in r > 0")

    def monomials(r, theta, psi):
        x = (r - r0) / width
        st, ct = np.sin(theta), np.cos(theta)
        sp_, cp = np.sin(psi), np.cos(psi)
        zero, one = np.zeros_like(x), np.ones_like(x)
        m = np.stack([one, x, ct, st * cp, st * sp_], axis=-1)
        dm = np.stack([
            np.stack([zero, one / width, zero, zero, zero], axis=-1),
            np.stack([zero, zero, -st, ct * cp, ct * sp_], axis=-1),
            np.stack([zero, zero, zero, -st * sp_, st * cp], axis=-1),
        ], axis=-2)
        return x, m, dm

    def evaluate(r, theta, psi):
        r, theta, psi = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (r, theta, psi)))
        x, m, _ = monomials(r, theta, psi)
        b, _ = _bump(x)
        return b[..., None] * np.einsum("ak,...k->...a", C, m)

    def gradient(r, theta, psi):
        r, theta, psi = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (r, theta, psi)))
        x, m, dm = monomials(r, theta, psi)
        b, db = _bump(x)
        poly = np.einsum("ak,...k->...a", C, m)
        dpoly = np.einsum("ak,...mk->...ma", C, dm)
        out = b[..., None, None] * dpoly
        out[..., 0, :] += (db / width)[..., None] * poly
        return out

    return SpinorField(
        evaluate=evaluate,
        gradient=gradient,
        support="bump",
        support_radius=(r0 - width, r0 + width),
        label="polynomial_bump",
    )


def random_bump_field(rng: np.random.Generator, r0: float, width: float) -> SpinorField:
    """polynomial_bump_field with standard complex normal coefficients drawn from rng."""
    coeffs = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    return polynomial_bump_field(coeffs, r0, width)


@dataclass(frozen=True)
class ConnectionSample:
    """Spinor values and connection data on a batch of points."""
    geometry: LocalGeometry
    phi: np.ndarray
    nabla: np.ndarray
    shift: np.ndarray = field(repr=False)


def _shift_terms(geom: LocalGeometry, variant: VariantLike, kappa: float) -> np.ndarray:
    """A_i = -1/2 h_ij gamma_0 gamma_j + K_i, stacked (..., 3, 4, 4)."""
    shift = -0.5 * np.einsum("...ij,jab->...iab", geom.h, GAMMA0_GAMMA)
    if variant is not None:
        shift = shift + killing_term(variant, kappa)
    return shift


def _spin_lift(geom: LocalGeometry, values: np.ndarray) -> np.ndarray:
    """1/4 Gamma_jkl gamma_k gamma_l applied to spinors, (..., 3, 4)."""
    return 0.25 * np.einsum("...jkl,klab,...b->...ja", geom.connection, GAMMA_PAIR, values, optimize=True)


def _connection_batch(
    data: InitialDataFamily,
    spinor: SpinorField,
    r: np.ndarray,
    theta: np.ndarray,
    psi: np.ndarray,
    variant: VariantLike,
    data_fd_step: Optional[float] = None
) -> ConnectionSample:
    """nabla-hat_i phi on a batch of chart points (nabla_i when variant is None)."""
    r, theta, psi = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (r, theta, psi)))
    validate_chart_arrays(r, theta)
    sample = data.evaluate(r, theta, psi, fd_step=data_fd_step)
    geom = local_geometry(sample, r, theta, data.kappa)

    phi = np.asarray(spinor.evaluate(r, theta, psi), dtype=complex)
    dphi = spinor.partials(r, theta, psi)
    frame_derivative = np.einsum("...jm,...ma->...ja", geom.frame, dphi)

    shift = _shift_terms(geom, variant, data.kappa)
    nabla = (frame_derivative
             + _spin_lift(geom, phi)
             + np.einsum("...iab,...b->...ia", shift, phi))
    return ConnectionSample(geometry=geom, phi=phi, nabla=nabla, shift=shift)


def _check_direction(i: int) -> int:
    if isinstance(i, bool) or int(i) != i or not 1 <= int(i) <= 3:
        raise DomainError(f"Frame direction {i!r} not supported; use 1, 2 or 3")
    return int(i) - 1


def hypersurface_nabla(data: InitialDataFamily, spinor: SpinorField, p: Point, i: int) -> Spinor:
    """
    nabla_i phi = nabla-bar_i phi - 1/2 h_ij gamma_0 gamma_j phi at p.

    Args:
        data: Initial data supplying g and h
        spinor: Field to differentiate
        p: Chart point
        i: Frame direction 1, 2 or 3
    """
    k = _check_direction(i)
    sample = _connection_batch(data, spinor, *p.arrays(), variant=None)
    return Spinor(sample.nabla[..., k, :].reshape(4))


def killing_connection(
    data: InitialDataFamily,
    spinor: SpinorField,
    p: Point,
    i: int,
    variant: Union[str, KillingVariant] = KillingVariant.E0_KILLING
) -> Spinor:
    """
    nabla-hat_i phi = nabla_i phi + K_i phi, with K_i = (kappa/2) gamma_0 gamma_i (E0 variant)
    or (i kappa/2) gamma_i (imaginary variant).
    """
    k = _check_direction(i)
    sample = _connection_batch(data, spinor, *p.arrays(), variant=KillingVariant(variant))
    return Spinor(sample.nabla[..., k, :].reshape(4))


def killing_residual(
    data: InitialDataFamily,
    spinor: SpinorField,
    r: np.ndarray,
    theta: np.ndarray,
    psi: np.ndarray,
    variant: Union[str, KillingVariant]
) -> np.ndarray:
    """max_i |nabla-hat_i phi| per point, for batches of chart points."""
    sample = _connection_batch(data, spinor, r, theta, psi, variant=KillingVariant(variant))
    return np.max(np.linalg.norm(sample.nabla, axis=-1), axis=-1)


def dirac(data: InitialDataFamily, spinor: SpinorField, p: Point) -> Spinor:
    """Hypersurface Dirac operator D phi = sum_k gamma_k nabla_k phi."""
    sample = _connection_batch(data, spinor, *p.arrays(), variant=None)
    return Spinor(np.einsum("kab,...kb->...a", GAMMA[1:], sample.nabla).reshape(4))


def dirac_witten(
    data: InitialDataFamily,
    spinor: SpinorField,
    p: Point,
    variant: Union[str, KillingVariant] = KillingVariant.E0_KILLING
) -> Spinor:
    """
    Dirac-Witten operator sum_k gamma_k nabla-hat_k phi.

    Equals D phi + (3 kappa/2) gamma_0 phi for the E0 variant and
    D phi - (3 i kappa/2) phi for the imaginary variant.
    """
    sample = _connection_batch(data, spinor, *p.arrays(), variant=KillingVariant(variant))
    return Spinor(np.einsum("kab,...kb->...a", GAMMA[1:], sample.nabla).reshape(4))


@dataclass(frozen=True)
class CurvatureEndomorphism:
    """Zero-order term of the Weitzenbock formula at a point."""
    matrix: np.ndarray
    variant: KillingVariant
    energy: float
    momentum: np.ndarray

    @property
    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def endomorphism_from_geometry(
    geom: LocalGeometry,
    kappa: float,
    variant: Union[str, KillingVariant]
) -> np.ndarray:
    """
    R-hat as a (..., 4, 4) array.

    E0 variant: 1/2 (mu I + omega_i gamma_0 gamma_i); imaginary variant:
    1/2 (rho I + J_i gamma_0 gamma_i). Its eigenvalues are (energy +- |momentum|)/2,
    so positivity is the matching dominant energy condition.
    """
    variant = KillingVariant(variant)
    dens = constraint_densities_from_geometry(geom, kappa)
    if variant is KillingVariant.E0_KILLING:
        energy, momentum = dens.mu, dens.omega
    else:
        energy, momentum = dens.rho, dens.J
    return 0.5 * (np.asarray(energy)[..., None, None] * IDENTITY4
                  + np.einsum("...i,iab->...ab", momentum, GAMMA0_GAMMA))


def curvature_endomorphism(
    data: InitialDataFamily,
    p: Point,
    variant: Union[str, KillingVariant] = KillingVariant.E0_KILLING
) -> CurvatureEndomorphism:
    """
    Curvature endomorphism of the Weitzenbock formula for the chosen Killing connection.

    Spacetime curvature enters only through the constraint substitutions
    Scal~ + 2 R~_00 = Scal + (tr h)^2 - |h|^2 and R~_0i = omega_i.
    """
    variant = KillingVariant(variant)
    r, theta, psi = p.arrays()
    geom = local_geometry(data.evaluate(r, theta, psi), r, theta, data.kappa)
    dens = constraint_densities_from_geometry(geom, data.kappa)
    matrix = endomorphism_from_geometry(geom, data.kappa, variant).reshape(4, 4)
    if variant is KillingVariant.E0_KILLING:
        energy, momentum = dens.mu, dens.omega
    else:
        energy, momentum = dens.rho, dens.J
    return CurvatureEndomorphism(
        matrix=matrix,
        variant=variant,
        energy=float(np.asarray(energy).reshape(-1)[0]),
        momentum=np.asarray(momentum).reshape(3),
    )


def _stencil(p: Point, step: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Centre plus +- step along r, theta, psi; returns coordinates and the three step sizes."""
    r, theta, psi = (float(np.asarray(c).reshape(-1)[0]) for c in p.arrays())
    steps = np.array([step * max(1.0, r), step, step])
    offsets = np.zeros((7, 3))
    for mu in range(3):
        offsets[1 + 2 * mu, mu] = 1.0
        offsets[2 + 2 * mu, mu] = -1.0
    coords = np.array([r, theta, psi]) + offsets * steps
    return coords[:, 0], coords[:, 1], coords[:, 2], steps


def _stencil_partials(values: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Central partials d_mu of stencil values (7, ...) at the centre, stacked (3, ...)."""
    return np.stack([
        (values[1 + 2 * mu] - values[2 + 2 * mu]) / (2.0 * steps[mu]) for mu in range(3)
    ])


def weitzenbock_residual(
    data: InitialDataFamily,
    spinor: SpinorField,
    p: Point,
    variant: Union[str, KillingVariant] = KillingVariant.E0_KILLING,
    fd_step: float = 1e-3
) -> float:
    """
    |D-hat* D-hat phi - nabla-hat* nabla-hat phi - R-hat phi| at p.

    The first derivatives nabla-hat phi use the field's partials; the outer
    derivatives of both second-order operators are central differences of
    step fd_step (fd_step * max(1, r) radially), so the residual is O(fd_step^2).

    Adjoints follow from the Hermitian shift A_i = -1/2 h_ij gamma_0 gamma_j + K_i:
    nabla-hat* psi = sum_i (-nabla-bar_i psi_i + Gamma_iim psi_m + A_i psi_i) and
    D-hat* chi = D-bar chi - A_k gamma_k chi.
    """
    if fd_step <= 0:
        raise ConfigError("Weitzenbock step must be positive")
    variant = KillingVariant(variant)
    r, theta, psi, steps = _stencil(p, fd_step)
    validate_chart_arrays(r, theta)
    sample = _connection_batch(data, spinor, r, theta, psi, variant=variant)
    geom = sample.geometry
    frame0 = geom.frame[0]
    conn0 = geom.connection[0]
    shift0 = sample.shift[0]
    phi0 = sample.phi[0]
    nabla = sample.nabla

    # rough Laplacian
    dnabla = _stencil_partials(nabla, steps)
    e_nabla = np.einsum("jm,mia->jia", frame0, dnabla)
    diag_derivative = np.einsum("iia->ia", e_nabla)
    lift = 0.25 * np.einsum("ikl,klab,ib->ia", conn0, GAMMA_PAIR, nabla[0])
    rough = (-(diag_derivative + lift).sum(axis=0)
             + np.einsum("iim,ma->a", conn0, nabla[0])
             + np.einsum("iab,ib->a", shift0, nabla[0]))

    # D-hat* applied to chi = D-hat phi
    chi = np.einsum("kab,skb->sa", GAMMA[1:], nabla)
    dchi = _stencil_partials(chi, steps)
    nabla_bar_chi = (np.einsum("km,ma->ka", frame0, dchi)
                     + 0.25 * np.einsum("kij,ijab,b->ka", conn0, GAMMA_PAIR, chi[0]))
    dirac_bar_chi = np.einsum("kab,kb->a", GAMMA[1:], nabla_bar_chi)
    adjoint = dirac_bar_chi - np.einsum("kab,kbc,c->a", shift0, GAMMA[1:], chi[0])

    endo = endomorphism_from_geometry(geom, data.kappa, variant)[0]
    residual = adjoint - rough - endo @ phi0
    value = float(np.linalg.norm(residual))
    logger.debug("Weitzenbock residual %.3e at step %.1e (%s)", value, fd_step, variant.value)
    return value
