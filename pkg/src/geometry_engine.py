"""
Hyperbolic background geometry and a vectorised curvature engine for metrics
g = (delta_ij + a_ij) e^i (x) e^j given in hyperbolic-frame components.

All arrays carry an arbitrary batch shape ``...`` in front of their tensor
axes. Coordinate axes are ordered (r, theta, psi); frame axes (e_1, e_2, e_3)
are stored as 0, 1, 2.

Curvature convention: R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
and R_ijkl = <R(e_i, e_j) e_l, e_k>, so the sectional curvature is
K(e_i, e_j) = R_ijij and hyperbolic space has
R_ijkl = -kappa^2 (delta_ik delta_jl - delta_il delta_jk).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from .utils import ConfigError, DataError, DomainError, max_abs, validate_chart_arrays

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class Point:
    """A point (r, theta, psi) of the hyperboloidal polar chart; fields may be arrays."""
    r: ArrayLike
    theta: ArrayLike
    psi: ArrayLike = 0.0

    def __post_init__(self):
        validate_chart_arrays(self.r, self.theta)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        r, theta, psi = np.broadcast_arrays(
            np.asarray(self.r, dtype=float),
            np.asarray(self.theta, dtype=float),
            np.asarray(self.psi, dtype=float),
        )
        return r, theta, psi


@dataclass(frozen=True)
class FieldSample:
    """
    Two-jet of initial data at a batch of points.

    a, h: frame components (..., 3, 3)
    da, dh: coordinate partials (..., mu, i, j)
    dda: second coordinate partials (..., mu, nu, i, j)
    """
    a: np.ndarray
    da: np.ndarray
    dda: np.ndarray
    h: np.ndarray
    dh: np.ndarray

    @classmethod
    def zeros(cls, shape: Tuple[int, ...]) -> "FieldSample":
        z = np.zeros(shape + (3, 3))
        return cls(
            a=z,
            da=np.zeros(shape + (3, 3, 3)),
            dda=np.zeros(shape + (3, 3, 3, 3)),
            h=z.copy(),
            dh=np.zeros(shape + (3, 3, 3)),
        )


@dataclass(frozen=True)
class FrameTable:
    """Rows are e_i (columns d_r, d_theta, d_psi) and e^i (columns dr, dtheta, dpsi)."""
    frame: np.ndarray
    coframe: np.ndarray


@dataclass(frozen=True)
class CurvatureTensor:
    """Frame components R_ijkl of the Riemann tensor."""
    components: np.ndarray

    def scalar(self) -> np.ndarray:
        return np.einsum("...ijij->...", self.components)

    def symmetry_residuals(self) -> Dict[str, float]:
        return curvature_symmetry_residuals(self.components)


@dataclass(frozen=True)
class HDerivative:
    """Covariant derivative nabla_i h_jk of h in the g-orthonormal frame."""
    nabla: np.ndarray
    divergence: np.ndarray
    trace_gradient: np.ndarray


@dataclass(frozen=True)
class LocalGeometry:
    """Everything the spinor and mass modules need from g and h at a batch of points."""
    scales: np.ndarray
    metric: np.ndarray
    frame: np.ndarray
    dframe: np.ndarray
    christoffel: np.ndarray
    connection: np.ndarray
    riemann: np.ndarray
    h: np.ndarray
    nabla_h: np.ndarray

    @property
    def scalar_curvature(self) -> np.ndarray:
        return np.einsum("...ijij->...", self.riemann)

    @property
    def divergence_h(self) -> np.ndarray:
        return np.einsum("...jij->...i", self.nabla_h)

    @property
    def trace_gradient_h(self) -> np.ndarray:
        return np.einsum("...ijj->...i", self.nabla_h)


@dataclass(frozen=True)
class HyperbolicJet:
    """Hyperbolic-frame covariant derivatives of the family data."""
    nabla_a: np.ndarray
    nabla2_a: np.ndarray
    nabla_h: np.ndarray


def coframe_scales(
    r: np.ndarray,
    theta: np.ndarray,
    kappa: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Coordinate lengths of the hyperbolic frame and their partials.

    The hyperbolic coframe is e^mu = Ed_mu dx^mu with Ed = (1, S, S sin(theta)),
    S = sinh(kappa r)/kappa.

    Returns:
        Ed (..., 3), dEd (..., lam, mu), ddEd (..., kap, lam, mu)
    """
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    S = np.sinh(kappa * r) / kappa
    C = np.cosh(kappa * r)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    shape = np.shape(S)

    Ed = np.stack([np.ones(shape), S, S * sin_t], axis=-1)

    dEd = np.zeros(shape + (3, 3))
    dEd[..., 0, 1] = C
    dEd[..., 0, 2] = C * sin_t
    dEd[..., 1, 2] = S * cos_t

    ddEd = np.zeros(shape + (3, 3, 3))
    ddEd[..., 0, 0, 1] = kappa**2 * S
    ddEd[..., 0, 0, 2] = kappa**2 * S * sin_t
    ddEd[..., 0, 1, 2] = C * cos_t
    ddEd[..., 1, 0, 2] = C * cos_t
    ddEd[..., 1, 1, 2] = -S * sin_t
    return Ed, dEd, ddEd


def hyperbolic_frame(p: Point, kappa: float) -> FrameTable:
    """
    Coordinate coefficients of the orthonormal frame of the hyperbolic metric.

    Args:
        p: Chart point
        kappa: Inverse curvature radius

    Returns:
        FrameTable with e_2 = (kappa/sinh(kappa r)) d_theta and
        e^3 = (sinh(kappa r) sin(theta)/kappa) dpsi, and so on.
    """
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    r, theta, _ = p.arrays()
    Ed, _, _ = coframe_scales(r, theta, kappa)
    eye = np.eye(3)
    frame = eye * (1.0 / Ed)[..., None, :]
    coframe = eye * Ed[..., None, :]
    return FrameTable(frame=frame, coframe=coframe)


def _hyperbolic_connection_arrays(
    r: np.ndarray,
    theta: np.ndarray,
    kappa: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Gamma[j, k, l] = <nabla_{e_j} e_k, e_l> and its coordinate partials dGamma[mu, j, k, l]."""
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    sinh_r = np.sinh(kappa * r)
    cosh_r = np.cosh(kappa * r)
    cot_t = np.cos(theta) / np.sin(theta)
    c = kappa * cosh_r / sinh_r
    d = kappa * cot_t / sinh_r
    shape = np.shape(c)

    gam = np.zeros(shape + (3, 3, 3))
    gam[..., 1, 1, 0] = -c
    gam[..., 1, 0, 1] = c
    gam[..., 2, 2, 0] = -c
    gam[..., 2, 0, 2] = c
    gam[..., 2, 2, 1] = -d
    gam[..., 2, 1, 2] = d

    dc_dr = -kappa**2 / sinh_r**2
    dd_dr = -kappa**2 * cot_t * cosh_r / sinh_r**2
    dd_dt = -kappa / (np.sin(theta) ** 2 * sinh_r)

    dgam = np.zeros(shape + (3, 3, 3, 3))
    for mu, dc, dd in ((0, dc_dr, dd_dr), (1, 0.0, dd_dt)):
        dgam[..., mu, 1, 1, 0] = -dc
        dgam[..., mu, 1, 0, 1] = dc
        dgam[..., mu, 2, 2, 0] = -dc
        dgam[..., mu, 2, 0, 2] = dc
        dgam[..., mu, 2, 2, 1] = -dd
        dgam[..., mu, 2, 1, 2] = dd
    return gam, dgam


def hyperbolic_connection(p: Point, kappa: float) -> np.ndarray:
    """
    Levi-Civita connection coefficients of the hyperbolic metric in its frame.

    Returns:
        Array (..., 3, 3, 3) with entry [j, k, l] = <nabla_{e_j} e_k, e_l>,
        antisymmetric in (k, l).
    """
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    r, theta, _ = p.arrays()
    gam, _ = _hyperbolic_connection_arrays(r, theta, kappa)
    return gam


def _inverse_sqrt_with_derivative(
    M: np.ndarray,
    dM: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """B = M^(-1/2) for symmetric positive M, and dB[mu] from dM[mu] via the eigenbasis."""
    w, U = np.linalg.eigh(M)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise DataError(
            f"Metric is degenerate: smallest eigenvalue of I + a is {float(np.min(w)):.3e}"
        )
    sq = np.sqrt(w)
    B = np.einsum("...ik,...k,...jk->...ij", U, 1.0 / sq, U)

    dM_eig = np.einsum("...ai,...mab,...bj->...mij", U, dM, U)
    denom = (sq[..., :, None] + sq[..., None, :]) * sq[..., :, None] * sq[..., None, :]
    dB_eig = -dM_eig / denom[..., None, :, :]
    dB = np.einsum("...ia,...mab,...jb->...mij", U, dB_eig, U)
    return B, dB


def local_geometry(
    sample: FieldSample,
    r: np.ndarray,
    theta: np.ndarray,
    kappa: float
) -> LocalGeometry:
    """
    Curvature and connection data of (g, h) at a batch of points.

    Coordinate Christoffels of G_mn = Ed_m Ed_n (I + a)_mn are built from analytic
    partials, the Riemann tensor is assembled in coordinates and moved to the
    g-orthonormal frame e_i = sum_j (I + a)^(-1/2)_ij e_j.

    Args:
        sample: Two-jet of the family data at the points
        r, theta: Chart coordinates (broadcast against the sample batch shape)
        kappa: Inverse curvature radius of the background

    Returns:
        LocalGeometry for the batch
    """
    r, theta = validate_chart_arrays(r, theta)
    Ed, dEd, ddEd = coframe_scales(r, theta, kappa)
    a, da, dda = sample.a, sample.da, sample.dda
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(da)) and np.all(np.isfinite(dda))):
        raise DataError("Family returned non-finite metric data")

    M = np.eye(3) + a

    # Products Ed_m Ed_n and their partials
    E = Ed[..., :, None] * Ed[..., None, :]
    dE = (dEd[..., :, :, None] * Ed[..., None, None, :]
          + Ed[..., None, :, None] * dEd[..., :, None, :])
    ddE = (ddEd[..., :, :, :, None] * Ed[..., None, None, None, :]
           + dEd[..., None, :, :, None] * dEd[..., :, None, None, :]
           + dEd[..., :, None, :, None] * dEd[..., None, :, None, :]
           + Ed[..., None, None, :, None] * ddEd[..., :, :, None, :])

    G = E * M
    dG = dE * M[..., None, :, :] + E[..., None, :, :] * da
    ddG = (ddE * M[..., None, None, :, :]
           + dE[..., None, :, :, :] * da[..., :, None, :, :]
           + dE[..., :, None, :, :] * da[..., None, :, :, :]
           + E[..., None, None, :, :] * dda)

    Ginv = np.linalg.inv(G)

    # Christoffel symbols, first kind Gamma_{r m n} and second kind Gamma^s_{m n}
    gam1 = 0.5 * (np.einsum("...mrn->...rmn", dG)
                  + np.einsum("...nrm->...rmn", dG)
                  - dG)
    gam2 = np.einsum("...sr,...rmn->...smn", Ginv, gam1)

    dgam1 = 0.5 * (np.einsum("...kmrn->...krmn", ddG)
                   + np.einsum("...knrm->...krmn", ddG)
                   - ddG)
    dGinv = -np.einsum("...sa,...kab,...bt->...kst", Ginv, dG, Ginv)
    dgam2 = (np.einsum("...ksr,...rmn->...ksmn", dGinv, gam1)
             + np.einsum("...sr,...krmn->...ksmn", Ginv, dgam1))

    # R^r_{s m n} = d_m Gamma^r_{n s} - d_n Gamma^r_{m s} + Gamma^r_{m l} Gamma^l_{n s} - Gamma^r_{n l} Gamma^l_{m s}
    riem_up = (np.einsum("...mrns->...rsmn", dgam2)
               - np.einsum("...nrms->...rsmn", dgam2)
               + np.einsum("...rml,...lns->...rsmn", gam2, gam2)
               - np.einsum("...rnl,...lms->...rsmn", gam2, gam2))
    riem_low = np.einsum("...ar,...rsmn->...asmn", G, riem_up)

    B, dB = _inverse_sqrt_with_derivative(M, da)
    F = B / Ed[..., None, :]
    dF = dB / Ed[..., None, None, :] - B[..., None, :, :] * dEd[..., :, None, :] / (Ed**2)[..., None, None, :]

    riemann = np.einsum(
        "...rsmn,...kr,...ls,...im,...jn->...ijkl",
        riem_low, F, F, F, F, optimize=True
    )

    # Frame connection Gamma_{ijm} = g(nabla_{e_i} e_j, e_m)
    V = (np.einsum("...ia,...ajm->...ijm", F, dF)
         + np.einsum("...ia,...mal,...jl->...ijm", F, gam2, F, optimize=True))
    connection = np.einsum("...ijn,...nk,...mk->...ijm", V, G, F, optimize=True)

    # h as a coordinate tensor, its covariant derivative, then back to the frame
    H = E * sample.h
    dH = dE * sample.h[..., None, :, :] + E[..., None, :, :] * sample.dh
    nabla_H = (dH
               - np.einsum("...slm,...sn->...lmn", gam2, H)
               - np.einsum("...sln,...ms->...lmn", gam2, H))
    h_frame = np.einsum("...mn,...jm,...kn->...jk", H, F, F)
    nabla_h = np.einsum("...lmn,...il,...jm,...kn->...ijk", nabla_H, F, F, F, optimize=True)

    return LocalGeometry(
        scales=Ed,
        metric=M,
        frame=F,
        dframe=dF,
        christoffel=gam2,
        connection=connection,
        riemann=riemann,
        h=h_frame,
        nabla_h=nabla_h,
    )


def hyperbolic_covariant_jet(
    sample: FieldSample,
    r: np.ndarray,
    theta: np.ndarray,
    kappa: float
) -> HyperbolicJet:
    """
    Covariant derivatives of a and h with respect to the hyperbolic connection.

    Returns:
        HyperbolicJet with nabla_a[k, i, j] = (nabla_{e_k} a)_ij,
        nabla2_a[l, k, i, j] = (nabla^2_{e_l, e_k} a)_ij and nabla_h[k, i, j].
    """
    Ed, dEd, _ = coframe_scales(r, theta, kappa)
    gam, dgam = _hyperbolic_connection_arrays(r, theta, kappa)
    a, da, dda = sample.a, sample.da, sample.dda

    def first(t: np.ndarray, dt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        et = dt / Ed[..., :, None, None]
        nab = (et
               - np.einsum("...kil,...lj->...kij", gam, t)
               - np.einsum("...kjl,...il->...kij", gam, t))
        return et, nab

    ea, nabla_a = first(a, da)
    _, nabla_h = first(sample.h, sample.dh)

    eea = (dda / Ed[..., None, :, None, None]
           - da[..., None, :, :, :] * dEd[..., :, :, None, None] / (Ed**2)[..., None, :, None, None])
    eea = eea / Ed[..., :, None, None, None]
    egam = dgam / Ed[..., :, None, None, None]

    e_nabla_a = (eea
                 - np.einsum("...lkin,...nj->...lkij", egam, a)
                 - np.einsum("...kin,...lnj->...lkij", gam, ea)
                 - np.einsum("...lkjn,...in->...lkij", egam, a)
                 - np.einsum("...kjn,...lin->...lkij", gam, ea))
    nabla2_a = (e_nabla_a
                - np.einsum("...lkm,...mij->...lkij", gam, nabla_a)
                - np.einsum("...lim,...kmj->...lkij", gam, nabla_a)
                - np.einsum("...ljm,...kim->...lkij", gam, nabla_a))
    return HyperbolicJet(nabla_a=nabla_a, nabla2_a=nabla2_a, nabla_h=nabla_h)


def geometry_at(data: Any, p: Point, fd_step: Optional[float] = None) -> LocalGeometry:
    """Evaluate a family at p and build its LocalGeometry."""
    r, theta, psi = p.arrays()
    sample = data.evaluate(r, theta, psi, fd_step=fd_step)
    return local_geometry(sample, r, theta, data.kappa)


def riemann(data: Any, p: Point, fd_step: Optional[float] = None) -> CurvatureTensor:
    """
    Riemann tensor of g = (delta + a) e^i e^j in the g-orthonormal frame.

    Args:
        data: InitialDataFamily supplying a with two derivatives
        p: Chart point (scalar or batched)
        fd_step: Force finite-difference derivatives with this step

    Returns:
        CurvatureTensor with K(e_i, e_j) = R_ijij
    """
    return CurvatureTensor(geometry_at(data, p, fd_step).riemann)


def scalar_curvature(data: Any, p: Point, fd_step: Optional[float] = None) -> np.ndarray:
    """Double trace sum_ij R_ijij; -6 kappa^2 on hyperbolic space."""
    return riemann(data, p, fd_step).scalar()


def covariant_derivative_h(data: Any, p: Point, fd_step: Optional[float] = None) -> HDerivative:
    """
    Levi-Civita derivative of h with respect to g, in the g-orthonormal frame.

    Returns:
        HDerivative with nabla[i, j, k] = nabla_i h_jk, divergence_i = nabla^j h_ij and
        trace_gradient_i = nabla_i tr h
    """
    geom = geometry_at(data, p, fd_step)
    return HDerivative(
        nabla=geom.nabla_h,
        divergence=geom.divergence_h,
        trace_gradient=geom.trace_gradient_h,
    )


def constant_curvature_tensor(kappa: float) -> np.ndarray:
    """R_ijkl = -kappa^2 (delta_ik delta_jl - delta_il delta_jk)."""
    d = np.eye(3)
    return -kappa**2 * (np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d))


def curvature_symmetry_residuals(R: np.ndarray) -> Dict[str, float]:
    """
    Algebraic symmetry and first Bianchi residuals, relative to max |R|.

    Returns:
        Dict with antisymmetry_ij, antisymmetry_kl, pair_symmetry and bianchi
    """
    scale = max(max_abs(R), 1e-300)
    bianchi = (R
               + np.einsum("...jlki->...ijkl", R)
               + np.einsum("...likj->...ijkl", R))
    return {
        "antisymmetry_ij": max_abs(R + np.einsum("...jikl->...ijkl", R)) / scale,
        "antisymmetry_kl": max_abs(R + np.einsum("...ijlk->...ijkl", R)) / scale,
        "pair_symmetry": max_abs(R - np.einsum("...klij->...ijkl", R)) / scale,
        "bianchi": max_abs(bianchi) / scale,
    }


@dataclass(frozen=True)
class SphereGrid:
    """Product grid on the unit sphere: Gauss-Legendre in cos(theta), uniform in psi."""
    theta: np.ndarray
    psi: np.ndarray
    weights: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.theta.shape

    def unit_normal(self, nu: int) -> np.ndarray:
        """n^nu on the grid: n^0 = 1 and (n^1, n^2, n^3) the Cartesian direction."""
        if nu == 0:
            return np.ones(self.shape)
        if nu == 1:
            return np.sin(self.theta) * np.cos(self.psi)
        if nu == 2:
            return np.sin(self.theta) * np.sin(self.psi)
        if nu == 3:
            return np.cos(self.theta)
        raise DomainError(f"Index nu={nu!r} not supported; use 0, 1, 2 or 3")


@lru_cache(maxsize=32)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def sphere_grid(n_theta: int, n_psi: int) -> SphereGrid:
    """
    Quadrature grid for integrals against sin(theta) dtheta dpsi.

    Nodes never touch the poles, so frame-based evaluations stay valid.

    Args:
        n_theta: Gauss-Legendre order in cos(theta)
        n_psi: Number of uniform trapezoid points in psi
    """
    if int(n_theta) != n_theta or int(n_psi) != n_psi or n_theta <= 0 or n_psi <= 0:
        raise ConfigError(f"Quadrature orders must be positive integers, got ({n_theta}, {n_psi})")
    x, wx = _gauss_legendre(int(n_theta))
    psi = 2.0 * np.pi * np.arange(int(n_psi)) / n_psi
    theta_grid, psi_grid = np.meshgrid(np.arccos(x), psi, indexing="ij")
    weights = np.outer(wx, np.full(int(n_psi), 2.0 * np.pi / n_psi))
    return SphereGrid(theta=theta_grid, psi=psi_grid, weights=weights)
