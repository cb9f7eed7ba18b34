"""
Mass-aspect integrands, sphere quadrature, extrapolation to infinity, the
energy-momentum invariants and the two Hermitian energy-momentum matrices.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from .geometry_engine import Point, SphereGrid, hyperbolic_covariant_jet, sphere_grid
from .initial_data import InitialDataFamily
from .spinor_connections import KillingParams
from .utils import ConfigError, ContractViolation, DomainError, NotConvergedError, max_abs

logger = logging.getLogger(__name__)

DEFAULT_RADII = (3.0, 4.0, 5.0, 6.0)
DEFAULT_N_THETA = 24
DEFAULT_N_PSI = 48
SIGMA_BOUNDS = (0.1, 4.0)


@dataclass(frozen=True)
class MassAspect:
    """
    Pointwise integrands on a sphere S_r.

    epsilon: energy aspect (..., 3); momentum: P[k, i] = h_ki - g_ki tr h (..., 3, 3);
    alpha: div a - d tr a (..., 3); beta: alpha_1 - tau_11 with b = -2h + kappa a.
    """
    epsilon: np.ndarray
    momentum: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def identity_residual(self) -> float:
        """max |beta - (epsilon_1 + 2 P_11)|, zero as an algebraic identity."""
        return max_abs(self.beta - (self.epsilon[..., 0] + 2.0 * self.momentum[..., 0, 0]))


def _aspect_from_sample(sample, jet, kappa: float) -> MassAspect:
    a, h = sample.a, sample.h
    g = np.eye(3) + a
    tr_a = np.einsum("...ii->...", a)
    tr_h = np.einsum("...ii->...", h)

    div_a = np.einsum("...jij->...i", jet.nabla_a)
    grad_tr_a = np.einsum("...ijj->...i", jet.nabla_a)
    alpha = div_a - grad_tr_a
    epsilon = alpha - kappa * (a[..., 0, :] - g[..., 0, :] * tr_a[..., None])
    momentum = h - g * tr_h[..., None, None]

    b = -2.0 * h + kappa * a
    tr_b = np.einsum("...ii->...", b)
    tau11 = b[..., 0, 0] - g[..., 0, 0] * tr_b
    beta = alpha[..., 0] - tau11
    return MassAspect(epsilon=epsilon, momentum=momentum, alpha=alpha, beta=beta)


def mass_aspect(data: InitialDataFamily, p: Point) -> MassAspect:
    """
    Energy and momentum aspects at p (scalar or batched).

    epsilon_i = div(a)_i - e_i(tr a) - kappa (a_1i - g_1i tr a) and
    P_ki = h_ki - g_ki tr h, all in hyperbolic-frame components.
    """
    r, theta, psi = p.arrays()
    sample = data.evaluate(r, theta, psi)
    jet = hyperbolic_covariant_jet(sample, r, theta, data.kappa)
    return _aspect_from_sample(sample, jet, data.kappa)


def _check_nu(nu: int) -> int:
    if isinstance(nu, bool) or int(nu) != nu or not 0 <= int(nu) <= 3:
        raise DomainError(f"Index nu={nu!r} not supported; use 0, 1, 2 or 3")
    return int(nu)


def sphere_measure(r: float, kappa: float) -> float:
    """e^{kappa r} sinh^2(kappa r)/kappa^2, the weight of omega_nu times the area density."""
    return float(np.exp(kappa * r) * np.sinh(kappa * r) ** 2 / kappa**2)


def sphere_integral(
    values: Union[Callable[[np.ndarray, np.ndarray], np.ndarray], np.ndarray],
    r: float,
    nu: int,
    kappa: float,
    n_theta: int = DEFAULT_N_THETA,
    n_psi: int = DEFAULT_N_PSI,
    grid: Optional[SphereGrid] = None
) -> float:
    """
    Integral of a scalar against omega_nu = n^nu e^{kappa r} over S_r.

    Args:
        values: Callable f(theta, psi) or an array sampled on the grid
        r: Geodesic radius of the sphere
        nu: Component 0..3 of omega
        kappa: Inverse curvature radius
        n_theta, n_psi: Quadrature orders (ignored when grid is given)

    Returns:
        sum over nodes of w f n^nu times e^{kappa r} sinh^2(kappa r)/kappa^2
    """
    if r <= 0:
        raise DomainError("Geodesic radius must be positive")
    nu = _check_nu(nu)
    grid = grid or sphere_grid(n_theta, n_psi)
    f = values(grid.theta, grid.psi) if callable(values) else np.asarray(values)
    f = np.broadcast_to(f, grid.shape)
    total = np.sum(grid.weights * f * grid.unit_normal(nu))
    return float(total * sphere_measure(r, kappa))


@dataclass(frozen=True)
class ExtrapolationFit:
    """Least-squares fit v(r) = limit + amplitude exp(-sigma kappa r)."""
    limit: float
    amplitude: float
    sigma: float
    residual: float
    tolerance: float
    converged: bool
    constant: bool = False

    def to_dict(self) -> Dict[str, float]:
        return {
            "limit": self.limit,
            "amplitude": self.amplitude,
            "sigma": self.sigma,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "converged": self.converged,
            "constant": self.constant,
        }


def _linear_fit(x: np.ndarray, v: np.ndarray, sigma: float):
    design = np.column_stack([np.ones_like(x), np.exp(-sigma * x)])
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    return coef, float(np.max(np.abs(design @ coef - v)))


def extrapolate_limit(
    radii: Sequence[float],
    values: Sequence[float],
    kappa: float,
    rtol: float = 1e-3,
    atol: float = 1e-9
) -> ExtrapolationFit:
    """
    Extrapolate per-radius integrals to r -> infinity.

    sigma is scanned on a grid over [0.1, 4] and refined with a bounded scalar
    minimisation; limit and amplitude are linear least squares for each sigma.
    The fit converges when its max residual is at most atol + rtol * max |v|.
    """
    x = kappa * np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ConfigError("Extrapolation needs at least three radii")
    tolerance = atol + rtol * max_abs(v)

    if np.ptp(v) <= atol:
        return ExtrapolationFit(float(np.mean(v)), 0.0, 0.0, float(np.ptp(v)), tolerance, True, True)

    grid = np.linspace(*SIGMA_BOUNDS, 40)
    scores = [_linear_fit(x, v, s)[1] for s in grid]
    best = int(np.argmin(scores))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    result = optimize.minimize_scalar(
        lambda s: _linear_fit(x, v, s)[1], bounds=(lo, hi), method="bounded", options={"xatol": 1e-6}
    )
    sigma = float(result.x) if result.fun <= scores[best] else float(grid[best])
    coef, residual = _linear_fit(x, v, sigma)
    converged = residual <= tolerance
    if not converged:
        logger.warning("Extrapolation residual %.3e exceeds tolerance %.3e", residual, tolerance)
    return ExtrapolationFit(float(coef[0]), float(coef[1]), sigma, residual, tolerance, bool(converged))


@dataclass
class EnergyMomentum:
    """
    Total energy vector E[nu], momentum table P[nu, k-1] and beta = E + P[:, 0].

    ``raw_*`` hold the per-radius integrals the limits were extrapolated from.
    """
    E: np.ndarray
    P: np.ndarray
    beta: np.ndarray
    radii: List[float]
    raw_E: np.ndarray
    raw_P: np.ndarray
    raw_beta: np.ndarray
    fits: Dict[str, ExtrapolationFit]
    kappa: float = 1.0
    not_converged: List[str] = field(init=False)

    def __post_init__(self):
        self.not_converged = sorted(name for name, fit in self.fits.items() if not fit.converged)

    @property
    def converged(self) -> bool:
        return not self.not_converged

    @property
    def status(self) -> str:
        return "converged" if self.converged else "not_converged"

    @property
    def bookkeeping_residual(self) -> float:
        """max over radii of |beta - (E + P_.1)|; beta is integrated from its own integrand."""
        return max_abs(self.raw_beta - (self.raw_E + self.raw_P[:, :, 0]))

    @property
    def limit_gap(self) -> float:
        """|beta - (E + P_.1)| between independently extrapolated limits; bounded by the fit tolerances."""
        return max_abs(self.beta - (self.E + self.P[:, 0]))

    def to_frame(self) -> pd.DataFrame:
        """Per-radius table with one column per integral, e.g. E0, P12, beta3."""
        columns: Dict[str, np.ndarray] = {}
        for nu in range(4):
            columns[f"E{nu}"] = self.raw_E[:, nu]
        for nu in range(4):
            for k in range(3):
                columns[f"P{nu}{k + 1}"] = self.raw_P[:, nu, k]
        for nu in range(4):
            columns[f"beta{nu}"] = self.raw_beta[:, nu]
        return pd.DataFrame(columns, index=pd.Index(self.radii, name="r"))


@dataclass(frozen=True)
class SphereIntegrals:
    radius: float
    E: np.ndarray
    P: np.ndarray
    beta: np.ndarray


def radius_integrals(data: InitialDataFamily, r: float, grid: SphereGrid) -> SphereIntegrals:
    """All energy, momentum and beta integrals on one sphere."""
    r_arr = np.full(grid.shape, float(r))
    sample = data.evaluate(r_arr, grid.theta, grid.psi)
    jet = hyperbolic_covariant_jet(sample, r_arr, grid.theta, data.kappa)
    aspect = _aspect_from_sample(sample, jet, data.kappa)

    measure = sphere_measure(r, data.kappa)
    normals = np.stack([grid.unit_normal(nu) for nu in range(4)])
    weighted = grid.weights * normals

    E = np.einsum("nij,ij->n", weighted, aspect.epsilon[..., 0]) * measure / (16.0 * np.pi)
    P = np.einsum("nij,ijk->nk", weighted, aspect.momentum[..., :, 0]) * measure / (8.0 * np.pi)
    beta = np.einsum("nij,ij->n", weighted, aspect.beta) * measure / (16.0 * np.pi)
    logger.debug("Sphere integrals at r=%.3f: E=%s", r, E)
    return SphereIntegrals(radius=float(r), E=E, P=P, beta=beta)


def energy_momentum(
    data: InitialDataFamily,
    radii: Optional[Sequence[float]] = None,
    n_theta: int = DEFAULT_N_THETA,
    n_psi: int = DEFAULT_N_PSI,
    rtol: float = 1e-3,
    atol: float = 1e-9,
    threads: int = 1
) -> EnergyMomentum:
    """
    Total energy-momentum of an asymptotically AdS initial data set.

    E_nu = (1/16 pi) lim int eps_1 omega_nu and P_nuk = (1/8 pi) lim int P_k1 omega_nu,
    each extrapolated from the per-radius integrals with extrapolate_limit.

    Args:
        data: Initial data family
        radii: Strictly increasing sphere radii (at least 3); default (3, 4, 5, 6)/kappa
        n_theta, n_psi: Quadrature orders
        rtol, atol: Extrapolation tolerances
        threads: Worker threads across radii

    Returns:
        EnergyMomentum with diagnostics; ``status`` flags non-convergence
    """
    if radii is None:
        radii = [r / data.kappa for r in DEFAULT_RADII]
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ConfigError("energy_momentum needs at least three radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii not increasing")
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    grid = sphere_grid(n_theta, n_psi)

    if threads == 1:
        spheres = [radius_integrals(data, r, grid) for r in radii]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            spheres = list(pool.map(lambda r: radius_integrals(data, r, grid), radii))

    raw_E = np.array([s.E for s in spheres])
    raw_P = np.array([s.P for s in spheres])
    raw_beta = np.array([s.beta for s in spheres])

    fits: Dict[str, ExtrapolationFit] = {}
    E = np.zeros(4)
    P = np.zeros((4, 3))
    beta = np.zeros(4)
    for nu in range(4):
        fits[f"E{nu}"] = extrapolate_limit(radii, raw_E[:, nu], data.kappa, rtol, atol)
        E[nu] = fits[f"E{nu}"].limit
        fits[f"beta{nu}"] = extrapolate_limit(radii, raw_beta[:, nu], data.kappa, rtol, atol)
        beta[nu] = fits[f"beta{nu}"].limit
        for k in range(3):
            name = f"P{nu}{k + 1}"
            fits[name] = extrapolate_limit(radii, raw_P[:, nu, k], data.kappa, rtol, atol)
            P[nu, k] = fits[name].limit

    em = EnergyMomentum(
        E=E, P=P, beta=beta, radii=radii,
        raw_E=raw_E, raw_P=raw_P, raw_beta=raw_beta,
        fits=fits, kappa=float(data.kappa),
    )
    if not em.converged:
        logger.warning("Energy-momentum of %s not converged: %s", data.name, em.not_converged)
    return em


class Definiteness(str, Enum):
    POSITIVE_DEFINITE = "positive_definite"
    POSITIVE_SEMIDEFINITE = "positive_semidefinite"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class Hermitian4:
    """A 4x4 Hermitian matrix with its spectral and minor analysis."""
    matrix: np.ndarray
    eigenvalues: np.ndarray
    minors: np.ndarray
    verdict: Definiteness
    tolerance: float
    cholesky_ok: bool
    negative_definite: bool

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def _classify(H: np.ndarray, tol: float) -> Definiteness:
    w = np.linalg.eigvalsh(H)
    if w[0] > tol:
        return Definiteness.POSITIVE_DEFINITE
    if w[0] >= -tol:
        return Definiteness.POSITIVE_SEMIDEFINITE
    return Definiteness.INDEFINITE


def hermitian4(matrix: np.ndarray, atol: float = 1e-12, rtol: float = 1e-10) -> Hermitian4:
    """
    Analyse a Hermitian 4x4 matrix.

    The verdict uses the smallest eigenvalue against atol + rtol * max |H|; a
    Cholesky factorisation cross-checks positive definiteness.

    Raises:
        ContractViolation: the matrix is not 4x4 Hermitian
    """
    H = np.asarray(matrix, dtype=complex)
    if H.shape != (4, 4):
        raise ContractViolation(f"Expected a 4x4 matrix, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ContractViolation("Matrix entries must be finite")
    scale = max_abs(H)
    if max_abs(H - H.conj().T) > 1e-12 * scale:
        raise ContractViolation(
            f"Matrix is not Hermitian: |H - H^dagger| = {max_abs(H - H.conj().T):.3e}"
        )
    H = 0.5 * (H + H.conj().T)
    tol = atol + rtol * scale

    eigenvalues = np.linalg.eigvalsh(H)
    minors = np.array([float(np.real(np.linalg.det(H[:k, :k]))) for k in range(1, 5)])
    verdict = _classify(H, tol)

    try:
        linalg.cholesky(H, lower=True)
        cholesky_ok = True
    except linalg.LinAlgError:
        cholesky_ok = False
    if (verdict is Definiteness.POSITIVE_DEFINITE) != cholesky_ok:
        logger.warning("Cholesky disagrees with eigenvalue verdict %s (min eigenvalue %.3e)",
                       verdict.value, eigenvalues[0])

    return Hermitian4(
        matrix=H,
        eigenvalues=eigenvalues,
        minors=minors,
        verdict=verdict,
        tolerance=float(tol),
        cholesky_ok=cholesky_ok,
        negative_definite=_classify(-H, tol) is Definiteness.POSITIVE_DEFINITE,
    )


def _require_converged(em: EnergyMomentum) -> None:
    if not em.converged:
        raise NotConvergedError(f"Energy-momentum not converged for series: {', '.join(em.not_converged)}")


def q1_matrix(em: EnergyMomentum) -> Hermitian4:
    """
    Energy-momentum matrix of the e_0-Killing theorem, built from beta = E + P_.1:

        [[b0+b3, -b1+i b2, 0, 0], [-b1-i b2, b0-b3, 0, 0],
         [0, 0, b0-b3, b1+i b2], [0, 0, b1-i b2, b0+b3]]
    """
    _require_converged(em)
    b = em.E + em.P[:, 0]
    matrix = np.array([
        [b[0] + b[3], -b[1] + 1j * b[2], 0, 0],
        [-b[1] - 1j * b[2], b[0] - b[3], 0, 0],
        [0, 0, b[0] - b[3], b[1] + 1j * b[2]],
        [0, 0, b[1] - 1j * b[2], b[0] + b[3]],
    ], dtype=complex)
    return hermitian4(matrix)


def q2_matrix(em: EnergyMomentum) -> Hermitian4:
    """Energy-momentum matrix of the imaginary Killing theorem."""
    _require_converged(em)
    E = em.E

    def P(nu: int, k: int) -> float:
        return float(em.P[nu, k - 1])

    q13 = (-P(0, 2) + P(3, 2)) - 1j * (P(0, 3) + P(3, 3))
    q14 = (P(1, 2) - P(2, 3)) - 1j * (P(2, 2) - P(1, 3))
    q23 = (-P(1, 2) + P(2, 3)) - 1j * (P(2, 2) + P(1, 3))
    q24 = (P(0, 2) + P(3, 2)) + 1j * (P(0, 3) + P(3, 3))
    matrix = np.array([
        [E[0] + E[3], E[1] - 1j * E[2], q13, q14],
        [E[1] + 1j * E[2], E[0] - E[3], q23, q24],
        [np.conj(q13), np.conj(q23), E[0] + E[3], -E[1] + 1j * E[2]],
        [np.conj(q14), np.conj(q24), -E[1] - 1j * E[2], E[0] - E[3]],
    ], dtype=complex)
    return hermitian4(matrix)


@dataclass(frozen=True)
class PositivityReport:
    analysis: Hermitian4
    margins: Dict[str, float]
    corollaries: Dict[str, bool]

    @property
    def verdict(self) -> Definiteness:
        return self.analysis.verdict


def corollary_margins(em: EnergyMomentum) -> Dict[str, float]:
    """E0 + P01 - |E + P_1| and E0 - |E| (spatial parts)."""
    beta = em.E + em.P[:, 0]
    return {
        "energy_momentum": float(beta[0] - np.linalg.norm(beta[1:])),
        "energy": float(em.E[0] - np.linalg.norm(em.E[1:])),
    }


def positivity_report(H: Union[Hermitian4, np.ndarray], em: Optional[EnergyMomentum] = None) -> PositivityReport:
    """
    Definiteness verdict of H plus, when em is given, both corollary inequalities.
    """
    analysis = H if isinstance(H, Hermitian4) else hermitian4(H)
    margins: Dict[str, float] = {}
    corollaries: Dict[str, bool] = {}
    if em is not None:
        margins = corollary_margins(em)
        tol = analysis.tolerance
        corollaries = {name: bool(value >= -tol) for name, value in margins.items()}
    return PositivityReport(analysis=analysis, margins=margins, corollaries=corollaries)


def geometric_invariant(em: EnergyMomentum, c1: float, c2: float) -> float:
    """(c1 E0 + c2 P01)^2 - sum_i (c1 Ei + c2 Pi1)^2."""
    v = c1 * em.E + c2 * em.P[:, 0]
    return float(v[0] ** 2 - np.sum(v[1:] ** 2))


def boundary_quadratic_form(em: EnergyMomentum, lam: Union[KillingParams, Sequence[complex]]) -> float:
    """
    Boundary term of the positivity argument for Killing coefficients lambda.

    b0 sum|l|^2 + b1 (-(l2* l1 + l1* l2) + (l3* l4 + l4* l3))
    + b2 (-i (l2* l1 - l1* l2) + i (l3* l4 - l4* l3)) + b3 (|l1|^2 - |l2|^2 + |l4|^2 - |l3|^2),
    which equals lambda^dagger Q1 lambda.
    """
    l = lam.vector if isinstance(lam, KillingParams) else np.asarray(lam, dtype=complex).reshape(4)
    b = em.E + em.P[:, 0]
    c = np.conj(l)
    value = (b[0] * np.sum(np.abs(l) ** 2)
             + b[1] * (-(c[1] * l[0] + c[0] * l[1]) + (c[2] * l[3] + c[3] * l[2]))
             + b[2] * (-1j * (c[1] * l[0] - c[0] * l[1]) + 1j * (c[2] * l[3] - c[3] * l[2]))
             + b[3] * (abs(l[0]) ** 2 - abs(l[1]) ** 2 + abs(l[3]) ** 2 - abs(l[2]) ** 2))
    return float(np.real(value))
