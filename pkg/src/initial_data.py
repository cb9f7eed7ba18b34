"""
Built-in asymptotically AdS initial-data families, decay validation,
constraint densities and rigidity residuals.

Family data are hyperbolic-frame components a_ij = g(e_i, e_j) - delta_ij and
h_ij = h(e_i, e_j). Each family evaluates a two-jet (values plus coordinate
partials) on arrays of chart points.
"""

import logging
import warnings
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable, ClassVar, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from .clifford_spinor import KillingVariant
from .geometry_engine import (
    FieldSample,
    LocalGeometry,
    Point,
    geometry_at,
    hyperbolic_covariant_jet,
    sphere_grid,
)
from .utils import ConfigError, DataError, DomainError, max_abs, validate_chart_arrays

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-4
DECAY_GROWTH_TOLERANCE = 0.1
MIN_DECAY_RATE = 1.5


def finite_difference_jet(
    fields: Callable[[np.ndarray, np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
    r: np.ndarray,
    theta: np.ndarray,
    psi: np.ndarray,
    step: float = DEFAULT_FD_STEP
) -> FieldSample:
    """
    Centred second-order finite differences of (a, h).

    The radial step is step * max(1, r); the angular steps are step.

    Args:
        fields: Callable returning (a, h) frame components at chart arrays
        r, theta, psi: Chart arrays of a common shape
        step: Base finite-difference step

    Returns:
        FieldSample with first and second partials of a and first partials of h
    """
    if step <= 0:
        raise ConfigError("Finite-difference step must be positive")
    coords = [np.asarray(c, dtype=float) for c in np.broadcast_arrays(r, theta, psi)]
    steps = [step * np.maximum(1.0, coords[0]), np.full(coords[0].shape, step), np.full(coords[0].shape, step)]

    def shifted(offsets: Dict[int, float]) -> Tuple[np.ndarray, np.ndarray]:
        moved = [c.copy() for c in coords]
        for mu, sign in offsets.items():
            moved[mu] = moved[mu] + sign * steps[mu]
        return fields(*moved)

    a0, h0 = fields(*coords)
    shape = a0.shape[:-2]
    da = np.zeros(shape + (3, 3, 3))
    dh = np.zeros(shape + (3, 3, 3))
    dda = np.zeros(shape + (3, 3, 3, 3))

    for mu in range(3):
        hm = steps[mu][..., None, None]
        a_plus, h_plus = shifted({mu: 1.0})
        a_minus, h_minus = shifted({mu: -1.0})
        da[..., mu, :, :] = (a_plus - a_minus) / (2.0 * hm)
        dh[..., mu, :, :] = (h_plus - h_minus) / (2.0 * hm)
        dda[..., mu, mu, :, :] = (a_plus - 2.0 * a0 + a_minus) / hm**2

    for mu in range(3):
        for nu in range(mu + 1, 3):
            hmn = (steps[mu] * steps[nu])[..., None, None]
            a_pp, _ = shifted({mu: 1.0, nu: 1.0})
            a_pm, _ = shifted({mu: 1.0, nu: -1.0})
            a_mp, _ = shifted({mu: -1.0, nu: 1.0})
            a_mm, _ = shifted({mu: -1.0, nu: -1.0})
            mixed = (a_pp - a_pm - a_mp + a_mm) / (4.0 * hmn)
            dda[..., mu, nu, :, :] = mixed
            dda[..., nu, mu, :, :] = mixed

    return FieldSample(a=a0, da=da, dda=dda, h=h0, dh=dh)


class InitialDataFamily(ABC):
    """
    An asymptotically AdS initial data set (M, g, h) on the hyperboloidal chart.

    Subclasses provide ``fields`` and, when available, an analytic two-jet.
    """

    name: ClassVar[str] = "abstract"
    kappa: float
    tau: float

    @abstractmethod
    def fields(self, r: np.ndarray, theta: np.ndarray, psi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Frame components (a, h) at chart arrays."""

    def analytic_jet(self, r: np.ndarray, theta: np.ndarray, psi: np.ndarray) -> Optional[FieldSample]:
        return None

    def check_domain(self, r: np.ndarray) -> None:
        return None

    @property
    def params(self) -> Dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if k != "kappa"}

    def evaluate(
        self,
        r: np.ndarray,
        theta: np.ndarray,
        psi: np.ndarray,
        fd_step: Optional[float] = None
    ) -> FieldSample:
        """
        Two-jet of the family at chart arrays.

        Args:
            r, theta, psi: Chart coordinates, broadcast together
            fd_step: Force finite differences with this step; otherwise analytic
                derivatives are used when the family provides them

        Returns:
            FieldSample
        """
        r, theta, psi = np.broadcast_arrays(
            np.asarray(r, dtype=float), np.asarray(theta, dtype=float), np.asarray(psi, dtype=float)
        )
        validate_chart_arrays(r, theta)
        self.check_domain(r)
        sample = None if fd_step is not None else self.analytic_jet(r, theta, psi)
        if sample is None:
            sample = finite_difference_jet(self.fields, r, theta, psi, fd_step or DEFAULT_FD_STEP)
        if not all(np.all(np.isfinite(t)) for t in (sample.a, sample.da, sample.dda, sample.h, sample.dh)):
            raise DataError(f"Family '{self.name}' produced non-finite values")
        return sample


@dataclass(frozen=True)
class AdsFamily(InitialDataFamily):
    """The t = 0 slice of AdS: exact hyperbolic space with h = 0."""
    name: ClassVar[str] = "ads"
    kappa: float = 1.0
    tau: float = 3.0

    def fields(self, r, theta, psi):
        shape = np.broadcast(r, theta, psi).shape
        return np.zeros(shape + (3, 3)), np.zeros(shape + (3, 3))

    def analytic_jet(self, r, theta, psi):
        return FieldSample.zeros(np.broadcast(r, theta, psi).shape)


def kottler_horizon(mass: float, kappa: float) -> float:
    """Outer root of kappa^2 r^3 + r - 2m = 0 (0 when m = 0)."""
    if mass <= 0:
        return 0.0
    return float(optimize.brentq(lambda x: kappa**2 * x**3 + x - 2.0 * mass, 0.0, 2.0 * mass, xtol=1e-15))


def _kottler_offset(rhat: float, mass: float, kappa: float) -> float:
    """
    I(rhat) = integral over (rhat, inf) of (V^-1/2 - W^-1/2), with
    V = 1 - 2m/x + kappa^2 x^2 and W = 1 + kappa^2 x^2, in the variable y = 1/x.
    """
    if mass == 0:
        return 0.0

    def integrand(y: float) -> float:
        v = np.sqrt(max(kappa**2 + y**2 - 2.0 * mass * y**3, 0.0))
        w = np.sqrt(kappa**2 + y**2)
        return 2.0 * mass * y**2 / (v * w * (v + w))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(integrand, 0.0, 1.0 / rhat, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(value)


def kottler_geodesic_radius(rhat: float, mass: float, kappa: float) -> float:
    """Geodesic radius s of the areal radius rhat, normalised so that s ~ asinh(kappa rhat)/kappa at infinity."""
    return float(np.arcsinh(kappa * rhat) / kappa - _kottler_offset(rhat, mass, kappa))


@lru_cache(maxsize=4096)
def kottler_areal_radius(s: float, mass: float, kappa: float) -> float:
    """Invert kottler_geodesic_radius by bracketing root search."""
    r_h = kottler_horizon(mass, kappa)
    if mass == 0:
        return float(np.sinh(kappa * s) / kappa)
    s_min = kottler_geodesic_radius(r_h, mass, kappa)
    if s <= s_min:
        raise DomainError(
            f"Geodesic radius {s:.6g} lies inside the Kottler horizon (chart starts at s = {s_min:.6g})"
        )

    def residual(x: float) -> float:
        return kottler_geodesic_radius(x, mass, kappa) - s

    hi = max(2.0 * r_h, 2.0 * np.sinh(kappa * s) / kappa + 1.0)
    while residual(hi) < 0:
        hi *= 2.0
    return float(optimize.brentq(residual, r_h, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))


@lru_cache(maxsize=4096)
def kottler_profile(s: float, mass: float, kappa: float) -> Tuple[float, float, float]:
    """
    A = kappa^2 rhat^2 / sinh^2(kappa s) - 1 and its first two s-derivatives.

    With u = kappa I(rhat) one has kappa rhat = sinh(kappa s + u), which keeps A
    accurate far out where it decays like exp(-3 kappa s).
    """
    if mass == 0:
        return 0.0, 0.0, 0.0
    rhat = kottler_areal_radius(s, mass, kappa)
    u = kappa * _kottler_offset(rhat, mass, kappa)
    x = kappa * s

    V = 1.0 - 2.0 * mass / rhat + kappa**2 * rhat**2
    W = 1.0 + kappa**2 * rhat**2
    sqV, sqW = np.sqrt(V), np.sqrt(W)
    du = -kappa * (2.0 * mass / rhat) / (sqW * (sqW + sqV))
    ddu = kappa * (mass / rhat**2 + 3.0 * mass * kappa**2) / W**1.5

    sh, ch = np.sinh(x), np.cosh(x)
    rho = 2.0 * np.sinh(0.5 * u) ** 2 + (ch / sh) * np.sinh(u)
    R = 1.0 + rho
    A = rho * (2.0 + rho)

    N = -kappa * np.sinh(u) + du * np.cosh(x + u) * sh
    dN = (-kappa * np.cosh(u) * du
          + ddu * np.cosh(x + u) * sh
          + du * (np.sinh(x + u) * (kappa + du) * sh + kappa * np.cosh(x + u) * ch))
    dR = N / sh**2
    ddR = dN / sh**2 - 2.0 * kappa * N * ch / sh**3

    return float(A), float(2.0 * R * dR), float(2.0 * (dR**2 + R * ddR))


_TANGENTIAL = np.diag([0.0, 1.0, 1.0])


@dataclass(frozen=True)
class KottlerFamily(InitialDataFamily):
    """
    Time-symmetric slice of Schwarzschild-AdS written in the geodesic
    hyperboloidal chart: a = A(r) diag(0, 1, 1), h = 0.
    """
    name: ClassVar[str] = "kottler"
    mass: float = 1.0
    kappa: float = 1.0
    tau: float = 3.0

    def __post_init__(self):
        if self.mass < 0:
            raise DomainError("Kottler mass must be nonnegative")
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")

    def check_domain(self, r):
        r_min = float(np.min(r))
        if self.mass > 0:
            kottler_areal_radius(r_min, float(self.mass), float(self.kappa))

    def _profiles(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        values, inverse = np.unique(r, return_inverse=True)
        table = np.array([kottler_profile(float(s), float(self.mass), float(self.kappa)) for s in values])
        table = table.reshape(-1, 3)[inverse].reshape(np.shape(r) + (3,))
        return table[..., 0], table[..., 1], table[..., 2]

    def fields(self, r, theta, psi):
        r = np.broadcast_arrays(r, theta, psi)[0]
        A, _, _ = self._profiles(r)
        a = A[..., None, None] * _TANGENTIAL
        return a, np.zeros_like(a)

    def analytic_jet(self, r, theta, psi):
        A, dA, ddA = self._profiles(r)
        sample = FieldSample.zeros(np.shape(r))
        sample.a[...] = A[..., None, None] * _TANGENTIAL
        sample.da[..., 0, :, :] = dA[..., None, None] * _TANGENTIAL
        sample.dda[..., 0, 0, :, :] = ddA[..., None, None] * _TANGENTIAL
        return sample


def _angular_jet(profile: str, theta: np.ndarray, psi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angular factor Y, its partials dY[mu] and ddY[mu, nu] (radial slots zero)."""
    theta, psi = np.broadcast_arrays(theta, psi)
    shape = theta.shape
    Y = np.ones(shape)
    dY = np.zeros(shape + (3,))
    ddY = np.zeros(shape + (3, 3))
    st, ct = np.sin(theta), np.cos(theta)
    sp_, cp = np.sin(psi), np.cos(psi)
    if profile == "uniform":
        pass
    elif profile == "cos_theta":
        Y = ct
        dY[..., 1] = -st
        ddY[..., 1, 1] = -ct
    elif profile == "sin_theta_cos_psi":
        Y = st * cp
        dY[..., 1] = ct * cp
        dY[..., 2] = -st * sp_
        ddY[..., 1, 1] = -st * cp
        ddY[..., 2, 2] = -st * cp
        ddY[..., 1, 2] = -ct * sp_
        ddY[..., 2, 1] = -ct * sp_
    else:
        raise ConfigError(f"Angular profile '{profile}' not supported")
    return Y, dY, ddY


# mode name -> (constant frame matrix, angular profile)
PERTURBATION_MODES = {
    "tangential": (_TANGENTIAL, "uniform"),
    "radial": (np.diag([1.0, 0.0, 0.0]), "uniform"),
    "isotropic": (np.eye(3), "uniform"),
    "dipole": (_TANGENTIAL, "cos_theta"),
    "dipole_x": (_TANGENTIAL, "sin_theta_cos_psi"),
}

H_PROFILES = {
    "none": (np.zeros((3, 3)), "uniform"),
    "isotropic": (np.eye(3), "uniform"),
    "radial": (np.diag([1.0, 0.0, 0.0]), "uniform"),
    "dipole": (np.eye(3), "cos_theta"),
}


@dataclass(frozen=True)
class PerturbationFamily(InitialDataFamily):
    """
    Synthetic data a = epsilon exp(-rate kappa r) q(theta, psi) and optionally
    h = eta exp(-rate kappa r) s(theta, psi), with analytic derivatives.

    ``rate`` defaults to tau; setting it below tau injects data that decay more
    slowly than declared.
    """
    name: ClassVar[str] = "perturbation"
    epsilon: float = 0.01
    tau: float = 3.0
    mode: str = "tangential"
    kappa: float = 1.0
    h_profile: str = "none"
    eta: float = 0.0
    rate: Optional[float] = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")
        if self.tau <= MIN_DECAY_RATE:
            raise DomainError(f"Decay rate tau must exceed 3/2, got {self.tau}")
        if self.mode not in PERTURBATION_MODES:
            raise ConfigError(f"Perturbation mode '{self.mode}' not supported; choose from {sorted(PERTURBATION_MODES)}")
        if self.h_profile not in H_PROFILES:
            raise ConfigError(f"h profile '{self.h_profile}' not supported; choose from {sorted(H_PROFILES)}")
        if abs(self.epsilon) >= 1.0:
            raise DataError("Perturbation amplitude |epsilon| must be below 1 to keep g positive definite")
        if self.rate is not None and self.rate <= 0:
            raise DomainError("Injected decay rate must be positive")

    @property
    def decay_rate(self) -> float:
        return float(self.tau if self.rate is None else self.rate)

    def _scalar_jet(self, profile: str, r, theta, psi):
        k = self.decay_rate * self.kappa
        f = np.exp(-k * r)
        Y, dY, ddY = _angular_jet(profile, theta, psi)
        df = np.zeros(np.shape(f) + (3,))
        df[..., 0] = -k
        # s = f Y; partials of f are -k f (radial only)
        s = f * Y
        ds = f[..., None] * (dY + df * Y[..., None])
        dds = f[..., None, None] * (
            ddY
            + df[..., :, None] * dY[..., None, :]
            + dY[..., :, None] * df[..., None, :]
            + df[..., :, None] * df[..., None, :] * Y[..., None, None]
        )
        return s, ds, dds

    def fields(self, r, theta, psi):
        sample = self.analytic_jet(*np.broadcast_arrays(r, theta, psi))
        return sample.a, sample.h

    def analytic_jet(self, r, theta, psi):
        r, theta, psi = np.broadcast_arrays(r, theta, psi)
        q, q_profile = PERTURBATION_MODES[self.mode]
        s_mat, h_prof = H_PROFILES[self.h_profile]

        s, ds, dds = self._scalar_jet(q_profile, r, theta, psi)
        a = self.epsilon * s[..., None, None] * q
        da = self.epsilon * ds[..., :, None, None] * q
        dda = self.epsilon * dds[..., :, :, None, None] * q

        t, dt, _ = self._scalar_jet(h_prof, r, theta, psi)
        h = self.eta * t[..., None, None] * s_mat
        dh = self.eta * dt[..., :, None, None] * s_mat
        return FieldSample(a=a, da=da, dda=dda, h=h, dh=dh)


def family_ads(kappa: float = 1.0) -> AdsFamily:
    """Exact AdS slice (hyperbolic space, h = 0)."""
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    return AdsFamily(kappa=float(kappa))


def family_kottler(mass: float, kappa: float = 1.0) -> KottlerFamily:
    """Time-symmetric Schwarzschild-AdS slice of mass parameter m, decay rate 3."""
    return KottlerFamily(mass=float(mass), kappa=float(kappa))


def family_perturbation(
    epsilon: float,
    tau: float = 3.0,
    mode: str = "tangential",
    kappa: float = 1.0,
    h_profile: str = "none",
    eta: float = 0.0,
    rate: Optional[float] = None
) -> PerturbationFamily:
    """Synthetic perturbation of hyperbolic space; see PerturbationFamily."""
    return PerturbationFamily(
        epsilon=float(epsilon), tau=float(tau), mode=mode, kappa=float(kappa),
        h_profile=h_profile, eta=float(eta), rate=None if rate is None else float(rate),
    )


FAMILY_REGISTRY: Dict[str, Dict[str, Any]] = {
    "ads": {
        "description": "Exact AdS slice: hyperbolic space with h = 0",
        "factory": AdsFamily,
        "parameters": {
            "tau": {"type": "float", "default": 3.0, "doc": "declared decay rate (> 3/2)"},
        },
    },
    "kottler": {
        "description": "Time-symmetric Schwarzschild-AdS slice in the geodesic chart",
        "factory": KottlerFamily,
        "parameters": {
            "mass": {"type": "float", "default": 1.0, "doc": "mass parameter m >= 0"},
            "tau": {"type": "float", "default": 3.0, "doc": "declared decay rate (> 3/2)"},
        },
    },
    "perturbation": {
        "description": "Synthetic a = eps exp(-rate kappa r) q, optional h profile",
        "factory": PerturbationFamily,
        "parameters": {
            "epsilon": {"type": "float", "default": 0.01, "doc": "amplitude of a, |eps| < 1"},
            "tau": {"type": "float", "default": 3.0, "doc": "declared decay rate (> 3/2)"},
            "mode": {"type": "str", "default": "tangential", "doc": "one of " + ", ".join(sorted(PERTURBATION_MODES))},
            "h_profile": {"type": "str", "default": "none", "doc": "one of " + ", ".join(sorted(H_PROFILES))},
            "eta": {"type": "float", "default": 0.0, "doc": "amplitude of h"},
            "rate": {"type": "float", "default": None, "doc": "actual decay rate, defaults to tau"},
        },
    },
}


def list_families() -> pd.DataFrame:
    """Registry as a table: family, parameter, type, default, description."""
    rows = []
    for fam_name, entry in FAMILY_REGISTRY.items():
        for param, schema in entry["parameters"].items():
            rows.append({
                "family": fam_name,
                "parameter": param,
                "type": schema["type"],
                "default": schema["default"],
                "description": schema["doc"],
            })
    return pd.DataFrame(rows, columns=["family", "parameter", "type", "default", "description"])


def build_family(name: str, kappa: float, params: Optional[Dict[str, Any]] = None) -> InitialDataFamily:
    """
    Construct a registered family from a parameter map.

    Raises:
        DataError: unknown family name
        ConfigError: unknown parameter or wrongly typed value
    """
    if name not in FAMILY_REGISTRY:
        raise DataError(f"Family '{name}' not found; registered families: {sorted(FAMILY_REGISTRY)}")
    schema = FAMILY_REGISTRY[name]["parameters"]
    params = dict(params or {})
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ConfigError(f"Unknown parameter '{unknown[0]}' for family '{name}'")
    kwargs: Dict[str, Any] = {}
    for key, value in params.items():
        expected = schema[key]["type"]
        if expected == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"Parameter '{key}' must be a number")
            value = float(value)
        elif not isinstance(value, str):
            raise ConfigError(f"Parameter '{key}' must be a string")
        kwargs[key] = value
    return FAMILY_REGISTRY[name]["factory"](kappa=float(kappa), **kwargs)


@dataclass
class DecayReport:
    """Sampled sup |Q| exp(tau kappa r) per radius for each decay-controlled quantity."""
    family: str
    tau: float
    radii: List[float]
    sups: Dict[str, List[float]]
    slopes: Dict[str, float]
    bounded: Dict[str, bool]
    monotone: Dict[str, bool]
    tau_ok: bool
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.tau_ok and all(self.bounded.values()))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.sups, index=pd.Index(self.radii, name="r"))
        return frame


DECAY_QUANTITIES = ("a", "nabla_a", "nabla2_a", "h", "nabla_h")


def validate_decay(
    data: InitialDataFamily,
    radii: Sequence[float],
    n_theta: int = 32,
    n_psi: int = 64,
    growth_tolerance: float = DECAY_GROWTH_TOLERANCE
) -> DecayReport:
    """
    Sampled check of the asymptotic decay conditions at the declared tau.

    A quantity is bounded when the least-squares slope of log(sup |Q| e^{tau kappa r})
    against kappa r does not exceed ``growth_tolerance``; identically zero
    quantities pass.

    Args:
        data: Family to check
        radii: Increasing sample radii
        n_theta, n_psi: Angular sampling per sphere

    Returns:
        DecayReport (report only, never raises on failure)
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii not increasing")
    grid = sphere_grid(n_theta, n_psi)
    kappa, tau = data.kappa, data.tau

    sups: Dict[str, List[float]] = {q: [] for q in DECAY_QUANTITIES}
    for r in radii:
        r_arr = np.full(grid.shape, r)
        sample = data.evaluate(r_arr, grid.theta, grid.psi)
        jet = hyperbolic_covariant_jet(sample, r_arr, grid.theta, kappa)
        weight = np.exp(tau * kappa * r)
        for name, values in (("a", sample.a), ("nabla_a", jet.nabla_a), ("nabla2_a", jet.nabla2_a),
                             ("h", sample.h), ("nabla_h", jet.nabla_h)):
            sups[name].append(max_abs(values) * weight)

    slopes, bounded, monotone = {}, {}, {}
    x = kappa * np.asarray(radii)
    for name, values in sups.items():
        values_arr = np.asarray(values)
        monotone[name] = bool(np.all(np.diff(values_arr) <= 1e-12 * max(max_abs(values_arr), 1.0)))
        if np.all(values_arr == 0.0) or len(radii) < 2:
            slopes[name] = 0.0
            bounded[name] = True
            continue
        logs = np.log(np.maximum(values_arr, np.finfo(float).tiny))
        slopes[name] = float(np.polyfit(x, logs, 1)[0])
        bounded[name] = slopes[name] <= growth_tolerance

    report = DecayReport(
        family=data.name, tau=float(tau), radii=radii, sups=sups,
        slopes=slopes, bounded=bounded, monotone=monotone, tau_ok=bool(tau > MIN_DECAY_RATE),
    )
    if not report.passed:
        logger.warning("Decay validation failed for %s: slopes %s", data.name, slopes)
    return report


@dataclass(frozen=True)
class ConstraintDensities:
    """
    Energy and momentum densities of the two dominant energy conditions.

    mu, omega: modified condition with p = kappa g - h
    rho, J: standard condition with the 3 kappa^2 vacuum-energy shift
    """
    mu: np.ndarray
    omega: np.ndarray
    margin: np.ndarray
    rho: np.ndarray
    J: np.ndarray
    margin_standard: np.ndarray


def constraint_densities_from_geometry(geom: LocalGeometry, kappa: float) -> ConstraintDensities:
    """Densities from a precomputed LocalGeometry (g-orthonormal frame)."""
    h = geom.h
    scal = geom.scalar_curvature
    p = kappa * np.eye(3) - h
    tr_p = np.einsum("...ii->...", p)
    mu = 0.5 * (scal + tr_p**2 - np.einsum("...ij,...ij->...", p, p))
    # kappa g is parallel, so only h contributes to the momentum density
    omega = -(geom.divergence_h - geom.trace_gradient_h)

    tr_h = np.einsum("...ii->...", h)
    rho = 0.5 * (scal + tr_h**2 - np.einsum("...ij,...ij->...", h, h)) + 3.0 * kappa**2
    J = omega
    return ConstraintDensities(
        mu=mu,
        omega=omega,
        margin=mu - np.linalg.norm(omega, axis=-1),
        rho=rho,
        J=J,
        margin_standard=rho - np.linalg.norm(J, axis=-1),
    )


def constraint_densities(data: InitialDataFamily, p: Point) -> ConstraintDensities:
    """
    Modified and standard dominant-energy densities at p.

    mu = 1/2 (Scal + (tr p)^2 - |p|^2) and omega_j = nabla^i p_ji - nabla_j tr p with
    p_ij = kappa g_ij - h_ij; rho = 1/2 (Scal + (tr h)^2 - |h|^2) + 3 kappa^2, J = omega.
    """
    return constraint_densities_from_geometry(geometry_at(data, p), data.kappa)


def energy_identity_residual(scal: np.ndarray, h: np.ndarray, kappa: float) -> np.ndarray:
    """
    2 mu - (Scal + (tr h)^2 - |h|^2 + 6 kappa^2 - 4 kappa tr h), which vanishes identically.
    """
    p = kappa * np.eye(3) - h
    two_mu = scal + np.einsum("...ii->...", p) ** 2 - np.einsum("...ij,...ij->...", p, p)
    tr_h = np.einsum("...ii->...", h)
    expanded = scal + tr_h**2 - np.einsum("...ij,...ij->...", h, h) + 6.0 * kappa**2 - 4.0 * kappa * tr_h
    return two_mu - expanded


@dataclass(frozen=True)
class RigidityResiduals:
    variant: KillingVariant
    res_gauss: float
    res_codazzi: float


def rigidity_from_geometry(
    geom: LocalGeometry,
    kappa: float,
    variant: Union[str, KillingVariant]
) -> RigidityResiduals:
    """Max-norm residuals of the Gauss and Codazzi equations of the AdS embedding."""
    variant = KillingVariant(variant)
    d = np.eye(3)
    R = geom.riemann
    h = geom.h
    if variant is KillingVariant.E0_KILLING:
        ht = -h + kappa * d
        gauss = (R + np.einsum("...ik,...jl->...ijkl", ht, ht)
                 - np.einsum("...il,...jk->...ijkl", ht, ht))
        # nabla(kappa delta) = 0, so the Codazzi tensor of h~ is minus that of h
        nabla = -geom.nabla_h
    else:
        gauss = (R
                 + kappa**2 * (np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d))
                 - np.einsum("...il,...jk->...ijkl", h, h)
                 + np.einsum("...ik,...jl->...ijkl", h, h))
        nabla = geom.nabla_h
    codazzi = nabla - np.einsum("...ijk->...jik", nabla)
    return RigidityResiduals(variant=variant, res_gauss=max_abs(gauss), res_codazzi=max_abs(codazzi))


def rigidity_residuals(
    data: InitialDataFamily,
    p: Point,
    variant: Union[str, KillingVariant] = KillingVariant.E0_KILLING
) -> RigidityResiduals:
    """
    Gauss and Codazzi residuals at p.

    E0 variant: R_ijkl + h~_ik h~_jl - h~_il h~_jk with h~ = -h + kappa delta.
    Imaginary variant: R_ijkl + kappa^2 (delta_ik delta_jl - delta_il delta_jk) - h_il h_jk + h_ik h_jl.
    """
    return rigidity_from_geometry(geometry_at(data, p), data.kappa, variant)
