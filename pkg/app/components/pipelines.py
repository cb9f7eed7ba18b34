"""
Verification pipelines for the adslens CLI.

Each pipeline returns a payload dict with a ``status`` of pass, fail,
not_converged or error; ``run`` executes the selected pipelines in order and
never aborts the report on a single failure.
"""

import hashlib
import logging
import platform
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy
import sympy

from src import __version__
from src.clifford_spinor import ETA, GAMMA, IDENTITY4, KillingVariant, anticommutator_residuals
from src.geometry_engine import Point, geometry_at
from src.initial_data import (
    InitialDataFamily,
    build_family,
    constraint_densities_from_geometry,
    energy_identity_residual,
    family_ads,
    rigidity_from_geometry,
    validate_decay,
)
from src.mass_invariants import (
    Definiteness,
    EnergyMomentum,
    Hermitian4,
    boundary_quadratic_form,
    energy_momentum,
    geometric_invariant,
    positivity_report,
    q1_matrix,
    q2_matrix,
)
from src.spinor_connections import (
    KillingParams,
    killing_field,
    killing_gram_determinant,
    killing_residual,
    random_bump_field,
    weitzenbock_residual,
)
from src.utils import AdsLensError, ConfigError, NotConvergedError, max_abs

from ..config import DEFAULT_PARAMS, RunConfig, get_tolerance, serialize_config

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
NOT_CONVERGED = "not_converged"
ERROR = "error"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_NOT_CONVERGED = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4

VARIANTS = (KillingVariant.E0_KILLING, KillingVariant.IMAGINARY)


@dataclass
class Report:
    """Per-pipeline payloads plus the resolved config and provenance."""
    config: Dict[str, Any]
    pipelines: Dict[str, Dict[str, Any]]
    provenance: Dict[str, Any]
    exit_code: int = EXIT_PASS
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "pipelines": self.pipelines,
            "provenance": self.provenance,
            "exit_code": self.exit_code,
        }


@dataclass
class PipelineContext:
    config: RunConfig
    data: InitialDataFamily
    rng: np.random.Generator
    energy_momentum: Optional[EnergyMomentum] = None
    matrices: Dict[str, Hermitian4] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)

    def tol(self, name: str) -> float:
        return get_tolerance(self.config, name)

    def sample_points(self, n: int) -> Point:
        """Random chart points between the first and last configured radii."""
        radii = self.config.scaled_radii
        r = self.rng.uniform(radii[0], radii[-1], n)
        theta = self.rng.uniform(0.3, np.pi - 0.3, n)
        psi = self.rng.uniform(0.0, 2.0 * np.pi, n)
        return Point(r, theta, psi)


def complex_matrix(m: np.ndarray) -> List[List[List[float]]]:
    """Encode a complex matrix as nested [re, im] pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def run_clifford(ctx: PipelineContext) -> Dict[str, Any]:
    failures = anticommutator_residuals()
    residual = 0.0
    for a in range(4):
        for b in range(4):
            anti = GAMMA[a] @ GAMMA[b] + GAMMA[b] @ GAMMA[a]
            residual = max(residual, max_abs(anti + 2.0 * ETA[a, b] * IDENTITY4))
    tol = ctx.tol("clifford")
    return {
        "status": _status(not any(failures.values()) and residual <= tol),
        "tolerance": tol,
        "exact_failures": failures,
        "anticommutator_residual": residual,
    }


def run_killing(ctx: PipelineContext) -> Dict[str, Any]:
    kappa = ctx.config.kappa
    n = DEFAULT_PARAMS["killing_points"]
    ads = family_ads(kappa)
    r = ctx.rng.uniform(0.5 / kappa, 6.0 / kappa, n)
    theta = ctx.rng.uniform(0.2, np.pi - 0.2, n)
    psi = ctx.rng.uniform(0.0, 4.0 * np.pi, n)
    random_lam = ctx.rng.standard_normal(4) + 1j * ctx.rng.standard_normal(4)
    coefficient_sets = [tuple(np.eye(4)[k]) for k in range(4)] + [tuple(random_lam)]

    rows: Dict[str, np.ndarray] = {"r": r, "theta": theta, "psi": psi}
    worst: Dict[str, float] = {}
    min_gram: Dict[str, float] = {}
    periodicity: Dict[str, float] = {}
    for variant in VARIANTS:
        residual = np.zeros(n)
        for lam in coefficient_sets:
            spinor = killing_field(KillingParams(lam, variant, kappa))
            residual = np.maximum(residual, killing_residual(ads, spinor, r, theta, psi, variant))
            # bilinears are 2 pi periodic although components flip sign
            phi = spinor.evaluate(r, theta, psi)
            shifted = spinor.evaluate(r, theta, psi + 2.0 * np.pi)
            periodicity[variant.value] = max(
                periodicity.get(variant.value, 0.0),
                max_abs(np.sum(np.abs(phi) ** 2, axis=-1) - np.sum(np.abs(shifted) ** 2, axis=-1)),
            )
        grams = np.array([
            killing_gram_determinant(variant, kappa, Point(ri, ti, pi_))
            for ri, ti, pi_ in zip(r, theta, psi)
        ])
        rows[f"residual_{variant.value}"] = residual
        rows[f"gram_{variant.value}"] = grams
        worst[variant.value] = float(np.max(residual))
        min_gram[variant.value] = float(np.min(grams))

    table = pd.DataFrame(rows)
    ctx.tables["killing"] = table
    tol = ctx.tol("killing")
    ok = (all(v <= tol for v in worst.values())
          and all(v >= ctx.tol("gram_determinant") for v in min_gram.values())
          and all(v <= tol for v in periodicity.values()))
    return {
        "status": _status(ok),
        "tolerance": tol,
        "max_residual": worst,
        "min_gram_determinant": min_gram,
        "bilinear_periodicity": periodicity,
        "points": table.to_dict(orient="list"),
    }


def run_weitzenbock(ctx: PipelineContext) -> Dict[str, Any]:
    kappa = ctx.config.kappa
    coarse, fine = ctx.config.weitzenbock_steps
    low, high = ctx.tol("weitzenbock_ratio_low"), ctx.tol("weitzenbock_ratio_high")
    floor = ctx.tol("weitzenbock_floor")
    r0 = ctx.config.scaled_radii[0]
    width = 1.0 / kappa

    records = []
    for k in range(DEFAULT_PARAMS["weitzenbock_fields"]):
        spinor = random_bump_field(ctx.rng, r0, width)
        p = Point(
            r0 + ctx.rng.uniform(-0.3, 0.3) * width,
            ctx.rng.uniform(0.6, np.pi - 0.6),
            ctx.rng.uniform(0.0, 2.0 * np.pi),
        )
        for variant in VARIANTS:
            res_coarse = weitzenbock_residual(ctx.data, spinor, p, variant, coarse)
            res_fine = weitzenbock_residual(ctx.data, spinor, p, variant, fine)
            ratio = res_coarse / res_fine if res_fine > 0 else float("inf")
            converged = res_coarse <= floor or low <= ratio <= high
            records.append({
                "field": k,
                "variant": variant.value,
                "r": float(p.r),
                "theta": float(p.theta),
                "psi": float(p.psi),
                "residual_coarse": res_coarse,
                "residual_fine": res_fine,
                "ratio": ratio,
                "second_order": bool(converged),
            })

    table = pd.DataFrame(records)
    ctx.tables["weitzenbock"] = table
    return {
        "status": _status(bool(table["second_order"].all())),
        "tolerance": {"ratio_band": [low, high], "floor": floor},
        "steps": [coarse, fine],
        "fields": table.to_dict(orient="list"),
    }


def run_decay(ctx: PipelineContext) -> Dict[str, Any]:
    report = validate_decay(
        ctx.data,
        ctx.config.scaled_radii,
        n_theta=ctx.config.n_theta,
        n_psi=ctx.config.n_psi,
        growth_tolerance=ctx.tol("decay_growth"),
    )
    ctx.tables["decay"] = report.to_frame()
    return {
        "status": _status(report.passed),
        "tolerance": ctx.tol("decay_growth"),
        "tau": report.tau,
        "tau_ok": report.tau_ok,
        "radii": report.radii,
        "sups": report.sups,
        "slopes": report.slopes,
        "bounded": report.bounded,
        "monotone": report.monotone,
    }


def run_energy_conditions(ctx: PipelineContext) -> Dict[str, Any]:
    kappa = ctx.config.kappa
    p = ctx.sample_points(DEFAULT_PARAMS["sample_points"])
    geom = geometry_at(ctx.data, p, fd_step=None)
    dens = constraint_densities_from_geometry(geom, kappa)
    identity_local = max_abs(energy_identity_residual(geom.scalar_curvature, geom.h, kappa))

    # analytic jets against finite differences at the configured step
    geom_fd = geometry_at(ctx.data, p, fd_step=ctx.config.fd_step)
    fd_residual = max(max_abs(geom.riemann - geom_fd.riemann), max_abs(geom.nabla_h - geom_fd.nabla_h))
    fd_tol = ctx.tol("fd_consistency") * max(1.0, kappa**2)
    fd_consistent = fd_residual <= fd_tol

    # the same identity on random symmetric tensors
    h = ctx.rng.standard_normal((1000, 3, 3))
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    scal = ctx.rng.standard_normal(1000)
    identity_random = max_abs(energy_identity_residual(scal, h, kappa))

    tol = ctx.tol("constraint")
    identity_tol = ctx.tol("identity") * max(1.0, kappa**2, max_abs(h) ** 2)
    table = pd.DataFrame({
        "r": p.r, "theta": p.theta, "psi": p.psi,
        "mu": dens.mu, "omega_norm": np.linalg.norm(dens.omega, axis=-1), "margin": dens.margin,
        "rho": dens.rho, "J_norm": np.linalg.norm(dens.J, axis=-1), "margin_standard": dens.margin_standard,
    })
    ctx.tables["energy_conditions"] = table
    ok = (float(np.min(dens.margin)) >= -tol
          and float(np.min(dens.margin_standard)) >= -tol
          and identity_random <= identity_tol
          and identity_local <= identity_tol
          and fd_consistent)
    return {
        "status": _status(ok),
        "tolerance": tol,
        "fd_step": ctx.config.fd_step,
        "fd_residual": fd_residual,
        "fd_tolerance": fd_tol,
        "fd_consistent": bool(fd_consistent),
        "min_margin": float(np.min(dens.margin)),
        "min_margin_standard": float(np.min(dens.margin_standard)),
        "max_abs_mu": max_abs(dens.mu),
        "max_abs_omega": max_abs(dens.omega),
        "identity_residual": max(identity_local, identity_random),
        "points": table.to_dict(orient="list"),
    }


def _energy_momentum(ctx: PipelineContext) -> EnergyMomentum:
    if ctx.energy_momentum is None:
        ctx.energy_momentum = energy_momentum(
            ctx.data,
            ctx.config.scaled_radii,
            n_theta=ctx.config.n_theta,
            n_psi=ctx.config.n_psi,
            rtol=ctx.tol("extrapolation_rtol"),
            atol=ctx.tol("extrapolation_atol"),
            threads=ctx.config.threads,
        )
        ctx.tables["per_radius"] = ctx.energy_momentum.to_frame()
    return ctx.energy_momentum


def _matrices(ctx: PipelineContext) -> Dict[str, Hermitian4]:
    """Q1 and Q of the run, computed here when q-matrices was not selected."""
    if not ctx.matrices:
        em = _energy_momentum(ctx)
        ctx.matrices = {"Q1": q1_matrix(em), "Q": q2_matrix(em)}
    return ctx.matrices


def run_mass(ctx: PipelineContext) -> Dict[str, Any]:
    em = _energy_momentum(ctx)
    scale = max(1.0, max_abs(em.raw_E), max_abs(em.raw_P))
    tol = ctx.tol("bookkeeping") * scale
    bookkeeping_ok = em.bookkeeping_residual <= tol
    if not em.converged:
        status = NOT_CONVERGED
    else:
        status = _status(bookkeeping_ok)
    margins = {
        "energy_momentum": float(em.beta[0] - np.linalg.norm(em.beta[1:])),
        "energy": float(em.E[0] - np.linalg.norm(em.E[1:])),
    }
    return {
        "status": status,
        "tolerance": {"extrapolation_rtol": ctx.tol("extrapolation_rtol"),
                      "extrapolation_atol": ctx.tol("extrapolation_atol"),
                      "bookkeeping": tol},
        "E": em.E,
        "P": em.P,
        "beta": em.beta,
        "chart_dependent": [f"P{nu}{k}" for nu in range(4) for k in (2, 3)],
        "bookkeeping_residual": em.bookkeeping_residual,
        "limit_gap": em.limit_gap,
        "not_converged": em.not_converged,
        "fits": {name: fit.to_dict() for name, fit in em.fits.items()},
        "geometric_invariant": {
            "c1=1,c2=0": geometric_invariant(em, 1.0, 0.0),
            "c1=1,c2=1": geometric_invariant(em, 1.0, 1.0),
        },
        "corollary_margins": margins,
        "per_radius": ctx.tables["per_radius"].reset_index().to_dict(orient="list"),
    }


def _matrix_payload(report) -> Dict[str, Any]:
    a = report.analysis
    return {
        "matrix": complex_matrix(a.matrix),
        "eigenvalues": a.eigenvalues,
        "minors": a.minors,
        "verdict": a.verdict.value,
        "negative_definite": a.negative_definite,
        "cholesky_ok": a.cholesky_ok,
        "tolerance": a.tolerance,
    }


def run_q_matrices(ctx: PipelineContext) -> Dict[str, Any]:
    em = _energy_momentum(ctx)
    q1 = positivity_report(q1_matrix(em), em)
    q2 = positivity_report(q2_matrix(em), em)
    ctx.matrices = {"Q1": q1.analysis, "Q": q2.analysis}

    n = DEFAULT_PARAMS["quadratic_form_samples"]
    lams = ctx.rng.standard_normal((n, 4)) + 1j * ctx.rng.standard_normal((n, 4))
    form_residual = 0.0
    for lam in lams:
        direct = float(np.real(np.conj(lam) @ q1.analysis.matrix @ lam))
        form = boundary_quadratic_form(em, lam)
        form_residual = max(form_residual, abs(form - direct) / max(1.0, abs(direct)))

    nonnegative = all(r.verdict is not Definiteness.INDEFINITE for r in (q1, q2))
    corollaries_ok = all(q1.corollaries.values())
    ok = nonnegative and corollaries_ok and form_residual <= ctx.tol("bookkeeping")
    q2_payload = _matrix_payload(q2)
    q2_payload["chart_dependent_entries"] = [[i, j] for i in range(4) for j in range(4) if (i < 2) != (j < 2)]
    return {
        "status": _status(ok),
        "tolerance": {"bookkeeping": ctx.tol("bookkeeping")},
        "Q1": _matrix_payload(q1),
        "Q": q2_payload,
        "corollary_margins": q1.margins,
        "corollaries": q1.corollaries,
        "quadratic_form_residual": form_residual,
    }


def run_rigidity(ctx: PipelineContext) -> Dict[str, Any]:
    p = ctx.sample_points(DEFAULT_PARAMS["sample_points"])
    geom = geometry_at(ctx.data, p, fd_step=None)
    tol = ctx.tol("rigidity")
    residuals = {}
    for variant in VARIANTS:
        res = rigidity_from_geometry(geom, ctx.config.kappa, variant)
        residuals[variant.value] = {
            "gauss": res.res_gauss,
            "codazzi": res.res_codazzi,
            "holds": bool(res.res_gauss <= tol and res.res_codazzi <= tol),
        }

    # a vanishing energy-momentum matrix forces the matching rigidity equations
    matrices = _matrices(ctx)
    forced = {}
    for variant, key in ((KillingVariant.E0_KILLING, "Q1"), (KillingVariant.IMAGINARY, "Q")):
        matrix = matrices[key]
        vanishes = max_abs(matrix.matrix) <= matrix.tolerance + ctx.tol("extrapolation_rtol") * max(
            1.0, max_abs(matrix.matrix))
        forced[variant.value] = bool(vanishes)
    ok = all(residuals[v]["holds"] for v, f in forced.items() if f)
    return {
        "status": _status(ok),
        "tolerance": tol,
        "residuals": residuals,
        "forced_by_vanishing_matrix": forced,
    }


PIPELINE_FUNCTIONS: Dict[str, Callable[[PipelineContext], Dict[str, Any]]] = {
    "clifford": run_clifford,
    "killing": run_killing,
    "weitzenbock": run_weitzenbock,
    "decay": run_decay,
    "energy-conditions": run_energy_conditions,
    "mass": run_mass,
    "q-matrices": run_q_matrices,
    "rigidity": run_rigidity,
}


def exit_code_for(statuses: List[str]) -> int:
    """Internal error > verification failure > not converged > pass."""
    if ERROR in statuses:
        return EXIT_INTERNAL
    if FAIL in statuses:
        return EXIT_FAIL
    if NOT_CONVERGED in statuses:
        return EXIT_NOT_CONVERGED
    return EXIT_PASS


def provenance(config: RunConfig) -> Dict[str, Any]:
    text = serialize_config(config)
    return {
        "config_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "versions": {
            "adslens": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "sympy": sympy.__version__,
        },
        "timing": {},
    }


def build_data(config: RunConfig) -> InitialDataFamily:
    """Family named by the config; construction errors are configuration errors."""
    try:
        return build_family(config.family, config.kappa, config.family_parameters())
    except ConfigError:
        raise
    except AdsLensError as exc:
        raise ConfigError(f"Invalid parameters for family '{config.family}': {exc}") from exc


def run(config: RunConfig) -> Tuple[Report, int]:
    """
    Execute the selected pipelines in dependency order.

    Returns:
        (report, exit_code); exit code 0 iff every selected pipeline passed
    """
    data = build_data(config)
    ctx = PipelineContext(config=config, data=data, rng=np.random.default_rng(config.seed))
    prov = provenance(config)
    results: Dict[str, Dict[str, Any]] = {}

    for name in config.pipelines:
        logger.info("Running pipeline %s", name)
        start = time.perf_counter()
        try:
            results[name] = PIPELINE_FUNCTIONS[name](ctx)
        except NotConvergedError as exc:
            results[name] = {"status": NOT_CONVERGED, "message": str(exc)}
        except AdsLensError as exc:
            logger.warning("Pipeline %s failed: %s", name, exc)
            results[name] = {"status": FAIL, "message": f"{type(exc).__name__}: {exc}"}
        except Exception as exc:
            logger.exception("Pipeline %s raised an internal error", name)
            results[name] = {"status": ERROR, "message": f"{type(exc).__name__}: {exc}"}
        prov["timing"][name] = time.perf_counter() - start

    code = exit_code_for([r["status"] for r in results.values()])
    report = Report(
        config=config.to_dict(),
        pipelines=results,
        provenance=prov,
        exit_code=code,
        tables=dict(ctx.tables),
    )
    return report, code
