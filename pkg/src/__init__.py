"""
adslens - energy-momentum invariants of asymptotically AdS initial data.

This package provides the fixed Clifford representation and spinor algebra,
hyperbolic-frame geometry, initial data families, Killing spinor connections
with their Weitzenböck checks, and the surface-integral invariants with the
two Hermitian energy-momentum matrices.
"""

__version__ = "0.1.0"

# Import main modules
from . import clifford_spinor
from . import geometry_engine
from . import initial_data
from . import mass_invariants
from . import spinor_connections
from . import utils

# Import key functions for direct access
from .utils import (
    AdsLensError,
    DomainError,
    DataError,
    ConfigError,
    ContractViolation,
    NotConvergedError,
    configure_logging,
)

from .clifford_spinor import (
    Spinor,
    CliffordElement,
    KillingVariant,
    gamma,
    clifford_apply,
    inner_pos,
    inner_lorentz,
)

from .geometry_engine import (
    Point,
    LocalGeometry,
    hyperbolic_frame,
    hyperbolic_connection,
    geometry_at,
    riemann,
    scalar_curvature,
    covariant_derivative_h,
    sphere_grid,
)

from .initial_data import (
    InitialDataFamily,
    family_ads,
    family_kottler,
    family_perturbation,
    list_families,
    build_family,
    validate_decay,
    constraint_densities,
    rigidity_residuals,
)

from .spinor_connections import (
    KillingParams,
    SpinorField,
    killing_field,
    e0_killing_spinor,
    imaginary_killing_spinor,
    hypersurface_nabla,
    killing_connection,
    dirac,
    dirac_witten,
    curvature_endomorphism,
    weitzenbock_residual,
)

from .mass_invariants import (
    MassAspect,
    EnergyMomentum,
    Hermitian4,
    mass_aspect,
    sphere_integral,
    extrapolate_limit,
    energy_momentum,
    hermitian4,
    q1_matrix,
    q2_matrix,
    positivity_report,
    boundary_quadratic_form,
)

__all__ = [
    # Modules
    'clifford_spinor',
    'geometry_engine',
    'initial_data',
    'mass_invariants',
    'spinor_connections',
    'utils',

    # Errors and logging
    'AdsLensError',
    'DomainError',
    'DataError',
    'ConfigError',
    'ContractViolation',
    'NotConvergedError',
    'configure_logging',

    # Clifford algebra
    'Spinor',
    'CliffordElement',
    'KillingVariant',
    'gamma',
    'clifford_apply',
    'inner_pos',
    'inner_lorentz',

    # Geometry
    'Point',
    'LocalGeometry',
    'hyperbolic_frame',
    'hyperbolic_connection',
    'geometry_at',
    'riemann',
    'scalar_curvature',
    'covariant_derivative_h',
    'sphere_grid',

    # Initial data
    'InitialDataFamily',
    'family_ads',
    'family_kottler',
    'family_perturbation',
    'list_families',
    'build_family',
    'validate_decay',
    'constraint_densities',
    'rigidity_residuals',

    # Spinor connections
    'KillingParams',
    'SpinorField',
    'killing_field',
    'e0_killing_spinor',
    'imaginary_killing_spinor',
    'hypersurface_nabla',
    'killing_connection',
    'dirac',
    'dirac_witten',
    'curvature_endomorphism',
    'weitzenbock_residual',

    # Invariants
    'MassAspect',
    'EnergyMomentum',
    'Hermitian4',
    'mass_aspect',
    'sphere_integral',
    'extrapolate_limit',
    'energy_momentum',
    'hermitian4',
    'q1_matrix',
    'q2_matrix',
    'positivity_report',
    'boundary_quadratic_form',
]
