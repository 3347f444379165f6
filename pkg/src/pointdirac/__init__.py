"""1-D Dirac equation with a point-concentrated nonlinearity.

The dynamics reduces to a nonlinear Volterra equation for the charge (the
mean spinor value at the interaction point); the field anywhere is then
reconstructed from the retarded Bessel-kernel representation.  See README.md
for the model zoo, the CLI and the acceptance suite.
"""

from .core import (
    ID2,
    MASSLESS_UNITS,
    NATURAL_UNITS,
    SIGMA1,
    SIGMA2,
    SIGMA3,
    STANDARD_REP,
    PhysicalConstants,
    Representation,
    is_hermitian,
    is_unitary,
)
from .kernel import bessel_j0, bessel_j1_over_x, retarded_kernel
from .models import (
    Family,
    NonlinearModel,
    ScalarReduction,
    apply_model,
    builtin_model,
    free_model,
    quadratic_form,
)
from .profiles import (
    InitialProfile,
    bump_profile,
    continuous_profile,
    gaussian_profile,
    piecewise_profile,
    profile_from_samples,
    sech_profile,
)
from .freeflow import QuadratureSpec, free_evolve, free_field, free_trace_at_y
from .charge import (
    ChargeMapInverter,
    ChargeTrajectory,
    NonConvergence,
    SingularJacobian,
    charge_map,
    invert_charge_map,
    march_charge,
)
from .field import (
    DomainDatum,
    SpinorField,
    make_domain_datum,
    reconstruct,
    reconstruct_field,
    snapshot,
    trace_jump_mean,
)
from .linear import LinearModel, solve_linear_charge
from .diagnostics import (
    ConservationReport,
    InvertibilityReport,
    ModelLacksW,
    NonUnitary,
    SymmetryViolation,
    check_invertibility,
    conservation_series,
    default_window,
    energy,
    mass,
    transform_profile,
    transform_representation,
)

__version__ = "0.1.0"
