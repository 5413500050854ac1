"""Stability laboratory for explicit time steppers on incompressible Euler.

Three independent routes to the same step-size restriction: exact rational
stability coefficients, floating-point amplification factors, and measured
perturbation growth on a pseudo-spectral solver.
"""

__version__ = "0.1.0"

from .schemes import (  # noqa: F401
    BUILTIN_NAMES,
    ExplicitTableau,
    MultistepScheme,
    SchemeError,
    TaylorScheme,
    builtin,
    format_tableau,
    parse_tableau,
    validate,
)
from .coeffs import (  # noqa: F401
    AmplificationExpansion,
    StabilityProfile,
    ab2_profile,
    classify_taylor,
    compute_S,
    expand_perturbation,
    taylor_alpha,
    verify_theorem,
)
