"""Floating-point amplification factors for constant-velocity advection.

Independent check of the rational coefficient engine: a Fourier mode under
constant advection is multiplied per step by xi = sum_j alpha_j (-i theta)^j,
where theta = dt * (a . zeta) is the single dimensionless group, and
|xi|^2 = sum_l S_l theta^(2l) as a polynomial identity.  The two-step
Adams-Bashforth scheme is handled through the roots of its characteristic
polynomial instead.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

from .coeffs import AmplificationExpansion, compute_S
from .schemes import MultistepScheme

__all__ = [
    "AmplificationSample",
    "amplification",
    "s_polynomial_value",
    "check_modulus_identity",
    "multistep_roots",
    "multistep_amplification",
    "dominant_root",
    "richardson_growth_coefficient",
    "find_unit_modulus_return",
    "sample_curve",
]


@dataclass(frozen=True)
class AmplificationSample:
    theta: float
    xi: complex
    modulus_sq: float


def amplification(e: AmplificationExpansion, theta: float) -> AmplificationSample:
    """Evaluate xi(theta) = sum_j alpha_j (-i theta)^j by Horner's rule."""
    z = -1j * theta
    xi = 0j
    for a in reversed(e.alpha):
        xi = xi * z + float(a)
    return AmplificationSample(theta=theta, xi=xi, modulus_sq=abs(xi) ** 2)


def s_polynomial_value(S, theta: float) -> float:
    """Evaluate sum_l S_l theta^(2l) in floating point."""
    t2 = theta * theta
    acc = 0.0
    for s in reversed(S):
        acc = acc * t2 + float(s)
    return acc


def check_modulus_identity(e: AmplificationExpansion, thetas) -> float:
    """Max relative deviation between |xi|^2 and the S polynomial.

    For one-step schemes the two sides are the same polynomial, so the
    deviation is pure round-off.
    """
    if not thetas:
        raise ValueError("need at least one theta sample")
    S = compute_S(e).S
    worst = 0.0
    for theta in thetas:
        lhs = amplification(e, theta).modulus_sq
        rhs = s_polynomial_value(S, theta)
        worst = max(worst, abs(lhs - rhs) / max(1.0, rhs))
    return worst


def _two_step_weights(s: MultistepScheme) -> tuple[float, float]:
    if len(s.weights) != 2:
        raise ValueError(
            f"only two-step schemes are supported, got {len(s.weights)} weights"
        )
    return float(s.weights[0]), float(s.weights[1])


def multistep_roots(s: MultistepScheme, theta: float) -> tuple[complex, complex]:
    """Characteristic roots of the two-step scheme on a pure advection mode.

    With z = -i*theta the advanced mode satisfies
    rho^2 = (1 + w0 z) rho + w1 z, solved by the quadratic formula.
    """
    w0, w1 = _two_step_weights(s)
    z = -1j * theta
    b = 1.0 + w0 * z
    disc = cmath.sqrt(b * b + 4.0 * w1 * z)
    return (b + disc) / 2.0, (b - disc) / 2.0


def multistep_amplification(s: MultistepScheme, theta: float) -> float:
    """Max squared modulus over the characteristic roots."""
    r1, r2 = multistep_roots(s, theta)
    return max(abs(r1) ** 2, abs(r2) ** 2)


def dominant_root(s: MultistepScheme, theta: float) -> complex:
    r1, r2 = multistep_roots(s, theta)
    return r1 if abs(r1) >= abs(r2) else r2


def richardson_growth_coefficient(s: MultistepScheme, thetas=(0.02, 0.04, 0.08)) -> float:
    """Two-level Richardson extrapolation of (max|rho|^2 - 1)/theta^4.

    Expects three theta samples in doubling progression; the result removes
    the theta^2 and theta^4 error terms and converges to the coefficient of
    theta^4 in the dominant-root growth (1/2 for Adams-Bashforth 2).
    """
    t1, t2, t3 = thetas
    if not (abs(t2 - 2 * t1) < 1e-12 * t1 and abs(t3 - 2 * t2) < 1e-12 * t2):
        raise ValueError("theta samples must double: (t, 2t, 4t)")
    g = [(multistep_amplification(s, t) - 1.0) / t**4 for t in (t1, t2, t3)]
    r1 = (4.0 * g[0] - g[1]) / 3.0
    r2 = (4.0 * g[1] - g[2]) / 3.0
    return (16.0 * r1 - r2) / 15.0


def find_unit_modulus_return(e: AmplificationExpansion, theta_lo: float | None = None) -> float:
    """Bisect for the positive theta where |xi| returns to 1.

    Only meaningful for profiles whose leading surviving coefficient is
    negative (|xi| < 1 on an initial interval); rk4 returns sqrt(8).  The
    starting point is scaled by the leading coefficient so that |xi|^2 - 1
    is resolvable above round-off there.
    """
    profile = compute_S(e)
    if profile.sign_r != -1:
        raise ValueError("no unit-modulus return point: leading S_r is not negative")
    if theta_lo is None:
        s_r = abs(float(profile.S[profile.r]))
        theta_lo = min(0.5, (1e-12 / s_r) ** (1.0 / (2 * profile.r)))

    def h(theta):
        return amplification(e, theta).modulus_sq - 1.0

    if h(theta_lo) >= 0.0:
        raise ValueError(f"theta_lo={theta_lo} is not inside the contraction interval")
    hi = theta_lo
    for _ in range(200):
        hi *= 2.0
        if h(hi) > 0.0:
            break
    else:
        raise ValueError("could not bracket the unit-modulus return point")
    lo = hi / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def sample_curve(scheme, thetas) -> list[tuple[float, float, float, float]]:
    """Rows (theta, re_xi, im_xi, modulus_sq) along a theta grid.

    For a multistep scheme the dominant characteristic root plays the role
    of xi and modulus_sq is the max over both roots.
    """
    rows = []
    if isinstance(scheme, MultistepScheme):
        for theta in thetas:
            rho = dominant_root(scheme, theta)
            rows.append(
                (float(theta), rho.real, rho.imag, multistep_amplification(scheme, theta))
            )
    else:
        for theta in thetas:
            s = amplification(scheme, theta)
            rows.append((float(theta), s.xi.real, s.xi.imag, s.modulus_sq))
    return rows
