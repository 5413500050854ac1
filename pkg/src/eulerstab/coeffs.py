"""Exact-rational amplification expansions and stability polynomial coefficients.

Linearizing one explicit step about a frozen base flow, the perturbation map
collapses to two term families: repeated applications of the frozen-base
advection operator F (coefficients alpha_i on dt^i F^i), and a single
base-gradient coupling term carrying the coefficient beta.  The squared
amplification modulus of a Fourier mode is then a polynomial in theta^2 with
coefficients S_l built from convolutions of the alpha sequence; the first
nonzero S_l with l >= 1 fixes the predicted step-size exponent:

    sign S_r > 0  ->  dt <= C * dx^(2r/(2r-1))
    sign S_r < 0  ->  classical linear restriction dt <= C * dx

All arithmetic here is exact rational: the S_l suffer catastrophic
cancellation (S_1 = S_2 = 0 exactly for rk4), so floats enter only in the
separate floating-point evaluation module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .schemes import ExplicitTableau, SchemeError, TaylorScheme, validate

__all__ = [
    "AmplificationExpansion",
    "StabilityProfile",
    "expand_perturbation",
    "taylor_alpha",
    "compute_S",
    "verify_theorem",
    "classify_taylor",
    "ab2_expansion",
    "ab2_profile",
    "fraction_json",
    "expansion_json_dict",
    "profile_json_dict",
]


@dataclass(frozen=True)
class AmplificationExpansion:
    """Coefficients of the linearized one-step perturbation map.

    alpha[i] multiplies dt^i F^i(eps); beta multiplies the (subtracted)
    base-gradient coupling term dt * P[(eps . grad) u].
    """

    alpha: tuple[Fraction, ...]
    beta: Fraction
    label: str = ""

    @property
    def k(self) -> int:
        return len(self.alpha) - 1


@dataclass(frozen=True)
class StabilityProfile:
    """Stability polynomial coefficients and the step-size exponent they imply.

    S[l] is the coefficient of theta^(2l) in the squared amplification
    modulus.  r is the first index l >= 1 with S[l] != 0 (None if all
    vanish), sign_r its sign, and cfl_exponent the predicted power e in
    dt <= C * dx^e (None when no prediction exists).
    """

    S: tuple[Fraction, ...]
    r: int | None
    sign_r: int | None
    cfl_exponent: Fraction | None
    label: str = ""


def expand_perturbation(scheme: ExplicitTableau) -> AmplificationExpansion:
    """Propagate the alpha/beta recursion through the stages of a tableau.

    Stage l combines earlier alpha rows through the a-weights and shifts
    them up one power of F through the b-weights:

        alpha[l][i] = sum_j a[l][j]*alpha[j][i] + sum_j b[l][j]*alpha[j][i-1]
        beta[l]     = sum_j a[l][j]*beta[j] + sum_j b[l][j]

    with alpha[0] = (1,) and beta[0] = 0.  The subtraction in the stage
    update is absorbed into F, which makes every alpha positive for the
    built-in schemes.
    """
    problems = validate(scheme)
    if problems:
        raise SchemeError(
            f"invalid tableau {scheme.name!r}: " + "; ".join(problems)
        )
    alpha_rows: list[list[Fraction]] = [[Fraction(1)]]
    betas: list[Fraction] = [Fraction(0)]
    for l in range(1, scheme.k + 1):
        arow, brow = scheme.a[l - 1], scheme.b[l - 1]
        row = []
        for i in range(l + 1):
            s = Fraction(0)
            for j in range(l):
                if i < len(alpha_rows[j]):
                    s += arow[j] * alpha_rows[j][i]
                if 1 <= i and i - 1 < len(alpha_rows[j]):
                    s += brow[j] * alpha_rows[j][i - 1]
            row.append(s)
        betas.append(sum(arow[j] * betas[j] for j in range(l)) + sum(brow))
        alpha_rows.append(row)
    return AmplificationExpansion(
        alpha=tuple(alpha_rows[-1]), beta=betas[-1], label=scheme.name
    )


def taylor_alpha(scheme: TaylorScheme) -> AmplificationExpansion:
    """Expansion of the order-m truncation of the exact step: alpha_i = 1/i!."""
    m = scheme.m
    if m < 1:
        raise SchemeError(f"Taylor truncation order must be >= 1, got {m}")
    return AmplificationExpansion(
        alpha=tuple(Fraction(1, math.factorial(i)) for i in range(m + 1)),
        beta=Fraction(1),
        label=f"taylor-{m}",
    )


def compute_S(e: AmplificationExpansion) -> StabilityProfile:
    """Stability polynomial coefficients from an amplification expansion.

    S_l = sum_{j=-min(l,k-l)}^{min(l,k-l)} (-1)^j alpha_{l-j} alpha_{l+j},
    which is exactly the coefficient of theta^(2l) in |xi(theta)|^2.
    """
    if not e.alpha or e.alpha[0] != 1:
        raise ValueError(f"alpha_0 must be 1, got {e.alpha[:1]}")
    k = e.k
    S = []
    for l in range(k + 1):
        m = min(l, k - l)
        S.append(
            sum(
                (-1) ** abs(j) * e.alpha[l - j] * e.alpha[l + j]
                for j in range(-m, m + 1)
            )
        )
    r = next((l for l in range(1, k + 1) if S[l] != 0), None)
    if r is None:
        sign_r, exponent = None, None
    else:
        sign_r = 1 if S[r] > 0 else -1
        exponent = Fraction(2 * r, 2 * r - 1) if sign_r > 0 else Fraction(1)
    return StabilityProfile(
        S=tuple(S), r=r, sign_r=sign_r, cfl_exponent=exponent, label=e.label
    )


def verify_theorem(p: int) -> int | None:
    """Check that the order-2p truncation has S_1 = ... = S_p = 0 exactly.

    Returns None when the cancellation holds, else the first violated index.
    """
    if not 1 <= p <= 8:
        raise ValueError(f"p must be in 1..8, got {p}")
    profile = compute_S(taylor_alpha(TaylorScheme(2 * p)))
    for q in range(1, p + 1):
        if profile.S[q] != 0:
            return q
    return None


def classify_taylor(m: int) -> StabilityProfile:
    """Full stability profile of the order-m Taylor truncation.

    Cross-checks the residue-class rule before returning: the leading
    surviving coefficient is positive exactly for m = 1, 2 (mod 4), with
    exponent (m+1)/m resp. (m+2)/(m+1); for m = 3, 0 (mod 4) it is negative
    and only the linear restriction remains.
    """
    profile = compute_S(taylor_alpha(TaylorScheme(m)))
    residue = m % 4
    if residue in (1, 2):
        expected = Fraction(m + 1, m) if residue == 1 else Fraction(m + 2, m + 1)
        if profile.sign_r != 1 or profile.cfl_exponent != expected:
            raise RuntimeError(
                f"taylor order {m}: profile {profile} contradicts the residue rule"
            )
    else:
        if profile.sign_r != -1 or profile.cfl_exponent != 1:
            raise RuntimeError(
                f"taylor order {m}: profile {profile} contradicts the residue rule"
            )
    return profile


def ab2_expansion() -> AmplificationExpansion:
    """Effective expansion of the Adams-Bashforth 2 principal root.

    The two-step scheme has no stage tableau; its dominant characteristic
    root expands as 1 + z + z^2/2 - z^3/4 - z^4/8 + O(z^5).  The truncation
    is exact through z^4, enough to pin S_1 = 0 and the leading surviving
    coefficient S_2 = 1/2 (higher S from this object are meaningless).
    """
    return AmplificationExpansion(
        alpha=(
            Fraction(1),
            Fraction(1),
            Fraction(1, 2),
            Fraction(-1, 4),
            Fraction(-1, 8),
        ),
        beta=Fraction(1),
        label="ab2",
    )


def ab2_profile() -> StabilityProfile:
    """Stability profile of Adams-Bashforth 2: r = 2, S_2 = 1/2, exponent 4/3."""
    full = compute_S(ab2_expansion())
    if full.r != 2 or full.S[2] != Fraction(1, 2):
        raise RuntimeError(f"ab2 principal-root expansion is inconsistent: {full}")
    return StabilityProfile(
        S=full.S[:3],
        r=2,
        sign_r=1,
        cfl_exponent=Fraction(4, 3),
        label="ab2",
    )


def fraction_json(x: Fraction) -> dict:
    """Rational as decimal strings, immune to integer overflow in readers."""
    return {"num": str(x.numerator), "den": str(x.denominator)}


def expansion_json_dict(e: AmplificationExpansion) -> dict:
    return {
        "label": e.label,
        "k": e.k,
        "alpha": [fraction_json(a) for a in e.alpha],
        "beta": fraction_json(e.beta),
    }


def profile_json_dict(p: StabilityProfile) -> dict:
    return {
        "label": p.label,
        "S": [fraction_json(s) for s in p.S],
        "r": p.r,
        "sign_r": p.sign_r,
        "cfl_exponent": None
        if p.cfl_exponent is None
        else {**fraction_json(p.cfl_exponent), "float": float(p.cfl_exponent)},
    }
