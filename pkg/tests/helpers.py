"""Shared test oracles, independent of the implementation paths they check."""

from fractions import Fraction

import numpy as np

from eulerstab.schemes import ExplicitTableau


def modulus_sq_coefficients(alpha):
    """Coefficients of |sum_j alpha_j (-i theta)^j|^2 as a polynomial in theta.

    Direct Gaussian-rational convolution: c_j = alpha_j * (-i)^j, multiplied
    against its conjugate, all in exact arithmetic.  Returns the theta^(2l)
    coefficients; odd powers are asserted to cancel.
    """
    # (-i)^j cycle as (re, im) rational pairs
    cycle = [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(-1)),
             (Fraction(-1), Fraction(0)), (Fraction(0), Fraction(1))]
    c = [(a * cycle[j % 4][0], a * cycle[j % 4][1]) for j, a in enumerate(alpha)]
    cbar = [(re, -im) for re, im in c]
    deg = 2 * (len(alpha) - 1)
    poly = [(Fraction(0), Fraction(0)) for _ in range(deg + 1)]
    for j, (ar, ai) in enumerate(c):
        for l, (br, bi) in enumerate(cbar):
            re, im = poly[j + l]
            poly[j + l] = (re + ar * br - ai * bi, im + ar * bi + ai * br)
    even = []
    for m, (re, im) in enumerate(poly):
        assert im == 0, f"imaginary part survives at degree {m}"
        if m % 2 == 1:
            assert re == 0, f"odd power survives at degree {m}"
        else:
            even.append(re)
    return even


def power_iteration_max_root(s, theta, iters=600):
    """Largest |root| of the two-step characteristic polynomial, squared.

    Companion-matrix power iteration; independent of the closed-form
    quadratic used by the implementation.
    """
    w0, w1 = (complex(w) for w in s.weights)
    z = -1j * theta
    A = np.array([[1.0 + w0 * z, w1 * z], [1.0, 0.0]], dtype=complex)
    v = np.array([1.0 + 0.5j, 0.3 - 0.2j], dtype=complex)
    lam = 0.0
    for _ in range(iters):
        w = A @ v
        lam = np.linalg.norm(w) / np.linalg.norm(v)
        v = w / np.linalg.norm(w)
    return lam**2


def random_tableau(rng, k_max=6) -> ExplicitTableau:
    """Random structurally valid tableau: a-rows sum to one, small rationals."""
    k = int(rng.integers(1, k_max + 1))
    a_rows, b_rows = [], []
    for l in range(1, k + 1):
        raw = [Fraction(int(rng.integers(-2, 4)), int(rng.integers(1, 5))) for _ in range(l)]
        raw[int(rng.integers(0, l))] += 1 - sum(raw)
        a_rows.append(raw)
        b_rows.append(
            [Fraction(int(rng.integers(-3, 7)), int(rng.integers(1, 7))) for _ in range(l)]
        )
    return ExplicitTableau(
        name=f"random-{k}",
        a=tuple(tuple(r) for r in a_rows),
        b=tuple(tuple(r) for r in b_rows),
    )
