import math

import numpy as np
import pytest

from eulerstab.spectral import (
    FieldError,
    Grid,
    GridError,
    SpectralField,
    advect,
    check_inverse_inequality,
    divergence_defect,
    energy,
    from_physical,
    grad_norm_l2,
    hermitian_defect,
    inject_perturbation,
    inner,
    leray_project,
    load_field,
    max_abs,
    max_grad,
    norm_l2,
    physical_samples,
    random_divfree,
    save_field,
    skewness_defect,
    taylor_green,
    to_physical,
    vortex_pair,
    zero_field,
)

G32 = Grid(32)
G64 = Grid(64)


def single_mode(grid, kx, ky, v0, v1):
    c = np.zeros((2, grid.n, grid.nr), dtype=complex)
    c[0, kx % grid.n, ky] = v0
    c[1, kx % grid.n, ky] = v1
    return SpectralField(grid, c)


# --- grid ----------------------------------------------------------------------

def test_grid_parameters():
    assert G32.k_max == 10
    assert G32.dx == pytest.approx(0.1)
    assert G64.k_max == 21


def test_grid_rejects_bad_sizes():
    for n in (4, 12, 17):
        with pytest.raises(GridError):
            Grid(n)


def test_grid_equality_by_size():
    assert Grid(32) == G32
    assert Grid(64) != G32


# --- projector ------------------------------------------------------------------

def test_leray_kills_pure_gradient_mode():
    # uhat parallel to k is a gradient: annihilated
    f = single_mode(G32, 1, 0, 1.0, 0.0)
    assert norm_l2(leray_project(f)) <= 1e-15


def test_leray_keeps_transverse_mode():
    f = single_mode(G32, 0, 1, 1.0, 0.0)
    p = leray_project(f)
    assert np.allclose(p.coeffs, f.coeffs)


def test_leray_spec_mode_examples():
    p1 = leray_project(single_mode(G32, 0, 1, 1.0, 0.0))
    assert p1.coeffs[0, 0, 1] == pytest.approx(1.0)
    p2 = leray_project(single_mode(G32, 1, 0, 1.0, 0.0))
    assert abs(p2.coeffs[0, 1, 0]) <= 1e-15


def test_leray_idempotent_and_contracting():
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = from_physical(G32, rng.standard_normal((2, 32, 32)))
        p = leray_project(f)
        pp = leray_project(p)
        assert norm_l2(pp - p) <= 1e-12 * norm_l2(p)
        assert norm_l2(p) <= norm_l2(f) * (1 + 1e-14)
        assert divergence_defect(p) <= 1e-12


def test_leray_orthogonality():
    rng = np.random.default_rng(4)
    f = from_physical(G32, rng.standard_normal((2, 32, 32)))
    p = leray_project(f)
    # residual f - p must be L2-orthogonal to the projection
    assert abs(inner(p, f - p)) <= 1e-12 * norm_l2(f) ** 2


def test_leray_preserves_mean_mode():
    c = np.zeros((2, G32.n, G32.nr), dtype=complex)
    c[0, 0, 0] = 0.7
    f = SpectralField(G32, c)
    p = leray_project(f)
    assert p.coeffs[0, 0, 0] == pytest.approx(0.7)


# --- norms and pairings -----------------------------------------------------------

def test_inner_is_norm_squared():
    rng = np.random.default_rng(5)
    f = random_divfree(G32, rng)
    assert inner(f, f) == pytest.approx(norm_l2(f) ** 2, rel=1e-12)


def test_disjoint_modes_are_orthogonal():
    f = single_mode(G32, 2, 1, 1.0, 0.5)
    g = single_mode(G32, 3, 4, 0.2, -0.1)
    assert inner(f, g) == 0.0


def test_parseval_against_physical_quadrature():
    rng = np.random.default_rng(6)
    f = random_divfree(G64, rng)
    p = to_physical(f)
    quad = (2 * math.pi / G64.n) ** 2 * float(np.sum(p**2))
    assert quad == pytest.approx(norm_l2(f) ** 2, rel=1e-12)


def test_taylor_green_closed_forms():
    for A0 in (1.0, 2.5):
        tg = taylor_green(G64, A0)
        assert max_abs(tg) == pytest.approx(A0, rel=1e-13)
        assert max_grad(tg) == pytest.approx(A0, rel=1e-13)
        assert norm_l2(tg) == pytest.approx(math.pi * A0 * math.sqrt(2), rel=1e-13)
        assert energy(tg) == pytest.approx(2 * math.pi**2 * A0**2, rel=1e-13)
        assert divergence_defect(tg) <= 1e-14
        assert hermitian_defect(tg) <= 1e-15


def test_taylor_green_physical_values():
    tg = taylor_green(G32, 1.0)
    p = to_physical(tg)
    assert np.abs(p[0] - np.sin(G32.X) * np.cos(G32.Y)).max() <= 1e-14
    assert np.abs(p[1] + np.cos(G32.X) * np.sin(G32.Y)).max() <= 1e-14


# --- advection -------------------------------------------------------------------

def test_constant_advection_is_diagonal():
    c = np.zeros((2, G32.n, G32.nr), dtype=complex)
    c[0, 0, 0] = 0.9  # constant velocity (0.9, 0)
    u = SpectralField(G32, c, divfree=True)
    rng = np.random.default_rng(7)
    v = random_divfree(G32, rng)
    w = advect(u, v)
    expected = 1j * 0.9 * G32.KX * v.coeffs
    assert np.abs(w.coeffs - expected).max() <= 1e-14


def test_taylor_green_advection_closed_form():
    tg = taylor_green(G64, 1.0)
    adv = advect(tg, tg)
    p = to_physical(adv)
    # the advection term of the cellular array is (sin 2x, sin 2y)/2
    assert np.abs(p[0] - 0.5 * np.sin(2 * G64.X)).max() <= 1e-10
    assert np.abs(p[1] - 0.5 * np.sin(2 * G64.Y)).max() <= 1e-10
    # ... which is a pure gradient: projected away entirely
    assert norm_l2(leray_project(adv)) <= 1e-10


def test_advect_zero_field():
    tg = taylor_green(G32, 1.0)
    assert norm_l2(advect(tg, zero_field(G32))) == 0.0


def test_advect_grid_mismatch():
    with pytest.raises(FieldError):
        advect(taylor_green(G32), taylor_green(G64))


def test_advected_band_is_masked():
    rng = np.random.default_rng(8)
    u = random_divfree(G32, rng)
    v = random_divfree(G32, rng)
    w = advect(u, v)
    assert np.abs(w.coeffs[:, ~G32.mask]).max() == 0.0


# --- skewness ---------------------------------------------------------------------

def test_skewness_defect_taylor_green():
    rng = np.random.default_rng(9)
    tg = taylor_green(G64, 1.0)
    for _ in range(5):
        v = random_divfree(G64, rng)
        assert skewness_defect(tg, v) <= 1e-10


def test_skewness_zero_field():
    tg = taylor_green(G32, 1.0)
    assert skewness_defect(tg, zero_field(G32)) == 0.0


def test_skewness_without_dealiasing_is_broken():
    rng = np.random.default_rng(10)
    u = random_divfree(G32, rng, dealias=False)
    v = random_divfree(G32, rng, dealias=False)
    assert skewness_defect(u, v, dealias=False) > 1e-10


def test_antisymmetry_of_advection_pairing():
    rng = np.random.default_rng(11)
    for _ in range(5):
        u = random_divfree(G32, rng)
        v = random_divfree(G32, rng)
        w = random_divfree(G32, rng)
        lhs = inner(v, advect(u, w)) + inner(advect(u, v), w)
        scale = max_abs(u) * (norm_l2(v) * grad_norm_l2(w) + norm_l2(w) * grad_norm_l2(v))
        assert abs(lhs) <= 1e-10 * scale


# --- inverse inequality -------------------------------------------------------------

def test_saturating_mode_hits_one():
    f = single_mode(G32, G32.k_max, 0, 0.0, 1.0)
    assert check_inverse_inequality(f) == pytest.approx(1.0, rel=1e-14)


def test_taylor_green_inverse_ratio():
    tg = taylor_green(G64, 3.0)
    assert check_inverse_inequality(tg) == pytest.approx(1.0 / G64.k_max, rel=1e-13)


def test_zero_field_inverse_ratio():
    assert check_inverse_inequality(zero_field(G32)) == 0.0


def test_random_fields_never_exceed_one():
    rng = np.random.default_rng(12)
    for _ in range(5):
        f = random_divfree(G32, rng)
        assert check_inverse_inequality(f) <= 1.0 + 1e-14


# --- perturbation injection ----------------------------------------------------------

def test_injected_perturbation_properties():
    rng = np.random.default_rng(13)
    eps = inject_perturbation(G64, 2.5e-3, rng=rng)
    assert divergence_defect(eps) <= 1e-15
    assert norm_l2(eps) == pytest.approx(2.5e-3, rel=1e-13)
    assert check_inverse_inequality(eps) >= 0.99
    assert hermitian_defect(eps) <= 1e-15


def test_injected_perturbation_rejects_slow_wavevector():
    with pytest.raises(FieldError):
        inject_perturbation(G64, 1.0, wavevector=(2, 1))


def test_injected_perturbation_deterministic_without_rng():
    a = inject_perturbation(G32, 1.0)
    b = inject_perturbation(G32, 1.0)
    assert np.array_equal(a.coeffs, b.coeffs)


# --- field plumbing -------------------------------------------------------------------

def test_field_arithmetic_tags():
    rng = np.random.default_rng(14)
    f = random_divfree(G32, rng)
    g = random_divfree(G32, rng)
    assert (f + g).divfree
    assert (2.0 * f).divfree
    assert not (f + SpectralField(G32, g.coeffs, divfree=False)).divfree


def test_roundtrip_physical_spectral():
    rng = np.random.default_rng(15)
    f = random_divfree(G32, rng)
    again = from_physical(G32, to_physical(f))
    assert np.abs(again.coeffs - f.coeffs).max() <= 1e-14


def test_snapshot_round_trip(tmp_path):
    rng = np.random.default_rng(16)
    f = random_divfree(G32, rng)
    path = tmp_path / "field.txt"
    save_field(path, f)
    g = load_field(path)
    assert g.grid == f.grid
    assert g.divfree == f.divfree
    assert np.array_equal(g.coeffs, f.coeffs)  # repr round-trip is exact


def test_physical_samples_layout():
    tg = taylor_green(G32, 1.0)
    rows = physical_samples(tg, 8)
    assert len(rows) == 64
    x, y, u1, u2 = rows[0]
    assert (x, y) == (0.0, 0.0)
    assert u1 == pytest.approx(0.0, abs=1e-14)


def test_random_divfree_is_normalized():
    rng = np.random.default_rng(17)
    f = random_divfree(G32, rng, amplitude=3.0)
    assert norm_l2(f) == pytest.approx(3.0, rel=1e-12)
    assert divergence_defect(f) <= 1e-12
    assert hermitian_defect(f) <= 1e-12


def test_vortex_pair_is_genuinely_unsteady():
    from eulerstab.stepping import nonlinear_term

    vp = vortex_pair(G32, 1.0)
    assert max_abs(vp) == pytest.approx(1.0, rel=1e-12)
    assert divergence_defect(vp) <= 1e-14
    assert norm_l2(nonlinear_term(vp)) > 1e-2
