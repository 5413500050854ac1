"""2D periodic divergence-free field algebra on a dealiased Fourier grid.

Fields live on the torus [0, 2pi)^2 and are stored as rfft2 coefficient
arrays of shape (2, n, n//2 + 1) with the convention

    u(x) = sum_k uhat(k) exp(i k . x),

i.e. scipy's norm="forward".  The discretization space keeps the modes with
max(|k1|, |k2|) <= k_max = n//3 (2/3-rule dealiasing), so quadratic products
evaluated pointwise on the n x n grid are alias-free after re-masking.  The
resolution parameter is dx = 1/k_max: spectral differentiation then satisfies
the inverse inequality ||d_i f|| <= dx^{-1} ||f|| with constant exactly one,
saturated by the smallest retained scale.

The divergence-free projector removes, mode by mode, the component of
uhat(k) along k; composed with the dealiasing mask it is the orthogonal
projector onto the discretization space.  With dealiasing intact the
discrete advection term inherits the skewness identity <v, (u.grad) v> = 0
for divergence-free u up to round-off; without it, aliasing breaks the
discrete integration by parts (see skewness_defect's dealias flag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

TWO_PI = 2.0 * math.pi

__all__ = [
    "GridError",
    "FieldError",
    "Grid",
    "SpectralField",
    "zero_field",
    "from_physical",
    "to_physical",
    "leray_project",
    "advect",
    "inner",
    "norm_l2",
    "energy",
    "max_abs",
    "max_grad",
    "grad_norm_l2",
    "divergence_defect",
    "hermitian_defect",
    "skewness_defect",
    "check_inverse_inequality",
    "taylor_green",
    "vortex_pair",
    "random_divfree",
    "inject_perturbation",
    "save_field",
    "load_field",
    "physical_samples",
]


class GridError(ValueError):
    pass


class FieldError(ValueError):
    pass


class Grid:
    """Uniform n x n grid on [0, 2pi)^2 with 2/3-rule dealiasing metadata."""

    def __init__(self, n: int):
        if n < 8 or (n & (n - 1)) != 0:
            raise GridError(f"grid size must be a power of two with n >= 8, got {n}")
        self.n = n
        self.nr = n // 2 + 1
        self.k_max = n // 3
        self.dx = 1.0 / self.k_max
        kx = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        ky = np.arange(self.nr, dtype=np.int64)
        self.kx_int = kx
        self.ky_int = ky
        self.KX = kx[:, None].astype(np.float64)
        self.KY = ky[None, :].astype(np.float64)
        ksq = self.KX**2 + self.KY**2
        self.k_sq = ksq
        ksafe = ksq.copy()
        ksafe[0, 0] = 1.0
        self._k_sq_safe = ksafe
        self.mask = (np.abs(kx)[:, None] <= self.k_max) & (ky[None, :] <= self.k_max)
        # conjugate-pair multiplicity of each stored rfft column
        w = np.full(self.nr, 2.0)
        w[0] = 1.0
        if n % 2 == 0:
            w[-1] = 1.0
        self.parseval_w = w
        x = np.arange(n) * (TWO_PI / n)
        self.X, self.Y = np.meshgrid(x, x, indexing="ij")

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n == self.n

    def __hash__(self):
        return hash(("Grid", self.n))

    def __repr__(self):
        return f"Grid(n={self.n}, k_max={self.k_max})"


@dataclass
class SpectralField:
    """Vector field as rfft2 coefficients, shape (2, n, n//2+1) complex.

    Treat instances as immutable values: operations return fresh arrays and
    never write into their inputs.
    """

    grid: Grid
    coeffs: np.ndarray
    divfree: bool = False

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.divfree)

    def _check_same_grid(self, other):
        if self.grid != other.grid:
            raise FieldError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check_same_grid(other)
        return SpectralField(
            self.grid, self.coeffs + other.coeffs, self.divfree and other.divfree
        )

    def __sub__(self, other):
        self._check_same_grid(other)
        return SpectralField(
            self.grid, self.coeffs - other.coeffs, self.divfree and other.divfree
        )

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * c, self.divfree)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.divfree)


def zero_field(grid: Grid, divfree: bool = True) -> SpectralField:
    return SpectralField(grid, np.zeros((2, grid.n, grid.nr), dtype=complex), divfree)


def from_physical(grid: Grid, values: np.ndarray, dealias: bool = True) -> SpectralField:
    """Transform a real (2, n, n) sample array to spectral coefficients."""
    values = np.asarray(values, dtype=float)
    if values.shape != (2, grid.n, grid.n):
        raise FieldError(f"expected shape (2, {grid.n}, {grid.n}), got {values.shape}")
    c = _fft.rfft2(values, axes=(-2, -1), norm="forward")
    if dealias:
        c *= grid.mask
    return SpectralField(grid, c, divfree=False)


def to_physical(f: SpectralField) -> np.ndarray:
    """Real (2, n, n) point values on the grid."""
    n = f.grid.n
    return _fft.irfft2(f.coeffs, s=(n, n), axes=(-2, -1), norm="forward")


def _project_divfree(grid: Grid, c: np.ndarray) -> np.ndarray:
    kd = grid.KX * c[0] + grid.KY * c[1]
    fac = kd / grid._k_sq_safe
    return np.stack((c[0] - grid.KX * fac, c[1] - grid.KY * fac))


def leray_project(f: SpectralField) -> SpectralField:
    """Orthogonal projection onto the dealiased divergence-free space.

    Mode-wise uhat <- uhat - k (k . uhat)/|k|^2 for k != 0; the mean mode is
    untouched; the dealiasing mask is applied.
    """
    c = f.coeffs * f.grid.mask
    return SpectralField(f.grid, _project_divfree(f.grid, c), divfree=True)


def advect(u: SpectralField, v: SpectralField, dealias: bool = True) -> SpectralField:
    """Pseudo-spectral advection term (u . grad) v.

    v is differentiated mode-wise, the products are formed pointwise on the
    grid, and the result is re-masked (unless dealias=False, which exists
    only to demonstrate the aliasing failure mode).  Not projected; compose
    with leray_project for the full term.
    """
    if u.grid != v.grid:
        raise FieldError(f"grid mismatch: {u.grid} vs {v.grid}")
    grid = u.grid
    uphys = to_physical(u)
    dv = np.empty((4, grid.n, grid.nr), dtype=complex)
    dv[0] = 1j * grid.KX * v.coeffs[0]
    dv[1] = 1j * grid.KY * v.coeffs[0]
    dv[2] = 1j * grid.KX * v.coeffs[1]
    dv[3] = 1j * grid.KY * v.coeffs[1]
    dvp = _fft.irfft2(dv, s=(grid.n, grid.n), axes=(-2, -1), norm="forward")
    w = np.stack(
        (
            uphys[0] * dvp[0] + uphys[1] * dvp[1],
            uphys[0] * dvp[2] + uphys[1] * dvp[3],
        )
    )
    c = _fft.rfft2(w, axes=(-2, -1), norm="forward")
    if dealias:
        c *= grid.mask
    return SpectralField(grid, c, divfree=False)


def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product over the torus via the Parseval sum."""
    if f.grid != g.grid:
        raise FieldError(f"grid mismatch: {f.grid} vs {g.grid}")
    w = f.grid.parseval_w
    s = np.sum(w * (np.conj(f.coeffs) * g.coeffs).real)
    return TWO_PI**2 * float(s)


def norm_l2(f: SpectralField) -> float:
    w = f.grid.parseval_w
    s = np.sum(w * (np.abs(f.coeffs) ** 2))
    return TWO_PI * math.sqrt(float(s))


def energy(f: SpectralField) -> float:
    """Squared L2 norm."""
    return norm_l2(f) ** 2


def max_abs(f: SpectralField) -> float:
    """Max pointwise speed on the grid."""
    p = to_physical(f)
    return float(np.sqrt(p[0] ** 2 + p[1] ** 2).max())


def _jacobian_physical(f: SpectralField) -> np.ndarray:
    grid = f.grid
    d = np.empty((4, grid.n, grid.nr), dtype=complex)
    d[0] = 1j * grid.KX * f.coeffs[0]  # d_x u1
    d[1] = 1j * grid.KY * f.coeffs[0]  # d_y u1
    d[2] = 1j * grid.KX * f.coeffs[1]  # d_x u2
    d[3] = 1j * grid.KY * f.coeffs[1]  # d_y u2
    return _fft.irfft2(d, s=(grid.n, grid.n), axes=(-2, -1), norm="forward")


def max_grad(f: SpectralField) -> float:
    """Max pointwise operator norm of the velocity Jacobian.

    This is the sharp constant in |(e . grad) u| <= max_grad(u) |e|; for a
    2x2 matrix the largest singular value has the closed form below.
    """
    p, r, q, s = _jacobian_physical(f)  # [[d_x u1, d_x u2], [d_y u1, d_y u2]]
    sig = 0.5 * (
        np.sqrt((p - s) ** 2 + (q + r) ** 2) + np.sqrt((p + s) ** 2 + (q - r) ** 2)
    )
    return float(sig.max())


def grad_norm_l2(f: SpectralField) -> float:
    """L2 norm of the full gradient (H1 seminorm)."""
    w = f.grid.parseval_w
    s = np.sum(w * f.grid.k_sq * (np.abs(f.coeffs) ** 2))
    return TWO_PI * math.sqrt(float(s))


def divergence_defect(f: SpectralField) -> float:
    """max_k |k . uhat(k)| relative to the coefficient l2 norm."""
    grid = f.grid
    kd = np.abs(grid.KX * f.coeffs[0] + grid.KY * f.coeffs[1])
    scale = math.sqrt(float(np.sum(grid.parseval_w * np.abs(f.coeffs) ** 2)))
    if scale == 0.0:
        return 0.0
    return float(kd.max()) / scale


def hermitian_defect(f: SpectralField) -> float:
    """Deviation from conjugate symmetry on the self-conjugate columns.

    Only the ky = 0 (and Nyquist, if unmasked) columns of the rfft layout
    can violate the real-field constraint; returns the max mismatch there
    relative to the coefficient scale.
    """
    grid = f.grid
    scale = float(np.abs(f.coeffs).max())
    if scale == 0.0:
        return 0.0
    worst = 0.0
    cols = [0] + ([grid.nr - 1] if grid.n % 2 == 0 else [])
    for col in cols:
        c = f.coeffs[:, :, col]
        mirrored = np.conj(c[:, (-np.arange(grid.n)) % grid.n])
        worst = max(worst, float(np.abs(c - mirrored).max()))
    return worst / scale


def skewness_defect(u: SpectralField, v: SpectralField, dealias: bool = True) -> float:
    """Normalized |<v, (u . grad) v>|; round-off-level when dealiased.

    The normalization max_abs(u) * ||v|| * ||grad v|| matches the natural
    size of the pairing, so the defect is dimensionless.
    """
    w = advect(u, v, dealias=dealias)
    num = abs(inner(v, w))
    den = max_abs(u) * norm_l2(v) * grad_norm_l2(v)
    if den == 0.0:
        return 0.0
    return num / den


def check_inverse_inequality(f: SpectralField) -> float:
    """max_i ||d_i f|| * dx / ||f||; at most 1 by construction, 0 for f = 0."""
    grid = f.grid
    w = grid.parseval_w
    e = float(np.sum(w * np.abs(f.coeffs) ** 2))
    if e == 0.0:
        return 0.0
    ex = float(np.sum(w * grid.KX**2 * np.abs(f.coeffs) ** 2))
    ey = float(np.sum(w * grid.KY**2 * np.abs(f.coeffs) ** 2))
    return math.sqrt(max(ex, ey) / e) * grid.dx


def _set_mode(c: np.ndarray, grid: Grid, kx: int, ky: int, value0: complex, value1: complex):
    # ky >= 0 required: the other half-plane is implicit in the rfft layout
    if ky < 0:
        raise ValueError("store modes with ky >= 0; the conjugate half is implicit")
    row = kx % grid.n
    c[0, row, ky] += value0
    c[1, row, ky] += value1


def taylor_green(grid: Grid, A0: float = 1.0) -> SpectralField:
    """Steady cellular vortex array u = A0 (sin x cos y, -cos x sin y).

    Exactly divergence-free mode by mode; both the peak speed and the peak
    Jacobian norm equal A0, and the squared L2 norm is 2 pi^2 A0^2.  Its
    advection term is a pure gradient, so the projected dynamics leave it
    fixed: a convenient steady base flow.
    """
    c = np.zeros((2, grid.n, grid.nr), dtype=complex)
    q = 0.25j * A0
    # sin x cos y -> -i/4 at (1,1) and (-1,1); -cos x sin y -> +i/4 at both
    _set_mode(c, grid, 1, 1, -q, q)
    _set_mode(c, grid, -1, 1, q, q)
    return SpectralField(grid, c, divfree=True)


def _field_from_stream(grid: Grid, modes: dict) -> SpectralField:
    """Velocity (d_y psi, -d_x psi) from stream-function modes {(kx,ky): coeff}."""
    c = np.zeros((2, grid.n, grid.nr), dtype=complex)
    for (kx, ky), p in modes.items():
        _set_mode(c, grid, kx, ky, 1j * ky * p, -1j * kx * p)
    return SpectralField(grid, c, divfree=True)


def vortex_pair(grid: Grid, A0: float = 1.0) -> SpectralField:
    """Non-steady two-vortex flow, normalized to peak speed A0.

    Superposes the cellular array with a half-amplitude companion at twice
    the horizontal wavenumber; the combined advection term has a nonzero
    divergence-free part, so the flow genuinely evolves.
    """
    modes = {
        (1, 1): -0.25,
        (-1, 1): 0.25,
        (2, 1): -0.125,
        (-2, 1): 0.125,
    }
    f = _field_from_stream(grid, modes)
    peak = max_abs(f)
    return SpectralField(grid, f.coeffs * (A0 / peak), divfree=True)


def random_divfree(
    grid: Grid,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    dealias: bool = True,
) -> SpectralField:
    """Random divergence-free field of unit-controlled L2 norm.

    Sampled as white noise on the grid, projected mode by mode.  With
    dealias=False the full resolvable band is kept (for aliasing demos).
    """
    raw = rng.standard_normal((2, grid.n, grid.n))
    c = _fft.rfft2(raw, axes=(-2, -1), norm="forward")
    if dealias:
        c *= grid.mask
    c[:, 0, 0] = 0.0
    f = SpectralField(grid, _project_divfree(grid, c), divfree=True)
    nrm = norm_l2(f)
    if nrm == 0.0:
        raise FieldError("degenerate random field")
    return SpectralField(grid, f.coeffs * (amplitude / nrm), divfree=True)


def inject_perturbation(
    grid: Grid,
    amplitude: float,
    rng: np.random.Generator | None = None,
    wavevector: tuple[int, int] | None = None,
) -> SpectralField:
    """Single divergence-free mode oscillating at the smallest retained scale.

    The wavevector defaults to (k_max, 1); its polarization is (-k2, k1), so
    the mode is exactly divergence-free, and it saturates the inverse
    inequality.  The phase is drawn from rng when given, else zero.  The
    L2 norm equals amplitude.
    """
    kx, ky = wavevector if wavevector is not None else (grid.k_max, 1)
    if max(abs(kx), abs(ky)) != grid.k_max:
        raise FieldError(
            f"wavevector {(kx, ky)} does not reach the smallest scale k_max={grid.k_max}"
        )
    if ky < 0:
        kx, ky = -kx, -ky
    norm_k = math.hypot(kx, ky)
    pol = (-ky / norm_k, kx / norm_k)
    phase = math.tau * rng.uniform() if rng is not None else 0.0
    # a single stored mode plus its implicit conjugate: ||f|| = 2 pi sqrt(2) |c|
    c_mag = amplitude / (TWO_PI * math.sqrt(2.0))
    cval = c_mag * complex(math.cos(phase), math.sin(phase))
    c = np.zeros((2, grid.n, grid.nr), dtype=complex)
    _set_mode(c, grid, kx, ky, cval * pol[0], cval * pol[1])
    return SpectralField(grid, c, divfree=True)


def save_field(path, f: SpectralField):
    """Plain-text snapshot: header plus one line per nonzero stored mode."""
    lines = [f"n {f.grid.n}", f"divfree {int(f.divfree)}"]
    idx = np.argwhere(np.abs(f.coeffs[0]) + np.abs(f.coeffs[1]) > 0.0)
    for row, col in idx:
        kx = int(f.grid.kx_int[row])
        ky = int(col)
        c0 = f.coeffs[0, row, col]
        c1 = f.coeffs[1, row, col]
        parts = [float(c0.real), float(c0.imag), float(c1.real), float(c1.imag)]
        lines.append(f"{kx} {ky} " + " ".join(repr(p) for p in parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> SpectralField:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise FieldError(f"{path}: not a field snapshot")
    grid = Grid(int(lines[0].split()[1]))
    divfree = bool(int(lines[1].split()[1]))
    c = np.zeros((2, grid.n, grid.nr), dtype=complex)
    for ln in lines[2:]:
        kx_s, ky_s, a, b, d, e = ln.split()
        row = int(kx_s) % grid.n
        col = int(ky_s)
        c[0, row, col] = complex(float(a), float(b))
        c[1, row, col] = complex(float(d), float(e))
    return SpectralField(grid, c, divfree)


def physical_samples(f: SpectralField, m: int | None = None):
    """Rows (x, y, u1, u2) on an m x m subsample of the grid, for plotting."""
    grid = f.grid
    m = grid.n if m is None else m
    if not 1 <= m <= grid.n or grid.n % m != 0:
        raise FieldError(f"sample count {m} must divide the grid size {grid.n}")
    stride = grid.n // m
    p = to_physical(f)
    rows = []
    for i in range(0, grid.n, stride):
        for j in range(0, grid.n, stride):
            rows.append((grid.X[i, j], grid.Y[i, j], p[0, i, j], p[1, i, j]))
    return rows
