"""Time integration of spectral fields: full steps and linearized steps.

The stage tableaus execute exactly as written, with the minus sign on the
b-weighted advection terms applied here; every advection term is projected
onto the dealiased divergence-free space, so all stages stay divergence-free
up to round-off.

The linearized step propagates a perturbation about a frozen base flow,
keeping exactly the two first-order term families of the amplification
expansion: repeated frozen-base advections of the perturbation, and a single
base-gradient coupling term evaluated on the incoming perturbation.  This
makes the step agree with the rational alpha/beta coefficients to round-off,
which is the executable bridge between the solver and the coefficient engine.
Genuinely second-order interactions (perturbation-perturbation, and the
mixed stage products) are deliberately not modeled; the finite-difference
tests quantify them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from .schemes import ExplicitTableau, MultistepScheme, builtin
from .spectral import (
    FieldError,
    SpectralField,
    advect,
    energy,
    leray_project,
    max_abs,
    norm_l2,
    to_physical,
)

__all__ = [
    "BlowUpError",
    "FlowState",
    "step",
    "step_ab2",
    "nonlinear_term",
    "linearized_step",
    "LinearizedStepper",
    "Ab2LinearizedStepper",
    "simulate_trajectory",
    "TrajectoryResult",
]

BLOWUP_NORM_RATIO = 1e6


class BlowUpError(RuntimeError):
    """A stage produced non-finite values or runaway norm growth."""

    def __init__(self, message, stage=None, step_index=None):
        super().__init__(message)
        self.stage = stage
        self.step_index = step_index


@dataclass(frozen=True)
class FlowState:
    """Solution snapshot: field, time, and (for ab2) the previous advection term."""

    u: SpectralField
    t: float = 0.0
    history: SpectralField | None = None


def nonlinear_term(u: SpectralField) -> SpectralField:
    """Projected advection term N(u) = P[(u . grad) u]."""
    return leray_project(advect(u, u))


def _check_stage(coeffs, ref_norm, stage, step_index=None):
    if not np.all(np.isfinite(coeffs)):
        raise BlowUpError(
            f"non-finite values at stage {stage}", stage=stage, step_index=step_index
        )
    nrm = float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))
    if nrm > BLOWUP_NORM_RATIO * max(ref_norm, 1e-300):
        raise BlowUpError(
            f"norm ratio {nrm / max(ref_norm, 1e-300):.3e} at stage {stage}",
            stage=stage,
            step_index=step_index,
        )


def step(scheme: ExplicitTableau, s: FlowState, dt: float) -> FlowState:
    """Advance one step of a stage tableau; raises BlowUpError on divergence."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = s.u.grid
    ref = float(np.sqrt(np.sum(np.abs(s.u.coeffs) ** 2)))
    states = [s.u.coeffs]
    terms: dict[int, np.ndarray] = {}

    def term(i):
        if i not in terms:
            f = SpectralField(grid, states[i], divfree=True)
            terms[i] = nonlinear_term(f).coeffs
        return terms[i]

    for l in range(1, scheme.k + 1):
        arow, brow = scheme.a[l - 1], scheme.b[l - 1]
        c = np.zeros_like(states[0])
        for i, af in enumerate(arow):
            if af:
                c += float(af) * states[i]
        for i, bf in enumerate(brow):
            if bf:
                c -= dt * float(bf) * term(i)
        _check_stage(c, ref, l)
        states.append(c)
    return FlowState(SpectralField(grid, states[-1], divfree=True), s.t + dt, None)


def step_ab2(s: FlowState, dt: float, scheme: MultistepScheme | None = None) -> FlowState:
    """Advance one Adams-Bashforth 2 step.

    The first call (no history yet) runs the scheme's one-step startup and
    records the advection term of the starting state; later calls apply the
    two-step weights directly.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    scheme = scheme if scheme is not None else builtin("ab2")
    grid = s.u.grid
    n_now = nonlinear_term(s.u)
    if s.history is None:
        started = step(scheme.startup, s, dt)
        return FlowState(started.u, started.t, n_now)
    if s.history.grid != grid:
        raise FieldError("history grid does not match the current field")
    w0, w1 = (float(w) for w in scheme.weights)
    ref = float(np.sqrt(np.sum(np.abs(s.u.coeffs) ** 2)))
    c = s.u.coeffs - dt * (w0 * n_now.coeffs + w1 * s.history.coeffs)
    _check_stage(c, ref, 1)
    return FlowState(SpectralField(grid, c, divfree=True), s.t + dt, n_now)


class LinearizedStepper:
    """Perturbation propagator about a frozen, divergence-free base flow.

    Precomputes the base velocity and its Jacobian on the grid so repeated
    steps cost only the perturbation transforms.  The per-step map is linear
    and fixed, so rescaling the perturbation commutes with stepping.
    """

    def __init__(self, scheme: ExplicitTableau, base: SpectralField, dt: float):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.scheme = scheme
        self.grid = base.grid
        self.dt = dt
        self._uphys = to_physical(base)
        # base Jacobian entries d_i u_j, used by the coupling term
        g = self.grid
        d = np.empty((4, g.n, g.nr), dtype=complex)
        d[0] = 1j * g.KX * base.coeffs[0]
        d[1] = 1j * g.KY * base.coeffs[0]
        d[2] = 1j * g.KX * base.coeffs[1]
        d[3] = 1j * g.KY * base.coeffs[1]
        self._gradphys = _fft.irfft2(d, s=(g.n, g.n), axes=(-2, -1), norm="forward")
        # rational beta recursion evaluated once: the coupling weight
        from .coeffs import expand_perturbation

        self._beta = float(expand_perturbation(scheme).beta)

    def _advect_base(self, c: np.ndarray) -> np.ndarray:
        """P[(u_base . grad) e] for perturbation coefficients e."""
        g = self.grid
        d = np.empty((4, g.n, g.nr), dtype=complex)
        d[0] = 1j * g.KX * c[0]
        d[1] = 1j * g.KY * c[0]
        d[2] = 1j * g.KX * c[1]
        d[3] = 1j * g.KY * c[1]
        dp = _fft.irfft2(d, s=(g.n, g.n), axes=(-2, -1), norm="forward")
        u = self._uphys
        w = np.stack((u[0] * dp[0] + u[1] * dp[1], u[0] * dp[2] + u[1] * dp[3]))
        ch = _fft.rfft2(w, axes=(-2, -1), norm="forward")
        ch *= g.mask
        from .spectral import _project_divfree

        return _project_divfree(g, ch)

    def coupling_term(self, c: np.ndarray) -> np.ndarray:
        """P[(e . grad) u_base] for perturbation coefficients e."""
        g = self.grid
        ep = _fft.irfft2(c, s=(g.n, g.n), axes=(-2, -1), norm="forward")
        gp = self._gradphys
        w = np.stack((ep[0] * gp[0] + ep[1] * gp[1], ep[0] * gp[2] + ep[1] * gp[3]))
        ch = _fft.rfft2(w, axes=(-2, -1), norm="forward")
        ch *= g.mask
        from .spectral import _project_divfree

        return _project_divfree(g, ch)

    def step_coeffs(self, c: np.ndarray) -> np.ndarray:
        dt = self.dt
        states = [c]
        advected: dict[int, np.ndarray] = {}

        def adv(i):
            if i not in advected:
                advected[i] = self._advect_base(states[i])
            return advected[i]

        for l in range(1, self.scheme.k + 1):
            arow, brow = self.scheme.a[l - 1], self.scheme.b[l - 1]
            acc = np.zeros_like(c)
            for i, af in enumerate(arow):
                if af:
                    acc += float(af) * states[i]
            for i, bf in enumerate(brow):
                if bf:
                    acc -= dt * float(bf) * adv(i)
            states.append(acc)
        out = states[-1] - dt * self._beta * self.coupling_term(c)
        if not np.all(np.isfinite(out)):
            raise BlowUpError("non-finite perturbation", stage=self.scheme.k)
        return out

    def step(self, eps: SpectralField) -> SpectralField:
        if eps.grid != self.grid:
            raise FieldError(f"grid mismatch: {eps.grid} vs {self.grid}")
        return SpectralField(self.grid, self.step_coeffs(eps.coeffs), divfree=True)


class Ab2LinearizedStepper:
    """Two-step linearized propagator; keeps the previous linearized term.

    q(e) = P[(u . grad) e] + P[(e . grad) u] is the full linearized advection
    about the frozen base; the update subtracts dt * (w0 q_n + w1 q_{n-1}).
    The first step runs the startup tableau and seeds the history.  rescale()
    must scale the history together with the perturbation to keep the
    homogeneous dynamics consistent.
    """

    def __init__(self, scheme: MultistepScheme, base: SpectralField, dt: float):
        self.scheme = scheme
        self.dt = dt
        self.grid = base.grid
        self._inner = LinearizedStepper(scheme.startup, base, dt)
        self._w = tuple(float(w) for w in scheme.weights)
        self._q_prev: np.ndarray | None = None

    def _q(self, c: np.ndarray) -> np.ndarray:
        return self._inner._advect_base(c) + self._inner.coupling_term(c)

    def step(self, eps: SpectralField) -> SpectralField:
        c = eps.coeffs
        q_now = self._q(c)
        if self._q_prev is None:
            out = self._inner.step_coeffs(c)
        else:
            w0, w1 = self._w
            out = c - self.dt * (w0 * q_now + w1 * self._q_prev)
        self._q_prev = q_now
        if not np.all(np.isfinite(out)):
            raise BlowUpError("non-finite perturbation", stage=1)
        return SpectralField(self.grid, out, divfree=True)

    def rescale(self, factor: float):
        if self._q_prev is not None:
            self._q_prev = self._q_prev * factor


def linearized_step(
    scheme: ExplicitTableau,
    u_frozen: SpectralField,
    eps: SpectralField,
    dt: float,
) -> SpectralField:
    """One linearized step of a tableau about the frozen base flow."""
    return LinearizedStepper(scheme, u_frozen, dt).step(eps)


@dataclass
class TrajectoryResult:
    rows: list
    final: FlowState | None
    blew_up: bool = False
    blowup_step: int | None = None
    message: str = ""


def simulate_trajectory(
    scheme,
    state0: FlowState,
    dt: float,
    n_steps: int,
    eps0: SpectralField | None = None,
) -> TrajectoryResult:
    """Run a trajectory, logging (t, energy, max_abs[, perturbation norm]).

    With eps0 given, a linearized perturbation is propagated alongside, the
    propagator being refrozen at the current base flow before each step
    (one-step schemes only: the two-step linearization needs persistent
    history and lives in the growth experiments).  On blow-up the rows
    collected so far are returned with the step index.
    """
    multistep = isinstance(scheme, MultistepScheme)
    if multistep and eps0 is not None:
        raise ValueError("perturbation tracking is only supported for one-step schemes")
    state = state0
    eps = eps0

    def row(st, e):
        base = (st.t, energy(st.u), max_abs(st.u))
        return base + ((norm_l2(e),) if e is not None else ())

    rows = [row(state, eps)]
    for m in range(1, n_steps + 1):
        try:
            if eps is not None:
                eps = LinearizedStepper(scheme, state.u, dt).step(eps)
            state = step_ab2(state, dt, scheme) if multistep else step(scheme, state, dt)
        except BlowUpError as exc:
            return TrajectoryResult(
                rows, None, blew_up=True, blowup_step=m, message=str(exc)
            )
        rows.append(row(state, eps))
    return TrajectoryResult(rows, state)
