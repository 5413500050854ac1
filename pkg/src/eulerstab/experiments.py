"""Perturbation-growth experiments: rates, bound checks, and CFL scans.

The measured object is the per-step amplification rho of a smallest-scale
perturbation riding on a steady cellular base flow.  A step size is judged
stable when rho <= 1 + cthresh * dt with cthresh = 2*A1 + 1 by default:
strictly above the base-gradient growth floor A1, with headroom, so the
verdict flips exactly when the smallest-scale amplification mechanism takes
over.  Bisecting the verdict over dt per grid and fitting log dt* against
log dx yields the empirical step-size exponent, which the rational
coefficient engine predicts independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .coeffs import StabilityProfile, compute_S, expand_perturbation, ab2_profile
from .schemes import ExplicitTableau, MultistepScheme, builtin
from .spectral import Grid, SpectralField, inject_perturbation, max_grad, norm_l2, taylor_green
from .stepping import (
    Ab2LinearizedStepper,
    BlowUpError,
    FlowState,
    LinearizedStepper,
    step,
    step_ab2,
)

__all__ = [
    "GrowthConfig",
    "GrowthResult",
    "BoundCheck",
    "ScanRow",
    "ScanResult",
    "BracketError",
    "scheme_profile",
    "measure_growth",
    "predicted_dt_threshold",
    "check_bound",
    "cfl_scan",
    "fit_exponent",
    "default_cthresh",
]

MODES = ("linearized", "nonlinear-difference")


class BracketError(RuntimeError):
    """Bisection bracket failure; carries the growth rates at both ends."""

    def __init__(self, message, lo_result=None, hi_result=None):
        super().__init__(message)
        self.lo_result = lo_result
        self.hi_result = hi_result


@dataclass(frozen=True)
class GrowthConfig:
    """Configuration of one perturbation-growth run."""

    scheme: str
    n: int
    dt: float
    T: float = 5.0
    A0: float = 1.0
    perturbation_rel: float = 1e-6
    renormalize: bool = True
    mode: str = "linearized"
    seed: int = 0
    max_steps: int | None = None
    min_steps: int | None = None

    def validate(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < 10 * self.dt:
            raise ValueError(f"horizon T={self.T} must be at least 10*dt={10 * self.dt}")
        if not 0 <= self.perturbation_rel <= 1e-4:
            raise ValueError(
                f"relative perturbation amplitude must be <= 1e-4, got {self.perturbation_rel}"
            )
        builtin(self.scheme)

    @property
    def steps(self) -> int:
        """Steps per run: nominally T/dt, clamped to [min_steps, max_steps].

        The cap keeps deep-bracket probes (T/dt can reach 1e9) affordable;
        the floor gives the rate estimator the same convergence budget on
        every grid, which would otherwise bias threshold comparisons across
        grids.  Both are honest re-interpretations of the horizon: the base
        flow is steady and the perturbation renormalized, so longer runs are
        well defined.
        """
        n = math.ceil(self.T / self.dt)
        if self.max_steps:
            n = min(n, self.max_steps)
        if self.min_steps:
            n = max(n, self.min_steps)
        return n


@dataclass(frozen=True)
class GrowthResult:
    """Outcome of a growth run: per-step rate, log-growth series, verdict data."""

    rho: float | None
    log_growth: tuple[float, ...]
    steps_run: int
    dt: float
    dx: float
    blew_up: bool = False
    blowup_step: int | None = None

    def stable_under(self, cthresh: float) -> bool:
        if self.blew_up or self.rho is None or not math.isfinite(self.rho):
            return False
        return self.rho <= 1.0 + cthresh * self.dt


def scheme_profile(scheme_id: str) -> StabilityProfile:
    """Stability profile of a built-in scheme (effective profile for ab2)."""
    s = builtin(scheme_id)
    if isinstance(s, MultistepScheme):
        return ab2_profile()
    return compute_S(expand_perturbation(s))


def default_cthresh(A1: float) -> float:
    return 2.0 * A1 + 1.0


def _measurement_window(n_steps: int) -> int:
    # discard the power-iteration transient before averaging
    return min(n_steps // 3, 200)


def _rho_from_logs(logs) -> float:
    arr = np.asarray(logs)
    if arr.size == 0:
        return 1.0
    w = _measurement_window(arr.size)
    return float(np.exp(arr[w:].mean()))


def _linearized_run(cfg: GrowthConfig, base, eps0, amp):
    scheme = builtin(cfg.scheme)
    if isinstance(scheme, MultistepScheme):
        stepper = Ab2LinearizedStepper(scheme, base, cfg.dt)
    else:
        stepper = LinearizedStepper(scheme, base, cfg.dt)
    eps = eps0
    prev = amp
    logs = []
    for m in range(1, cfg.steps + 1):
        try:
            eps = stepper.step(eps)
        except BlowUpError:
            return logs, True, m
        nrm = norm_l2(eps)
        if not math.isfinite(nrm):
            return logs, True, m
        if nrm == 0.0 and prev == 0.0:
            logs.append(0.0)
        else:
            logs.append(math.log(nrm / prev) if nrm > 0 else -math.inf)
        if cfg.renormalize and nrm > 0.0:
            factor = amp / nrm
            eps = eps * factor
            if hasattr(stepper, "rescale"):
                stepper.rescale(factor)
            prev = amp
        else:
            prev = nrm
    return logs, False, None


def _nonlinear_difference_run(cfg: GrowthConfig, base, eps0, amp):
    scheme = builtin(cfg.scheme)
    multistep = isinstance(scheme, MultistepScheme)

    def advance(state):
        return step_ab2(state, cfg.dt, scheme) if multistep else step(scheme, state, cfg.dt)

    ref = FlowState(base)
    pert = FlowState(base + eps0)
    prev = amp
    logs = []
    for m in range(1, cfg.steps + 1):
        try:
            ref = advance(ref)
            pert = advance(pert)
        except BlowUpError as exc:
            return logs, True, exc.step_index or m
        diff = pert.u - ref.u
        nrm = norm_l2(diff)
        if not math.isfinite(nrm):
            return logs, True, m
        if nrm == 0.0 and prev == 0.0:
            logs.append(0.0)
        else:
            logs.append(math.log(nrm / prev) if nrm > 0 else -math.inf)
        if cfg.renormalize and nrm > 0.0:
            factor = amp / nrm
            hist = None
            if pert.history is not None and ref.history is not None:
                hist = ref.history + (pert.history - ref.history) * factor
            pert = FlowState(ref.u + diff * factor, pert.t, hist)
            prev = amp
        else:
            prev = nrm
    return logs, False, None


def measure_growth(cfg: GrowthConfig) -> GrowthResult:
    """Evolve base flow plus perturbation; return the per-step growth rate.

    In linearized mode the perturbation is propagated by the frozen-base
    linear map; in nonlinear-difference mode two full solutions are evolved
    and their difference renormalized each step (log norms accumulate), so
    the measurement never saturates nonlinearly.  Runs are capped at
    cfg.max_steps when set; rho averages the per-step log growth after a
    short transient window.  A blow-up yields an unstable verdict carrying
    the step index instead of a rate.
    """
    cfg.validate()
    grid = Grid(cfg.n)
    base = taylor_green(grid, cfg.A0)
    rng = np.random.default_rng([cfg.seed, cfg.n])
    amp = cfg.perturbation_rel * norm_l2(base)
    if amp == 0.0:
        eps0 = inject_perturbation(grid, 1.0, rng=rng) * 0.0
    else:
        eps0 = inject_perturbation(grid, amp, rng=rng)
    run = _linearized_run if cfg.mode == "linearized" else _nonlinear_difference_run
    logs, blew_up, blow_step = run(cfg, base, eps0, amp)
    if blew_up:
        return GrowthResult(
            rho=None,
            log_growth=tuple(logs),
            steps_run=len(logs),
            dt=cfg.dt,
            dx=grid.dx,
            blew_up=True,
            blowup_step=blow_step,
        )
    return GrowthResult(
        rho=_rho_from_logs(logs),
        log_growth=tuple(logs),
        steps_run=len(logs),
        dt=cfg.dt,
        dx=grid.dx,
    )


def predicted_dt_threshold(
    profile: StabilityProfile, dx: float, A0: float, A1: float, cthresh: float
) -> float:
    """Step size where the predicted growth rate meets the verdict line.

    Solves A1 + S_r dt^(2r-1) A0^(2r) / (2 dx^(2r)) = cthresh for dt; only
    defined for profiles with a positive leading coefficient.
    """
    if profile.sign_r != 1:
        raise ValueError("threshold prediction requires a positive leading S_r")
    r = profile.r
    s_r = float(profile.S[r])
    excess = cthresh - A1
    if excess <= 0:
        raise ValueError(f"cthresh={cthresh} must exceed A1={A1}")
    return (2.0 * excess * dx ** (2 * r) / (s_r * A0 ** (2 * r))) ** (1.0 / (2 * r - 1))


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    rho: float | None
    bound: float
    dt: float
    r: int
    S_r: float
    A0: float
    A1: float
    slack: float


def check_bound(cfg: GrowthConfig, profile: StabilityProfile, slack: float = 0.25) -> BoundCheck:
    """Compare the measured rate against the one-step growth bound.

    bound = 1 + (A1 + S_r dt^(2r-1) A0^(2r) / (2 dx^(2r))) * dt * (1+slack);
    the measured rho must not exceed it.
    """
    if profile.sign_r != 1:
        raise ValueError("growth bound check requires a positive leading S_r")
    grid = Grid(cfg.n)
    base = taylor_green(grid, cfg.A0)
    a1 = max_grad(base)
    r = profile.r
    s_r = float(profile.S[r])
    rate = a1 + s_r * cfg.dt ** (2 * r - 1) * cfg.A0 ** (2 * r) / (2.0 * grid.dx ** (2 * r))
    bound = 1.0 + rate * cfg.dt * (1.0 + slack)
    res = measure_growth(cfg)
    passed = (not res.blew_up) and res.rho is not None and res.rho <= bound
    return BoundCheck(
        passed=passed,
        rho=res.rho,
        bound=bound,
        dt=cfg.dt,
        r=r,
        S_r=s_r,
        A0=cfg.A0,
        A1=a1,
        slack=slack,
    )


@dataclass(frozen=True)
class ScanRow:
    n: int
    k_max: int
    dx: float
    dt_star: float
    rho: float
    steps_run: int
    verdict: str = "stable"


@dataclass(frozen=True)
class ScanResult:
    scheme: str
    mode: str
    cthresh: float
    T: float
    seed: int
    max_steps: int | None
    min_steps: int | None
    bisect_iters: int
    rows: tuple[ScanRow, ...]
    fitted_exponent: float
    fitted_stderr: float
    predicted_exponent: float
    predicted_exponent_exact: str
    warnings: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "mode": self.mode,
            "cthresh": self.cthresh,
            "T": self.T,
            "seed": self.seed,
            "max_steps": self.max_steps,
            "min_steps": self.min_steps,
            "bisect_iters": self.bisect_iters,
            "rows": [
                {
                    "n": r.n,
                    "k_max": r.k_max,
                    "dx": r.dx,
                    "dt_star": r.dt_star,
                    "rho": r.rho,
                    "steps_run": r.steps_run,
                    "verdict": r.verdict,
                }
                for r in self.rows
            ],
            "fitted_exponent": self.fitted_exponent,
            "fitted_stderr": self.fitted_stderr,
            "predicted_exponent": self.predicted_exponent,
            "predicted_exponent_exact": self.predicted_exponent_exact,
            "warnings": list(self.warnings),
        }

    def csv_rows(self):
        return [
            (r.n, r.k_max, r.dx, r.dt_star, r.rho, r.verdict) for r in self.rows
        ]


def fit_exponent(rows) -> tuple[float, float]:
    """Least-squares slope of log dt* against log dx, with its standard error.

    rows: iterable of (dx, dt_star) pairs; at least three are required.
    """
    pts = [(math.log(dx), math.log(dt)) for dx, dt in rows]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 rows to fit an exponent, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - (ym + slope * (x - xm))
    dof = len(pts) - 2
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr


def _bisect_grid(cfg_template: GrowthConfig, n: int, cthresh: float, iters: int):
    """Log-space bisection of the stability verdict over dt for one grid."""
    grid = Grid(n)
    dx = grid.dx
    # high end clamped so every probe honors the T >= 10*dt run invariant
    lo, hi = 1e-5 * dx * dx, min(10.0 * dx, cfg_template.T / 10.0)
    if lo >= hi:
        raise BracketError(f"n={n}: empty bracket [{lo:.3e}, {hi:.3e}]")

    probes = []

    def verdict(dt):
        res = measure_growth(replace(cfg_template, n=n, dt=dt))
        stable = res.stable_under(cthresh)
        probes.append((dt, res, stable))
        return res, stable

    lo_res, lo_ok = verdict(lo)
    hi_res, hi_ok = verdict(hi)
    if not lo_ok or hi_ok:
        raise BracketError(
            f"n={n}: bracket [{lo:.3e}, {hi:.3e}] does not straddle the threshold "
            f"(lo rho={lo_res.rho}, lo blew_up={lo_res.blew_up}; "
            f"hi rho={hi_res.rho}, hi blew_up={hi_res.blew_up})",
            lo_result=lo_res,
            hi_result=hi_res,
        )
    best = lo_res
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        res, ok = verdict(mid)
        if ok:
            lo, best = mid, res
        else:
            hi = mid
    warnings = []
    finite = [(dt, r.rho) for dt, r, _ in probes if r.rho is not None]
    finite.sort()
    for (dt_a, rho_a), (dt_b, rho_b) in zip(finite, finite[1:]):
        if rho_b < rho_a * (1.0 - 0.05):
            warnings.append(
                f"n={n}: rate not monotone over dt ({rho_a:.6f}@{dt_a:.3e} -> "
                f"{rho_b:.6f}@{dt_b:.3e}); consider a longer horizon"
            )
    row = ScanRow(
        n=n,
        k_max=grid.k_max,
        dx=dx,
        dt_star=lo,
        rho=best.rho,
        steps_run=best.steps_run,
    )
    return row, warnings


def cfl_scan(
    scheme: str,
    grid_sizes,
    T: float = 5.0,
    A0: float = 1.0,
    cthresh: float | None = None,
    mode: str = "linearized",
    seed: int = 0,
    max_steps: int | None = 800,
    min_steps: int | None = 400,
    bisect_iters: int = 20,
    perturbation_rel: float = 1e-6,
) -> ScanResult:
    """Largest stable dt per grid, then the fitted step-size exponent.

    For each grid the verdict is bisected over dt in [1e-5 dx^2, 10 dx]
    (geometric midpoints); dt* is the largest step judged stable under
    rho <= 1 + cthresh dt.  The exponent is the least-squares slope of
    log dt* against log dx, reported next to the coefficient-engine
    prediction.  Deterministic for fixed configuration and seed.
    """
    ns = sorted(set(int(n) for n in grid_sizes))
    if len(ns) < 4:
        raise ValueError(f"need at least 4 grid sizes, got {ns}")
    profile = scheme_profile(scheme)
    if cthresh is None:
        cthresh = default_cthresh(A0)  # steady base flow has A1 = A0
    template = GrowthConfig(
        scheme=scheme,
        n=ns[0],
        dt=1.0,
        T=T,
        A0=A0,
        perturbation_rel=perturbation_rel,
        renormalize=True,
        mode=mode,
        seed=seed,
        max_steps=max_steps,
        min_steps=min_steps,
    )
    rows = []
    warnings: list[str] = []
    for n in ns:
        row, warns = _bisect_grid(template, n, cthresh, bisect_iters)
        rows.append(row)
        warnings.extend(warns)
    rows.sort(key=lambda r: -r.dx)
    slope, stderr = fit_exponent([(r.dx, r.dt_star) for r in rows])
    predicted = profile.cfl_exponent
    return ScanResult(
        scheme=scheme,
        mode=mode,
        cthresh=cthresh,
        T=T,
        seed=seed,
        max_steps=max_steps,
        bisect_iters=bisect_iters,
        rows=tuple(rows),
        fitted_exponent=slope,
        fitted_stderr=stderr,
        predicted_exponent=float(predicted) if predicted is not None else math.nan,
        predicted_exponent_exact=str(predicted) if predicted is not None else "",
        warnings=tuple(warnings),
    )
