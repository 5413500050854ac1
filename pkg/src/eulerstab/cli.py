"""Command-line front end.

Subcommands: coeffs, vn, skew-check, simulate, cfl-scan.  Every run writes
its delimited outputs (and figures, on the report paths) under --out-dir and
records them in a JSON manifest.  Exit status is 0 exactly when all requested
verdicts pass.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .coeffs import (
    compute_S,
    expand_perturbation,
    expansion_json_dict,
    profile_json_dict,
    taylor_alpha,
)
from .schemes import (
    BUILTIN_NAMES,
    ExplicitTableau,
    MultistepScheme,
    SchemeError,
    TaylorScheme,
    builtin,
    parse_tableau,
)
from . import experiments, reports, vonneumann
from .spectral import (
    Grid,
    inject_perturbation,
    norm_l2,
    random_divfree,
    skewness_defect,
    taylor_green,
    vortex_pair,
)
from .stepping import FlowState, simulate_trajectory


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


class Run:
    """Collects output paths and configuration for the manifest."""

    def __init__(self, args, command):
        self.command = command
        self.out_dir = args.out_dir
        os.makedirs(self.out_dir, exist_ok=True)
        self.config = {k: v for k, v in vars(args).items() if k != "func"}
        self.outputs = []

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.outputs.append(p)
        return p

    def finish(self):
        manifest = {
            "command": self.command,
            "version": __version__,
            "timestamp": _timestamp(),
            "config": self.config,
            "outputs": self.outputs,
        }
        path = os.path.join(self.out_dir, f"{self.command}_manifest.json")
        reports.write_json(path, manifest)
        return path


def _fmt_fraction(x):
    return f"{x} ({float(x):.10g})"


def _load_scheme(args):
    if args.taylor is not None:
        return TaylorScheme(args.taylor)
    if args.tableau_file is not None:
        with open(args.tableau_file) as fh:
            return parse_tableau(fh.read())
    if args.scheme is None:
        raise SchemeError("give a scheme name, --taylor M, or --tableau-file PATH")
    return builtin(args.scheme)


def cmd_coeffs(args) -> int:
    run = Run(args, "coeffs")
    scheme = _load_scheme(args)
    if isinstance(scheme, TaylorScheme):
        expansion = taylor_alpha(scheme)
        label = expansion.label
    elif isinstance(scheme, MultistepScheme):
        from .coeffs import ab2_expansion

        expansion = ab2_expansion()
        label = scheme.name
        print("note: two-step scheme; coefficients are the principal-root expansion")
    else:
        expansion = expand_perturbation(scheme)
        label = scheme.name
    profile = compute_S(expansion)
    print(f"scheme {label} (k={expansion.k})")
    print("alpha:", ", ".join(_fmt_fraction(a) for a in expansion.alpha))
    print("beta :", _fmt_fraction(expansion.beta))
    for l, s in enumerate(profile.S):
        print(f"  S_{l} = {_fmt_fraction(s)}")
    if profile.r is None:
        print("no surviving growth coefficient: no step-size prediction")
    else:
        sign = "+" if profile.sign_r > 0 else "-"
        print(f"first nonzero index r = {profile.r} (sign {sign})")
        if profile.sign_r > 0:
            print(f"predicted step-size exponent: {_fmt_fraction(profile.cfl_exponent)}")
        else:
            print("leading coefficient negative: classical linear restriction (exponent 1)")
    payload = {
        "expansion": expansion_json_dict(expansion),
        "profile": profile_json_dict(profile),
    }
    reports.write_json(run.path(f"coeffs_{label}.json"), payload)
    if args.format == "csv":
        rows = [(l, str(s), float(s)) for l, s in enumerate(profile.S)]
        reports.write_csv(run.path(f"coeffs_{label}.csv"), ("l", "S_l", "S_l_float"), rows)
    run.finish()
    return 0


def cmd_vn(args) -> int:
    run = Run(args, "vn")
    scheme = _load_scheme(args)
    thetas = np.linspace(0.0, args.theta_max, args.samples)
    theta_star = None
    s_values = None
    if isinstance(scheme, MultistepScheme):
        rows = vonneumann.sample_curve(scheme, thetas)
        label = scheme.name
        coef = vonneumann.richardson_growth_coefficient(scheme)
        print(f"{label}: quartic growth coefficient (Richardson) = {coef:.8f}")
    else:
        expansion = (
            taylor_alpha(scheme)
            if isinstance(scheme, TaylorScheme)
            else expand_perturbation(scheme)
        )
        label = expansion.label
        rows = vonneumann.sample_curve(expansion, thetas)
        profile = compute_S(expansion)
        s_values = [vonneumann.s_polynomial_value(profile.S, t) for t in thetas]
        dev = vonneumann.check_modulus_identity(expansion, [t for t in thetas if t > 0] or [0.5])
        print(f"{label}: max deviation |xi|^2 vs coefficient polynomial = {dev:.3e}")
        if profile.sign_r == -1:
            theta_star = vonneumann.find_unit_modulus_return(expansion)
            print(f"{label}: |xi| returns to 1 at theta* = {theta_star:.12f}")
    csv_path = run.path(f"vn_{label}.csv")
    reports.write_csv(csv_path, ("theta", "re_xi", "im_xi", "modulus_sq"), rows)
    if args.format == "json":
        reports.write_json(
            run.path(f"vn_{label}.json"),
            [{"theta": r[0], "re_xi": r[1], "im_xi": r[2], "modulus_sq": r[3]} for r in rows],
        )
    reports.amplification_figure(
        run.path(f"vn_{label}.png"), rows, label, s_values=s_values, theta_star=theta_star
    )
    run.finish()
    return 0


def cmd_skew_check(args) -> int:
    run = Run(args, "skew-check")
    grid = Grid(args.n)
    rng = np.random.default_rng(args.seed)
    base = taylor_green(grid, 1.0)
    defects = []
    for _ in range(args.trials):
        v = random_divfree(grid, rng)
        defects.append(skewness_defect(base, v))
    threshold = 1e-10
    u_alias = random_divfree(grid, rng, dealias=False)
    v_alias = random_divfree(grid, rng, dealias=False)
    control = skewness_defect(u_alias, v_alias, dealias=False)
    worst = max(defects)
    ok = worst <= threshold and control > threshold
    print(f"skewness defect over {args.trials} dealiased pairs: max = {worst:.3e}")
    print(f"no-dealiasing control: {control:.3e}")
    print("verdict:", "PASS" if ok else "FAIL")
    rows = [(i + 1, d, "dealiased") for i, d in enumerate(defects)]
    rows.append((0, control, "aliased-control"))
    reports.write_csv(run.path("skew_check.csv"), ("trial", "defect", "kind"), rows)
    reports.skew_figure(run.path("skew_check.png"), defects, control=control, threshold=threshold)
    run.finish()
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    run = Run(args, "simulate")
    scheme = builtin(args.scheme)
    grid = Grid(args.n)
    ic = taylor_green(grid, args.a0) if args.ic == "taylor-green" else vortex_pair(grid, args.a0)
    eps0 = None
    if args.track_perturbation:
        rng = np.random.default_rng(args.seed)
        eps0 = inject_perturbation(grid, 1e-6 * norm_l2(ic), rng=rng)
    n_steps = max(1, math.ceil(args.T / args.dt))
    result = simulate_trajectory(scheme, FlowState(ic), args.dt, n_steps, eps0=eps0)
    header = ("t", "energy", "max_abs") + (("perturbation_norm",) if eps0 is not None else ())
    label = f"{args.scheme}_n{args.n}"
    reports.write_csv(run.path(f"traj_{label}.csv"), header, result.rows)
    reports.trajectory_figure(run.path(f"traj_{label}.png"), result.rows, args.scheme)
    e0, e1 = result.rows[0][1], result.rows[-1][1]
    if result.blew_up:
        print(f"BLOW-UP at step {result.blowup_step}: {result.message}")
    else:
        print(f"ran {n_steps} steps to t = {result.final.t:.6g}")
        print(f"energy drift: {abs(e1 - e0) / e0:.3e} relative")
    run.finish()
    return 1 if result.blew_up else 0


def cmd_cfl_scan(args) -> int:
    run = Run(args, "cfl-scan")
    grids = [int(tok) for tok in args.grids.split(",")]
    scan = experiments.cfl_scan(
        args.scheme,
        grids,
        T=args.horizon,
        A0=args.a0,
        cthresh=args.cthresh,
        mode=args.mode,
        seed=args.seed,
        max_steps=args.max_steps,
        bisect_iters=args.bisect_iters,
    )
    print(f"scheme {args.scheme}: rule rho <= 1 + {scan.cthresh:g} dt, mode {scan.mode}")
    print(f"{'n':>6} {'k_max':>6} {'dx':>12} {'dt*':>14} {'rho':>12}")
    for r in scan.rows:
        print(f"{r.n:>6} {r.k_max:>6} {r.dx:>12.6g} {r.dt_star:>14.8g} {r.rho:>12.8g}")
    print(
        f"fitted exponent {scan.fitted_exponent:.4f} +- {scan.fitted_stderr:.4f}   "
        f"predicted {scan.predicted_exponent:.4f} ({scan.predicted_exponent_exact})"
    )
    for w in scan.warnings:
        print("warning:", w)
    label = f"scan_{args.scheme}"
    reports.write_csv(
        run.path(f"{label}.csv"),
        ("n", "k_max", "dx", "dt_star", "rho", "verdict"),
        scan.csv_rows(),
    )
    reports.write_json(run.path(f"{label}.json"), scan.to_json_dict())
    loglog = [
        (math.log10(r.dx), math.log10(r.dt_star)) for r in scan.rows
    ]
    reports.write_csv(run.path(f"{label}_loglog.csv"), ("log10_dx", "log10_dt_star"), loglog)
    reports.scan_figure(run.path(f"{label}.png"), scan)
    run.finish()
    ok = abs(scan.fitted_exponent - scan.predicted_exponent) <= args.exponent_tol
    print("verdict:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _add_scheme_selector(p, positional_optional=False):
    p.add_argument(
        "scheme",
        nargs="?" if positional_optional else None,
        default=None if positional_optional else argparse.SUPPRESS,
        help=f"built-in scheme id: {', '.join(BUILTIN_NAMES)}",
    )
    p.add_argument("--taylor", type=int, default=None, metavar="M",
                   help="use the order-M Taylor truncation instead")
    p.add_argument("--tableau-file", default=None, metavar="PATH",
                   help="load a stage tableau from the plain-text format")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="eulerstab",
        description="Stability laboratory for explicit time steppers on "
        "the incompressible Euler equations.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    common.add_argument("--out-dir", default="out", help="artifact directory (default ./out)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="extra machine-readable summary format (default csv)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", parents=[common],
                       help="exact amplification and stability coefficients")
    _add_scheme_selector(p, positional_optional=True)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("vn", parents=[common],
                       help="amplification factor sweep over theta")
    _add_scheme_selector(p, positional_optional=True)
    p.add_argument("--theta-max", type=float, default=3.2)
    p.add_argument("--samples", type=int, default=161)
    p.set_defaults(func=cmd_vn)

    p = sub.add_parser("skew-check", parents=[common],
                       help="discrete skewness identity on random field pairs")
    p.add_argument("n", type=int, help="grid size (power of two)")
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_skew_check)

    p = sub.add_parser("simulate", parents=[common], help="full nonlinear trajectory")
    p.add_argument("scheme")
    p.add_argument("n", type=int)
    p.add_argument("dt", type=float)
    p.add_argument("T", type=float)
    p.add_argument("--ic", choices=("taylor-green", "vortex-pair"), default="taylor-green")
    p.add_argument("--a0", type=float, default=1.0, help="base-flow amplitude (default 1)")
    p.add_argument("--track-perturbation", action="store_true",
                   help="propagate a linearized smallest-scale perturbation alongside")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cfl-scan", parents=[common],
                       help="bisect the stable step per grid and fit the exponent")
    p.add_argument("scheme")
    p.add_argument("--grids", default="32,64,128,256",
                   help="comma-separated grid sizes (default 32,64,128,256)")
    p.add_argument("--horizon", type=float, default=5.0, metavar="T",
                   help="growth-run horizon in time units (default 5)")
    p.add_argument("--cthresh", type=float, default=None,
                   help="stability rule rho <= 1 + cthresh*dt (default 2*A1+1)")
    p.add_argument("--mode", choices=experiments.MODES, default="linearized")
    p.add_argument("--a0", type=float, default=1.0, help="base-flow amplitude (default 1)")
    p.add_argument("--max-steps", type=int, default=800,
                   help="cap on steps per growth verdict (default 800)")
    p.add_argument("--bisect-iters", type=int, default=20)
    p.add_argument("--exponent-tol", type=float, default=0.2,
                   help="pass verdict when |fitted - predicted| <= tol (default 0.2)")
    p.set_defaults(func=cmd_cfl_scan)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemeError, ValueError, experiments.BracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
