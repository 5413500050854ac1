"""Report artifacts: atomic CSV/JSON writers and the matplotlib figures
rendered alongside them."""

from __future__ import annotations

import json
import math
import os
import tempfile


def _atomic_write_text(path, text: str):
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _cell(x):
    if isinstance(x, float):  # includes numpy scalars; normalize the repr
        return repr(float(x))
    return str(x)


def write_json(path, obj):
    _atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def amplification_figure(path, rows, label, s_values=None, theta_star=None):
    """|xi|^2 against theta, with the stability-polynomial overlay."""
    plt = _plt()
    thetas = [r[0] for r in rows]
    mods = [r[3] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(thetas, mods, "-", color="tab:blue", label=r"$|\xi|^2$")
    if s_values is not None:
        ax.plot(thetas, s_values, "--", color="tab:orange", label="coefficient polynomial")
    ax.axhline(1.0, color="0.6", lw=0.8)
    if theta_star is not None:
        ax.axvline(theta_star, color="tab:red", lw=0.8, ls=":", label=rf"$\theta^*$={theta_star:.4f}")
    ax.set_xlabel(r"$\theta = \delta t\, a\cdot\zeta$")
    ax.set_ylabel("squared amplification")
    ax.set_title(f"amplification factor: {label}")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def scan_figure(path, scan):
    """Log-log threshold step sizes with the fitted and predicted slopes."""
    plt = _plt()
    dx = [r.dx for r in scan.rows]
    dt = [r.dt_star for r in scan.rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(dx, dt, "o", color="tab:blue", label=r"measured $\delta t^*$")
    lx = [math.log(v) for v in dx]
    ly = [math.log(v) for v in dt]
    xm = sum(lx) / len(lx)
    ym = sum(ly) / len(ly)
    xs = [min(dx), max(dx)]
    fit = [math.exp(ym + scan.fitted_exponent * (math.log(v) - xm)) for v in xs]
    ax.loglog(xs, fit, "-", color="tab:orange",
              label=f"fit: slope {scan.fitted_exponent:.3f}")
    if math.isfinite(scan.predicted_exponent):
        pred = [math.exp(ym + scan.predicted_exponent * (math.log(v) - xm)) for v in xs]
        ax.loglog(xs, pred, "--", color="0.4",
                  label=f"predicted slope {scan.predicted_exponent:.3f}")
    ax.set_xlabel(r"$\delta x = 1/k_{\max}$")
    ax.set_ylabel(r"largest stable $\delta t$")
    ax.set_title(f"step-size threshold scan: {scan.scheme}")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def trajectory_figure(path, rows, label):
    """Energy and peak speed against time; perturbation norm when tracked."""
    plt = _plt()
    t = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, [r[1] for r in rows], "-", color="tab:blue", label="energy")
    ax.plot(t, [r[2] for r in rows], "-", color="tab:green", label="max speed")
    ax.set_xlabel("t")
    ax.set_ylabel("energy / speed")
    if len(rows[0]) > 3:
        ax2 = ax.twinx()
        ax2.semilogy(t, [r[3] for r in rows], "-", color="tab:red", label="perturbation")
        ax2.set_ylabel("perturbation norm")
        ax2.legend(loc="lower right", fontsize=8)
    ax.set_title(f"trajectory: {label}")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def skew_figure(path, defects, control=None, threshold=1e-10):
    """Skewness defects per trial on a log scale, with the aliased control."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(range(1, len(defects) + 1), defects, "o", color="tab:blue",
                label="dealiased pairs")
    if control is not None:
        ax.axhline(control, color="tab:red", ls="-.", lw=1.0,
                   label="no-dealiasing control")
    ax.axhline(threshold, color="0.4", ls="--", lw=0.8, label="tolerance")
    ax.set_xlabel("trial")
    ax.set_ylabel("normalized skewness defect")
    ax.set_title("discrete skewness check")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
