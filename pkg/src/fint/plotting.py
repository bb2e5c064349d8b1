"""Figures for the report path.  Everything renders to files with the Agg backend."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import gamma_poisson as gp  # noqa: E402
from . import gaussian as ga  # noqa: E402
from . import symplectic as sy  # noqa: E402
from .core import TimeGrid  # noqa: E402

golden = (math.sqrt(5) - 1.0) / 2.0
fig_width = 4.5
colors = ["#08589e", "#2b8cbe", "#4eb3d3", "#7bccc4", "#a8ddb5"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.family": "serif",
    "font.size": 8,
    "mathtext.fontset": "stix",
    "legend.fontsize": 7,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden],
    "figure.dpi": 150,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
    "savefig.bbox": "tight",
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def delta_limit_decay(path: Path) -> Path:
    big = np.linspace(10.0, 100.0, 10)
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        for zp in (0.3, 0.5, 0.7):
            g = ga.delta_limits(ga.GaussianSpec.simple([[1.0]]), [zp], big)
            p = sy.symplectic_delta_limits(sy.SkewFormSpec([[1.0]]), [zp], big)
            ax.plot(big, np.log(np.abs(g.z_values)), "o-", label=f"Gaussian, $z'={zp}$")
            ax.plot(big, np.log(np.abs(p.z_values)), "s--", color=ax.lines[-1].get_color(),
                    label=f"symplectic, slope {p.fitted_slope:.2f}")
        ax.set_xlabel(r"$|s|$")
        ax.set_ylabel(r"$\log|Z(z')|$")
        ax.legend(ncol=2)
        return _save(fig, path)


def det_ratio_convergence(path: Path) -> Path:
    ns = np.array([8, 16, 32, 64, 128, 256, 512])
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        for wT in (0.5, 1.0, 2.0):
            exact = math.sinh(wT) / wT
            err = [abs(ga.det_ratio(wT, TimeGrid.uniform(0.0, 1.0, n + 1)) - exact) for n in ns]
            ax.loglog(ns, err, "o-", label=rf"$\omega T={wT}$")
        ax.loglog(ns, 0.1 / ns.astype(float) ** 2, "k:", label=r"$n^{-2}$")
        ax.set_xlabel("interior slices $n$")
        ax.set_ylabel("|finite-difference ratio - sinh(wT)/wT|")
        ax.legend()
        return _save(fig, path)


def dyson_truncation(path: Path) -> Path:
    H = gp.OperatorHamiltonian.named("sz_plus_t_sx")
    ode = gp.evolution_ode(H)
    Ns = np.arange(0, 16)
    errs, bounds, drifts = [], [], []
    for N in Ns:
        r = gp.dyson_evolution(H, int(N))
        errs.append(np.max(np.abs(r.U - ode)))
        bounds.append(r.truncation_bound)
        drifts.append(r.unitarity_drift)
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        ax.semilogy(Ns, errs, "o-", label="error vs ODE oracle")
        # the N = 0 partial sum is exactly unitary; keep zeros off the log axis
        drifts = np.where(np.asarray(drifts) > 0, drifts, np.nan)
        ax.semilogy(Ns, drifts, "s-", label=r"$\|U^\dagger U - 1\|$")
        ax.semilogy(Ns, bounds, "k--", label="truncation bound")
        ax.set_xlabel("order $N$")
        ax.legend()
        return _save(fig, path)


def poisson_tails(path: Path) -> Path:
    ns = np.arange(0, 16)
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        for c in (0.5, 1.5, 5.0):
            ax.semilogy(ns, [gp.poisson_tail(int(n), c) for n in ns], "o-", label=f"$c={c}$")
        ax.set_xlabel("$n$")
        ax.set_ylabel(r"$\Pr(N \geq n)$")
        ax.legend()
        return _save(fig, path)


FIGURES = {
    "delta_limit_decay": delta_limit_decay,
    "det_ratio_convergence": det_ratio_convergence,
    "dyson_truncation": dyson_truncation,
    "poisson_tails": poisson_tails,
}


def render_all(outdir: Path) -> list:
    outdir = Path(outdir)
    return [fn(outdir / f"{name}.png") for name, fn in FIGURES.items()]
