"""Figures rendered from the CSV tables an experiment wrote.

Plots only read files, so they can be regenerated offline from any output
directory with :func:`render`.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .output import read_table, table_path  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _load(out_dir, experiment, table):
    _, cols, rows = read_table(table_path(out_dir, experiment, table))
    return {c: [r[i] for r in rows] for i, c in enumerate(cols)}


def _f(vals):
    return np.array([float(v) for v in vals])


def _groups(data, key):
    keys = list(dict.fromkeys(data[key]))
    idx = np.array(data[key])
    return [(k, idx == k) for k in keys]


def _plot_validate_scalars(out_dir, ax):
    d = _load(out_dir, "validate-scalars", "cells")
    z = _f(d["z"])
    for name, mask in _groups(d, "quantity"):
        ax.plot(np.flatnonzero(mask), z[mask], "o", ms=4, label=name)
    ax.axhspan(-3, 3, color="0.9", zorder=0)
    ax.set_xlabel("cell (ell, x)")
    ax.set_ylabel("z-score, closed form vs Monte Carlo")
    ax.legend()


def _plot_ode(out_dir, ax):
    d = _load(out_dir, "ode", "solution")
    ell, s0, t, s = _f(d["ell"]), _f(d["s0"]), _f(d["t"]), _f(d["S"])
    for e in np.unique(ell):
        for v in np.unique(s0):
            m = (ell == e) & (s0 == v)
            ax.plot(t[m], s[m], lw=1, label=f"ell={e:g}, S0={v:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("S(t)")
    ax.legend(ncol=3, fontsize=6)


def _plot_simulate(out_dir, ax):
    d = _load(out_dir, "simulate", "paths")
    rep, t, s = _f(d["replica"]), _f(d["t"]), _f(d["S"])
    for r in np.unique(rep)[:20]:
        m = rep == r
        ax.plot(t[m], s[m], lw=0.7)
    ax.set_xlabel("t = k/N")
    ax.set_ylabel("S")


def _plot_converge(out_dir, ax):
    d = _load(out_dir, "converge", "paths")
    n, t, m, ref = _f(d["N"]), _f(d["t"]), _f(d["mean_S"]), _f(d["ode_S"])
    psi = np.array(d["psi"])
    for p in dict.fromkeys(d["psi"]):
        for v in np.unique(n):
            sel = (psi == p) & (n == v)
            ax.plot(t[sel], m[sel], lw=1, label=f"{p}, N={v:g}")
    first = psi == psi[0]
    sel = first & (n == n[0])
    ax.plot(t[sel], ref[sel], "k--", lw=1.2, label="ODE")
    ax.set_xlabel("t")
    ax.set_ylabel("replica mean of S")
    ax.legend(ncol=2)


def _plot_acceptance(out_dir, ax):
    d = _load(out_dir, "acceptance-scaling", "acceptance")
    beta, n, acc, pred = _f(d["beta"]), _f(d["N"]), _f(d["mean_acceptance"]), _f(d["predicted_at_s0"])
    for b in np.unique(beta):
        m = beta == b
        line = ax.plot(n[m], acc[m], "o-", label=f"beta={b:g}")[0]
        ax.plot(n[m], pred[m], ":", color=line.get_color())
    ax.set_xscale("log", base=2)
    ax.set_ylim(0, 1)
    ax.set_xlabel("N")
    ax.set_ylabel("mean acceptance (dotted: Gaussian prediction at S0)")
    ax.legend()


def _plot_sde_compare(out_dir, ax):
    d = _load(out_dir, "sde-compare", "marginals")
    src = np.array(d["source"])
    col = [c for c in d if c.startswith("x_")][0]
    x = _f(d[col])
    for name in ("chain", "sde"):
        ax.hist(x[src == name], bins=30, histtype="step", density=True, label=name)
    ax.set_xlabel(f"{col} at t = T")
    ax.set_ylabel("density")
    ax.legend()


def _plot_wass_rate(out_dir, ax):
    d = _load(out_dir, "wass-rate", "rates")
    n, w = _f(d["N"]), _f(d["w1"])
    psi = np.array(d["psi"])
    for p in dict.fromkeys(d["psi"]):
        m = psi == p
        ax.loglog(n[m], w[m], "o-", label=p)
    ref = w[0] * np.sqrt(n[0] / np.unique(n))
    ax.loglog(np.unique(n), ref, "k:", label="N^-1/2")
    ax.set_xlabel("N")
    ax.set_ylabel("W1(R, Z)")
    ax.legend()


def _plot_stationarity(out_dir, ax):
    d = _load(out_dir, "stationarity", "band")
    t, m, lo, hi = _f(d["t"]), _f(d["mean_S"]), _f(d["lower"]), _f(d["upper"])
    ax.fill_between(t, lo, hi, color="0.85", label="1 +- band")
    ax.plot(t, m, lw=1, label="replica mean of S")
    ax.set_xlabel("t = k/N")
    ax.set_ylabel("S")
    ax.legend()


PLOTTERS = {
    "validate-scalars": _plot_validate_scalars,
    "ode": _plot_ode,
    "simulate": _plot_simulate,
    "converge": _plot_converge,
    "acceptance-scaling": _plot_acceptance,
    "sde-compare": _plot_sde_compare,
    "wass-rate": _plot_wass_rate,
    "stationarity": _plot_stationarity,
}


def render(experiment, out_dir):
    """Draw ``<experiment>.png`` in ``out_dir`` from the CSVs already there."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        PLOTTERS[experiment](out_dir, ax)
        ax.set_title(experiment)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{experiment}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
    return path
