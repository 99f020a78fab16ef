"""Distances between samples and paths, ensemble summaries and rate fits."""

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod


def _nonempty(a, name):
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    return a


def _stride_subsample(a, m, seed):
    # m evenly spaced order positions with a seeded offset; keeps the spread of a
    n = a.size
    offset = rngmod.stream(seed, rngmod.MONTE_CARLO, n, m).random()
    idx = np.floor((np.arange(m) + offset) * (n / m)).astype(int)
    return np.sort(a)[np.minimum(idx, n - 1)]


def wasserstein1_empirical(a, b, seed=0):
    """W1 between two empirical laws on the line.

    Equal sizes give the exact value, the mean of ``|a_(i) - b_(i)|`` over
    order statistics.  The larger sample is otherwise stride-subsampled to
    the size of the smaller one.
    """
    a = _nonempty(a, "a")
    b = _nonempty(b, "b")
    if a.size > b.size:
        a = _stride_subsample(a, b.size, seed)
    elif b.size > a.size:
        b = _stride_subsample(b, a.size, seed)
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def sup_path_distance(f, g, grid_f=None, grid_g=None):
    f = _nonempty(f, "f")
    g = _nonempty(g, "g")
    if f.shape != g.shape:
        raise ValueError(f"grid mismatch: {f.size} vs {g.size} points")
    if grid_f is not None and grid_g is not None and not np.array_equal(np.asarray(grid_f), np.asarray(grid_g)):
        raise ValueError("grid mismatch: time points differ")
    return float(np.max(np.abs(f - g)))


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov distance ``sup |F_a - F_b|``."""
    a = np.sort(_nonempty(a, "a"))
    b = np.sort(_nonempty(b, "b"))
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical_value(n_a, n_b, c_alpha=1.36):
    """Asymptotic two-sample critical value, 1.36 at the 5% level."""
    return c_alpha * math.sqrt((n_a + n_b) / (n_a * n_b))


@dataclass(frozen=True)
class EnsembleSummary:
    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    replicas: int

    @property
    def se(self):
        return np.sqrt(self.variance / self.replicas)


def summarize(values, times=None):
    """Summarise replica values of shape (replicas, len(times)) per time point."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    r = values.shape[0]
    if r < 2:
        raise ValueError("need at least two replicas")
    times = np.arange(values.shape[1]) if times is None else np.asarray(times)
    # a fixed-order reduction keeps outputs byte-identical across runs
    mean = values.sum(axis=0) / r
    var = np.maximum(((values - mean) ** 2).sum(axis=0) / (r - 1), 0.0)
    return EnsembleSummary(times, mean, var, r)


def loglog_slope(xs, ys):
    """Least-squares slope and intercept of ``log y`` against ``log x``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("need at least two positive points")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class RateRow:
    n: int
    w1: float
    max_abs_r_small: float
    s_of_x: float


def wasserstein_rate_experiment(configs, states, m_samples):
    """W1 between draws of R and of the matching normal at a frozen state, per N.

    ``configs[i]`` and ``states[i]`` give the chain configuration and frozen
    state at the i-th dimension.  R comes from the Q decomposition, Z is
    ``N(-l^2 N^{1-beta}, 2 l^2 N^{1-beta} S^N(x))`` drawn from an independent stream.
    Returns the rows and the fitted ``(slope, intercept)`` of log W1 on log N.
    """
    from .rwm_chain import sample_q_decomposition
    from .spectral_model import s_of

    if m_samples < 10_000:
        raise ValueError("m_samples must be at least 1e4")
    rows = []
    for cfg, x in zip(configs, states):
        r, r_small, _ = sample_q_decomposition(x, cfg, m_samples)
        s = s_of(x, cfg.spec)
        gen = rngmod.stream(cfg.seed, rngmod.MONTE_CARLO, cfg.n)
        z = cfg.z_mean + math.sqrt(2.0 * cfg.ell**2 * cfg.n ** (1.0 - cfg.beta) * s) * gen.standard_normal(m_samples)
        rows.append(RateRow(cfg.n, wasserstein1_empirical(r, z), float(np.max(np.abs(r_small))), s))
    fit = loglog_slope([row.n for row in rows], [row.w1 for row in rows]) if len(rows) > 1 else (math.nan, math.nan)
    return rows, fit
