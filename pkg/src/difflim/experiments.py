"""The named experiments behind the ``difflim`` command.

Each ``run_*`` function takes the typed parameters from :mod:`difflim.config`
and returns a :class:`Report` holding the output tables and the pass
criteria.  Nothing here writes files; see :mod:`difflim.output`.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .config import ConfigError
from .diagnostics import summarize, sup_path_distance, wasserstein1_empirical, wasserstein_rate_experiment
from .limit_integrators import integrate_limit_sde, integrate_ode
from .rwm_chain import ChainConfig, interpolate_s, mean_acceptance, predicted_acceptance, run_ensemble
from .scalar_laws import (
    a_ell,
    d_ell,
    expect_exp_indicator_neg,
    expect_min1_exp,
    expect_neg2x_min1_exp,
    gamma_ell,
    gaussian_params,
    h_ell,
)
from .spectral_model import make_spectrum


class Refusal(Exception):
    """The config asks for something the experiment will not run."""


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list


@dataclass
class Criterion:
    name: str
    value: object
    threshold: object
    passed: bool
    detail: str = ""


@dataclass
class Report:
    experiment: str
    params: dict
    tables: list = field(default_factory=list)
    criteria: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def table(self, name):
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def check(self, name, value, threshold, passed, detail=""):
        self.criteria.append(Criterion(name, value, threshold, bool(passed), detail))


def _spectrum(p, n):
    return make_spectrum(p["kappa"], p["s"], n)


def _require_replicas(p):
    if p["replicas"] < p["min_replicas"]:
        raise Refusal(
            f"under-resourced: replicas = {p['replicas']} but at least {p['min_replicas']} are needed "
            "for the replica standard errors the pass criteria rely on"
        )


# --- validate-scalars -------------------------------------------------------


def _mc_gaussian_moments(gen, mu, sigma, m, chunk=1_000_000):
    """Means and standard errors of ``e^Z 1{Z<0}``, ``1 ^ e^Z`` and ``-2Z(1 ^ e^Z)``."""
    sums = np.zeros(3)
    sqs = np.zeros(3)
    done = 0
    while done < m:
        b = min(chunk, m - done)
        z = mu + sigma * gen.standard_normal(b)
        capped = np.exp(np.minimum(z, 0.0))
        vals = (np.where(z < 0, capped, 0.0), capped, -2.0 * z * capped)
        for i, v in enumerate(vals):
            sums[i] += v.sum()
            sqs[i] += (v * v).sum()
        done += b
    mean = sums / m
    var = np.maximum(sqs / m - mean * mean, 0.0) * m / (m - 1)
    return mean, np.sqrt(var / m)


def run_validate_scalars(p, jobs=1):
    rep = Report("validate-scalars", p)
    rows = []
    n_ok = 0
    for i, ell in enumerate(p["ells"]):
        for k, x in enumerate(p["xs"]):
            gen = rngmod.stream(p["seed"], rngmod.MONTE_CARLO, i, k)
            mu, sigma = gaussian_params(ell, x)
            mean, se = _mc_gaussian_moments(gen, mu, float(sigma), p["mc_samples"])
            closed = (
                d_ell(ell, x) / (2 * ell * ell),
                gamma_ell(ell, x) / (2 * ell * ell),
                a_ell(ell, x),
            )
            for name, c, mc, s in zip(("D/(2l^2)", "Gamma/(2l^2)", "A"), closed, mean, se):
                z = (mc - c) / s
                ok = abs(z) <= p["z_max"]
                n_ok += ok
                rows.append((ell, x, name, c, float(mc), float(s), float(z), ok))
    rep.tables.append(Table("cells", ("ell", "x", "quantity", "closed_form", "mc_mean", "mc_se", "z", "pass"), rows))
    rep.check("cells within z_max", n_ok, f">= {p['min_cells']} of {len(rows)}", n_ok >= p["min_cells"])

    grid = np.linspace(0.0, p["sign_grid_max"], p["sign_grid_points"])
    srows = []
    for ell in p["ells"]:
        a = np.asarray(a_ell(ell, grid))
        ident = float(np.max(np.abs(a - (-2.0 * grid * np.asarray(d_ell(ell, grid)) + np.asarray(gamma_ell(ell, grid))))))
        root = abs(a_ell(ell, 1.0))
        pos = bool(np.all(a[grid < 1.0] > 0))
        neg = bool(np.all(a[grid > 1.0] < 0))
        srows.append((ell, root, pos, neg, ident))
        rep.check(f"A(1) = 0, ell={ell:g}", root, p["a_root_tol"], root <= p["a_root_tol"])
        rep.check(f"A > 0 on [0,1) and < 0 on (1,{p['sign_grid_max']:g}], ell={ell:g}", pos and neg, True, pos and neg)
        rep.check(f"A = -2xD + Gamma, ell={ell:g}", ident, p["identity_tol"], ident <= p["identity_tol"])
    rep.tables.append(Table("structure", ("ell", "abs_A_at_1", "positive_below_1", "negative_above_1", "identity_error"), srows))
    # the identities are also evaluated through the Gaussian expectation kit
    kit = []
    for ell in p["ells"]:
        for x in p["xs"]:
            mu, sigma = gaussian_params(ell, x)
            kit.append(abs(expect_exp_indicator_neg(mu, sigma) - d_ell(ell, x) / (2 * ell * ell)))
            kit.append(abs(expect_min1_exp(mu, sigma) - gamma_ell(ell, x) / (2 * ell * ell)))
            kit.append(abs(expect_neg2x_min1_exp(mu, sigma) - a_ell(ell, x)))
    rep.check("closed forms agree with the expectation kit", max(kit), 1e-12, max(kit) <= 1e-12)
    return rep


# --- ode --------------------------------------------------------------------


def run_ode(p, jobs=1):
    rep = Report("ode", p)
    rows = []
    s0 = np.asarray(p["s0"])
    for ell in p["ells"]:
        sol = integrate_ode(ell, s0, p["T"], p["dt"])
        vals = sol.values
        for i in range(0, len(sol.times), p["output_every"]):
            for j, v in enumerate(s0):
                rows.append((ell, float(v), float(sol.times[i]), float(vals[i, j])))
        upper = np.maximum(s0, 1.0) + p["bound_tol"]
        bound_ok = bool(np.all(vals >= 0) and np.all(vals <= upper))
        rep.check(f"0 <= S <= max(S0,1) + tol, ell={ell:g}", float(vals.max()), "bound", bound_ok)
        steps = np.diff(vals, axis=0)
        toward = np.where(s0 < 1, steps >= -1e-12, np.where(s0 > 1, steps <= 1e-12, True))
        rep.check(f"monotone toward 1, ell={ell:g}", bool(np.all(toward)), True, np.all(toward))
        if np.any(s0 == 1.0):
            dev = float(np.max(np.abs(vals[:, s0 == 1.0] - 1.0)))
            rep.check(f"S = 1 is invariant, ell={ell:g}", dev, p["fixed_point_tol"], dev <= p["fixed_point_tol"])
        if p["long_time_factor"] > 0:
            t_long = p["long_time_factor"] / h_ell(ell)
            end = integrate_ode(ell, s0, t_long, p["long_time_dt"]).values[-1]
            dev = float(np.max(np.abs(end - 1.0)))
            rep.check(f"|S(T) - 1| at T = {p['long_time_factor']:g}/h_ell, ell={ell:g}", dev, p["long_time_tol"], dev < p["long_time_tol"])
    rep.tables.append(Table("solution", ("ell", "s0", "t", "S"), rows))
    return rep


# --- simulate ---------------------------------------------------------------


def run_simulate(p, jobs=1):
    rep = Report("simulate", p)
    spec = _spectrum(p, p["n"])
    cfg = ChainConfig(spec, p["psi"], p["ell"], p["beta"], p["T"], p["init"], p["seed"], p["track_coords"], diag_every=0)
    paths = run_ensemble(cfg, p["replicas"], jobs)
    window = p["rate_window"] or spec.n
    rows = []
    for path in paths:
        csum = np.concatenate([[0], np.cumsum(path.accepted)])
        for k in range(0, len(path.times), p["output_every"]):
            lo = max(0, k - window)
            rate = (csum[k] - csum[lo]) / (k - lo) if k > 0 else math.nan
            rows.append((path.replica, float(path.times[k]), float(path.s_values[k]), *map(float, path.coords[k]), float(rate)))
    cols = ("replica", "t", "S", *(f"x_{j}" for j in cfg.track), "accepted_rate_window")
    rep.tables.append(Table("paths", cols, rows))
    rep.notes["mean_acceptance"] = mean_acceptance(paths)
    rep.notes["steps"] = cfg.n_steps
    return rep


# --- converge ---------------------------------------------------------------


def run_converge(p, jobs=1):
    _require_replicas(p)
    if len(p["n_grid"]) < p["min_levels"]:
        raise Refusal(f"under-resourced: {len(p['n_grid'])} N levels given, at least {p['min_levels']} are needed")
    rep = Report("converge", p)
    grid = np.linspace(0.0, p["T"], p["grid_points"])
    ode = integrate_ode(p["ell"], p["init"].s0, p["T"], p["ode_dt"])
    ref = np.asarray(ode(grid))
    rows = []
    erows = []
    for psi in p["psi"]:
        errors = []
        for n in p["n_grid"]:
            cfg = ChainConfig(_spectrum(p, n), psi, p["ell"], 1.0, p["T"], p["init"], p["seed"], diag_every=0)
            paths = run_ensemble(cfg, p["replicas"], jobs)
            summ = summarize(np.array([interpolate_s(path, grid) for path in paths]), grid)
            e = sup_path_distance(summ.mean, ref)
            errors.append(e)
            erows.append((psi.kind, n, e, float(summ.se.max())))
            rows.extend((psi.kind, n, float(t), float(m), float(s), float(r)) for t, m, s, r in zip(grid, summ.mean, summ.se, ref))
        if p["require_decreasing"]:
            dec = all(b < a for a, b in zip(errors, errors[1:]))
            rep.check(f"e_N strictly decreasing, psi={psi.kind}", errors, "decreasing", dec)
        rep.check(
            f"e_N at N={p['n_grid'][-1]}, psi={psi.kind}", errors[-1], p["max_final_error"], errors[-1] < p["max_final_error"]
        )
    rep.tables.append(Table("paths", ("psi", "N", "t", "mean_S", "se_S", "ode_S"), rows))
    rep.tables.append(Table("errors", ("psi", "N", "e_N", "max_se"), erows))
    return rep


# --- acceptance-scaling ------------------------------------------------------


def run_acceptance_scaling(p, jobs=1):
    rep = Report("acceptance-scaling", p)
    rows = []
    for beta in p["betas"]:
        accs = []
        for n in p["n_grid"]:
            cfg = ChainConfig(_spectrum(p, n), p["psi"], p["ell"], beta, p["T"], p["init"], p["seed"], diag_every=0)
            paths = run_ensemble(cfg, p["replicas"], jobs)
            # criteria use the averaged 1 ^ e^Q; the counted rate is reported alongside
            per = np.array([mean_acceptance(path, kind="probability") for path in paths])
            acc = mean_acceptance(paths, kind="probability")
            se = float(per.std(ddof=1) / math.sqrt(len(per))) if len(per) > 1 else math.nan
            pred = predicted_acceptance(p["ell"], beta, n, p["init"].s0) if p["init"].s0 > 0 else math.nan
            rows.append((beta, n, acc, se, mean_acceptance(paths), pred))
            accs.append(acc)
        if beta > 1:
            inc = all(b > a for a, b in zip(accs, accs[1:]))
            rep.check(f"beta={beta:g}: strictly increasing in N", accs, "increasing", inc)
            rep.check(f"beta={beta:g}: final acceptance", accs[-1], f"> {p['high_beta_final_min']}", accs[-1] > p["high_beta_final_min"])
        elif beta < 1:
            dec = all(b < a for a, b in zip(accs, accs[1:]))
            rep.check(f"beta={beta:g}: strictly decreasing in N", accs, "decreasing", dec)
            rep.check(f"beta={beta:g}: final acceptance", accs[-1], f"< {p['low_beta_final_max']}", accs[-1] < p["low_beta_final_max"])
        else:
            spread = max(accs) - min(accs)
            rep.check("beta=1: spread across N", spread, p["unit_beta_spread_max"], spread < p["unit_beta_spread_max"])
    cols = ("beta", "N", "mean_acceptance", "replica_se", "accepted_fraction", "predicted_at_s0")
    rep.tables.append(Table("acceptance", cols, rows))
    return rep


# --- sde-compare ------------------------------------------------------------


def _draw_x0(init, spec, seed, first, count):
    if not init.is_random:
        return init.draw(spec)
    return np.array([init.draw(spec, rngmod.stream(seed, rngmod.INIT, first + r)) for r in range(count)])


def run_sde_compare(p, jobs=1):
    _require_replicas(p)
    sde_ell = p["ell"] if p["sde_ell"].lower() == "same" else float(p["sde_ell"])
    if sde_ell != p["ell"] and not p["negative_control"]:
        raise ConfigError(
            f"mismatched configs: chain ell = {p['ell']} but sde_ell = {sde_ell}; "
            "set negative_control = true to run a deliberate mismatch"
        )
    rep = Report("sde-compare", p)
    spec = _spectrum(p, p["n"])
    r_count = p["replicas"]
    coords = tuple(p["coords"])
    cfg = ChainConfig(spec, p["psi"], p["ell"], 1.0, p["T"], p["init"], p["seed"], coords, diag_every=0)
    paths = run_ensemble(cfg, r_count, jobs)
    samples = {"chain": ({j: np.array([path.coord(j)[-1] for path in paths]) for j in coords}, np.array([path.s_values[-1] for path in paths]))}
    ode = integrate_ode(sde_ell, p["init"].s0, p["T"], p["ode_dt"])
    for b in range(1 + p["calibration_pairs"]):
        first = (b + 1) * r_count
        x0 = _draw_x0(p["init"], spec, p["seed"], first, r_count)
        ens = integrate_limit_sde(spec, p["psi"], sde_ell, ode, x0, p["T"], p["dt"], p["seed"], r_count, first_replica=first)
        end = ens.states[-1]
        name = "sde" if b == 0 else f"sde_calibration_{b}"
        samples[name] = ({j: end[:, j - 1].copy() for j in coords}, ens.s_values(spec)[-1])
    mrows = []
    for name, (cvals, svals) in samples.items():
        for r in range(r_count):
            mrows.append((name, r, float(svals[r]), *(float(cvals[j][r]) for j in coords)))
    rep.tables.append(Table("marginals", ("source", "replica", "S", *(f"x_{j}" for j in coords)), mrows))
    drows = []
    calib = [k for k in samples if k.startswith("sde_calibration")]
    quantities = [(f"x_{j}", lambda src, j=j: samples[src][0][j]) for j in coords] + [("S", lambda src: samples[src][1])]
    for qname, get in quantities:
        w_chain = wasserstein1_empirical(get("chain"), get("sde"))
        w_self = float(np.mean([wasserstein1_empirical(get("sde"), get(c)) for c in calib]))
        thr = p["factor"] * w_self
        ok = w_chain <= thr
        drows.append((qname, w_chain, w_self, thr, ok))
        rep.check(f"W1(chain, sde) for {qname} <= {p['factor']:g} x self-distance", w_chain, thr, ok)
    rep.tables.append(Table("distances", ("quantity", "w1_chain_sde", "w1_self", "threshold", "pass"), drows))
    rep.notes["negative_control"] = bool(p["negative_control"])
    rep.notes["sde_ell"] = sde_ell
    rep.notes["truncation_tail_mass"] = spec.tail_mass()
    return rep


# --- wass-rate --------------------------------------------------------------


def run_wass_rate(p, jobs=1):
    if p["m_samples"] < 10_000:
        raise Refusal("under-resourced: m_samples must be at least 1e4")
    rep = Report("wass-rate", p)
    rows = []
    for psi in p["psi"]:
        cfgs = [ChainConfig(_spectrum(p, n), psi, p["ell"], 1.0, 1.0, seed=p["seed"]) for n in p["n_grid"]]
        states = [p["frozen_c"] * cfg.spec.lam for cfg in cfgs]
        table, (slope, intercept) = wasserstein_rate_experiment(cfgs, states, p["m_samples"])
        for row in table:
            rows.append((psi.kind, row.n, row.w1, row.max_abs_r_small, row.n * row.max_abs_r_small, row.s_of_x, slope))
        ok = p["slope_min"] <= slope <= p["slope_max"]
        rep.check(f"log-log slope of W1(R, Z), psi={psi.kind}", slope, (p["slope_min"], p["slope_max"]), ok)
        r_max = [row.max_abs_r_small for row in table]
        nonincr = all(b <= a for a, b in zip(r_max, r_max[1:]))
        rep.check(f"max |r_small| non-increasing in N, psi={psi.kind}", r_max, "non-increasing", nonincr)
        rep.notes[f"fitted_K_{psi.kind}"] = max(row.n * row.max_abs_r_small for row in table)
    rep.tables.append(Table("rates", ("psi", "N", "w1", "max_abs_r_small", "N_times_max_abs_r_small", "S_of_x", "slope"), rows))
    return rep


# --- stationarity -----------------------------------------------------------


def run_stationarity(p, jobs=1):
    if not p["psi"].is_zero:
        raise Refusal("stationarity needs psi = zero: an exact stationary start is only available for the Gaussian target")
    _require_replicas(p)
    rep = Report("stationarity", p)
    spec = _spectrum(p, p["n"])
    cfg = ChainConfig(spec, p["psi"], p["ell"], 1.0, p["T"], p["init"], p["seed"], diag_every=0)
    paths = run_ensemble(cfg, p["replicas"], jobs)
    summ = summarize(np.array([path.s_values for path in paths]), paths[0].times)
    lo = 1.0 - p["band_se"] * summ.se
    hi = 1.0 + p["band_se"] * summ.se
    inside = (summ.mean >= lo) & (summ.mean <= hi)
    rows = [(k, float(t), float(m), float(s), float(a), float(b), bool(i)) for k, (t, m, s, a, b, i) in enumerate(zip(summ.times, summ.mean, summ.se, lo, hi, inside))]
    rep.tables.append(Table("band", ("k", "t", "mean_S", "se_S", "lower", "upper", "inside"), rows))
    n_out = int(np.count_nonzero(~inside))
    rep.check(f"replica-mean S within 1 +- {p['band_se']:g} SE for all k <= {cfg.n_steps}", n_out, 0, n_out == 0)
    if n_out:
        rep.notes["first_exit_k"] = int(np.argmax(~inside))
    return rep


RUNNERS = {
    "validate-scalars": run_validate_scalars,
    "ode": run_ode,
    "simulate": run_simulate,
    "converge": run_converge,
    "acceptance-scaling": run_acceptance_scaling,
    "sde-compare": run_sde_compare,
    "wass-rate": run_wass_rate,
    "stationarity": run_stationarity,
}


def run_experiment(name, params, jobs=1):
    return RUNNERS[name](params, jobs)
