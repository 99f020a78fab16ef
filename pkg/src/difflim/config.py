"""Experiment configuration files.

A config file is INI with one section per experiment, named exactly like the
subcommand (``[converge]``, ``[sde-compare]`` ...).  Keys in ``[DEFAULT]``
apply to every section.  Each experiment has a schema of typed keys with
defaults; unknown keys are rejected so typos cannot silently fall back to a
default.
"""

import configparser

from .rwm_chain import InitialCondition
from .spectral_model import TargetFunctional


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text):
    out = []
    for v in text.replace(",", " ").split():
        f = float(v)
        if f != int(f):
            raise ValueError(f"{v} is not an integer")
        out.append(int(f))
    return tuple(out)


def _int(text):
    vals = _ints(text)
    if len(vals) != 1:
        raise ValueError(f"expected one integer, got {text!r}")
    return vals[0]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _psis(text):
    return tuple(TargetFunctional.parse(v) for v in text.split(","))


def _psi(text):
    return TargetFunctional.parse(text)


PARSERS = {
    "float": float,
    "int": _int,
    "bool": _bool,
    "str": str.strip,
    "floats": _floats,
    "ints": _ints,
    "psi": _psi,
    "psis": _psis,
    "init": InitialCondition.parse,
}

_MODEL = {
    "kappa": ("float", "1.0"),
    "s": ("float", "0.25"),
    "ell": ("float", "1.0"),
}

SCHEMAS = {
    "validate-scalars": {
        "ells": ("floats", "0.5, 1, 2"),
        "xs": ("floats", "0.1, 0.5, 1, 2"),
        "mc_samples": ("int", "10000000"),
        "z_max": ("float", "3"),
        "min_cells": ("int", "34"),
        "a_root_tol": ("float", "1e-12"),
        "identity_tol": ("float", "1e-12"),
        "sign_grid_points": ("int", "1000"),
        "sign_grid_max": ("float", "100"),
    },
    "ode": {
        "ells": ("floats", "0.5, 1, 2"),
        "s0": ("floats", "0, 0.25, 1, 4"),
        "T": ("float", "10"),
        "dt": ("float", "1e-3"),
        "output_every": ("int", "10"),
        "bound_tol": ("float", "1e-8"),
        "fixed_point_tol": ("float", "1e-10"),
        "long_time_factor": ("float", "50"),
        "long_time_tol": ("float", "1e-3"),
        "long_time_dt": ("float", "1e-2"),
    },
    "simulate": {
        **_MODEL,
        "n": ("int", "256"),
        "beta": ("float", "1"),
        "T": ("float", "2"),
        "psi": ("psi", "zero"),
        "init": ("init", "stationary"),
        "replicas": ("int", "10"),
        "track_coords": ("ints", "1, 2"),
        "rate_window": ("int", "0"),
        "output_every": ("int", "1"),
    },
    "converge": {
        **_MODEL,
        "n_grid": ("ints", "32, 128, 512"),
        "psi": ("psis", "zero, half_sobolev"),
        "init": ("init", "profile 0.5"),
        "T": ("float", "2"),
        "replicas": ("int", "200"),
        "min_replicas": ("int", "100"),
        "min_levels": ("int", "3"),
        "grid_points": ("int", "401"),
        "ode_dt": ("float", "1e-3"),
        "max_final_error": ("float", "0.05"),
        "require_decreasing": ("bool", "true"),
    },
    "acceptance-scaling": {
        **_MODEL,
        "betas": ("floats", "0.5, 1, 1.5"),
        "n_grid": ("ints", "64, 256, 1024"),
        "psi": ("psi", "zero"),
        "init": ("init", "profile 0.5"),
        "T": ("float", "2"),
        "replicas": ("int", "20"),
        "high_beta_final_min": ("float", "0.9"),
        "low_beta_final_max": ("float", "0.1"),
        "unit_beta_spread_max": ("float", "0.05"),
    },
    "sde-compare": {
        **_MODEL,
        "s": ("float", "0"),
        "n": ("int", "512"),
        "sde_ell": ("str", "same"),
        "negative_control": ("bool", "false"),
        "psi": ("psi", "zero"),
        "init": ("init", "profile 0.5"),
        "T": ("float", "1"),
        "replicas": ("int", "300"),
        "min_replicas": ("int", "300"),
        "dt": ("float", "1e-3"),
        "ode_dt": ("float", "1e-3"),
        "coords": ("ints", "1"),
        "factor": ("float", "2"),
        "calibration_pairs": ("int", "4"),
    },
    "wass-rate": {
        **_MODEL,
        "n_grid": ("ints", "32, 128, 512, 2048"),
        "psi": ("psis", "zero, half_sobolev"),
        "frozen_c": ("float", "0"),
        "m_samples": ("int", "100000"),
        "slope_min": ("float", "-0.8"),
        "slope_max": ("float", "-0.25"),
    },
    "stationarity": {
        **_MODEL,
        "n": ("int", "256"),
        "psi": ("psi", "zero"),
        "init": ("init", "stationary"),
        "T": ("float", "2"),
        "replicas": ("int", "200"),
        "min_replicas": ("int", "100"),
        "band_se": ("float", "5"),
    },
}

EXPERIMENTS = tuple(SCHEMAS)


def parse_section(experiment, items, shared=None):
    """Typed parameters for ``experiment`` from raw key/value pairs.

    ``shared`` holds file-wide defaults; those keys are used when the schema
    knows them and ignored otherwise.
    """
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    schema = SCHEMAS[experiment]
    items = dict(items)
    for key, value in (shared or {}).items():
        if key in schema or key == "seed":
            items.setdefault(key, value)
    seed = items.pop("seed", None)
    unknown = sorted(set(items) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {experiment}: {', '.join(unknown)}")
    params = {}
    for key, (kind, default) in schema.items():
        raw = items.get(key, default)
        try:
            params[key] = PARSERS[kind](raw)
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"[{experiment}] {key} = {raw!r}: {exc}") from None
    params["seed"] = int(seed) if seed is not None else 0
    return params


def load(path, experiment):
    """Read ``path`` and return the parameters of ``experiment``.

    A missing section means all defaults (plus anything in ``[DEFAULT]``).
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    with open(path) as fh:
        cp.read_file(fh)
    shared = dict(cp.defaults())
    own = {}
    if cp.has_section(experiment):
        own = {k: v for k, v in cp.items(experiment) if k not in shared or v != shared[k]}
    return parse_section(experiment, own, shared)


def defaults(experiment):
    return parse_section(experiment, {})
