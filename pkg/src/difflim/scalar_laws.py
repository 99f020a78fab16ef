"""Scalar functions of the limit theory.

``D_ell``, ``Gamma_ell`` and ``A_ell`` are the drift multiplier, diffusion
multiplier and S-drift of the limiting dynamics; ``h_ell = D_ell(1)``.  Each
function takes scalars or arrays and returns the same kind.  The Gaussian
expectation identities behind them are exposed separately so that Monte Carlo
oracles can target them directly.
"""

import math

import numpy as np
from scipy.special import log_ndtr, ndtr

# below this the x = 0 branch is used (the formulas contain 1/sqrt(x))
X_ZERO = 1e-12
# Phi arguments below this switch D_ell to the log-space product
_LOG_SWITCH = -20.0
_SQRT_PI = math.sqrt(math.pi)


def _check_ell(ell):
    if not ell > 0:
        raise ValueError(f"ell must be positive (got {ell})")
    return float(ell)


def _prep(x, allow_negative=False):
    arr = np.asarray(x, dtype=float)
    if not allow_negative and np.any(arr < 0):
        raise ValueError("x must be non-negative")
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def phi_cdf(x):
    """Standard normal CDF."""
    arr, scalar = _prep(x, allow_negative=True)
    return _ret(ndtr(arr), scalar)


def log_phi_cdf(x):
    """log of the standard normal CDF, accurate far into the lower tail."""
    arr, scalar = _prep(x, allow_negative=True)
    return _ret(log_ndtr(arr), scalar)


def _d_positive(ell, x):
    l2 = ell * ell
    arg = ell * (1.0 - 2.0 * x) / np.sqrt(2.0 * x)
    direct = np.exp(np.minimum(l2 * (x - 1.0), 700.0)) * ndtr(arg)
    logform = np.exp(l2 * (x - 1.0) + log_ndtr(arg))
    return 2.0 * l2 * np.where(arg > _LOG_SWITCH, direct, logform)


def d_ell(ell, x):
    """``D_ell(x) = 2 l^2 e^{l^2(x-1)} Phi(l(1-2x)/sqrt(2x))``, ``D_ell(0) = 2 l^2 e^{-l^2}``."""
    ell = _check_ell(ell)
    arr, scalar = _prep(x)
    pos = arr >= X_ZERO
    safe = np.where(pos, arr, 1.0)
    out = np.where(pos, _d_positive(ell, safe), 2.0 * ell * ell * math.exp(-ell * ell))
    return _ret(out, scalar)


def _tail_term(ell, x):
    # 2 l^2 Phi(-l / sqrt(2x)), which vanishes at x = 0
    pos = x >= X_ZERO
    safe = np.where(pos, x, 1.0)
    return np.where(pos, 2.0 * ell * ell * ndtr(-ell / np.sqrt(2.0 * safe)), 0.0)


def gamma_ell(ell, x):
    """``Gamma_ell(x) = D_ell(x) + 2 l^2 Phi(-l/sqrt(2x))``."""
    ell = _check_ell(ell)
    arr, scalar = _prep(x)
    out = np.asarray(d_ell(ell, arr)) + _tail_term(ell, arr)
    return _ret(out, scalar)


def a_ell(ell, x):
    """``A_ell(x) = (1-2x) D_ell(x) + 2 l^2 Phi(-l/sqrt(2x))``; vanishes at x = 1."""
    ell = _check_ell(ell)
    arr, scalar = _prep(x)
    out = (1.0 - 2.0 * arr) * np.asarray(d_ell(ell, arr)) + _tail_term(ell, arr)
    return _ret(out, scalar)


def h_ell(ell):
    """Speed of the stationary limit, ``2 l^2 Phi(-l/sqrt(2))``."""
    ell = _check_ell(ell)
    return float(2.0 * ell * ell * ndtr(-ell / np.sqrt(2.0)))


def a_ell_ext(ell, x):
    """``A_ell`` extended to the whole real line.

    Equal to 1 for ``x <= -1/2`` and to :func:`a_ell` for ``x >= 0``.  On
    ``(-1/2, 0)`` log A is a cubic Hermite interpolant with slope 0 at -1/2 and
    slope ``A'(0+)/A(0) = l^2 - 2`` at 0, so the extension is positive, C^1 at
    both junctions, and monotone whenever ``l <= sqrt(2)``.
    """
    ell = _check_ell(ell)
    arr, scalar = _prep(x, allow_negative=True)
    a0 = 2.0 * ell * ell * math.exp(-ell * ell)
    t = np.clip((arr + 0.5) / 0.5, 0.0, 1.0)
    h01 = t * t * (3.0 - 2.0 * t)
    h11 = t * t * (t - 1.0)
    log_val = h01 * math.log(a0) + 0.5 * h11 * (ell * ell - 2.0)
    bridge = np.exp(log_val)
    right = np.asarray(a_ell(ell, np.maximum(arr, 0.0)))
    out = np.where(arr >= 0.0, right, np.where(arr <= -0.5, 1.0, bridge))
    return _ret(out, scalar)


def _prep_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("derivatives are defined for x > 0 only")
    return arr, arr.ndim == 0


def d_ell_prime(ell, x):
    ell = _check_ell(ell)
    arr, scalar = _prep_positive(x)
    e = np.exp(-ell * ell / (4.0 * arr))
    out = ell * ell * np.asarray(d_ell(ell, arr)) - ell**3 / _SQRT_PI * (arr**-0.5 + 0.5 * arr**-1.5) * e
    return _ret(out, scalar)


def gamma_ell_prime(ell, x):
    ell = _check_ell(ell)
    arr, scalar = _prep_positive(x)
    e = np.exp(-ell * ell / (4.0 * arr))
    out = ell * ell * np.asarray(d_ell(ell, arr)) - ell**3 / np.sqrt(math.pi * arr) * e
    return _ret(out, scalar)


def a_ell_prime(ell, x):
    # the coefficient of D is l^2 - 2 - 2x l^2; see the decisions ledger
    ell = _check_ell(ell)
    arr, scalar = _prep_positive(x)
    e = np.exp(-ell * ell / (4.0 * arr))
    l2 = ell * ell
    out = (l2 - 2.0 - 2.0 * arr * l2) * np.asarray(d_ell(ell, arr)) + 2.0 * ell**3 * np.sqrt(arr) * e / _SQRT_PI
    return _ret(out, scalar)


def _check_sigma(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    return sigma


def _scalar_or_array(*vals):
    return all(np.ndim(v) == 0 for v in vals)


def expect_exp_indicator_neg(mu, sigma):
    """``E[e^X 1{X<0}]`` for ``X ~ N(mu, sigma^2)``."""
    sigma = _check_sigma(sigma)
    mu_a = np.asarray(mu, dtype=float)
    out = np.exp(mu_a + 0.5 * sigma * sigma + log_ndtr(-mu_a / sigma - sigma))
    return _ret(out, _scalar_or_array(mu, sigma))


def expect_min1_exp(mu, sigma):
    """``E[1 ^ e^X]`` for ``X ~ N(mu, sigma^2)``."""
    sigma = _check_sigma(sigma)
    mu_a = np.asarray(mu, dtype=float)
    out = np.asarray(expect_exp_indicator_neg(mu_a, sigma)) + ndtr(mu_a / sigma)
    return _ret(out, _scalar_or_array(mu, sigma))


def expect_neg2x_min1_exp(mu, sigma):
    """``E[-2X (1 ^ e^X)]`` for ``X ~ N(mu, sigma^2)``."""
    sigma = _check_sigma(sigma)
    mu_a = np.asarray(mu, dtype=float)
    first = np.asarray(expect_exp_indicator_neg(mu_a, sigma)) * (-2.0 * mu_a - 2.0 * sigma * sigma)
    out = first - 2.0 * mu_a * ndtr(mu_a / sigma)
    return _ret(out, _scalar_or_array(mu, sigma))


def expect_x_min1_exp(a, b):
    """``E[X (1 ^ e^{aX+b})]`` for standard normal X."""
    a_a = np.asarray(a, dtype=float)
    b_a = np.asarray(b, dtype=float)
    abs_a = np.abs(a_a)
    nz = abs_a > 0
    safe = np.where(nz, abs_a, 1.0)
    val = a_a * np.exp(0.5 * a_a * a_a + b_a + log_ndtr(-b_a / safe - safe))
    return _ret(np.where(nz, val, 0.0), _scalar_or_array(a, b))


def gaussian_params(ell, a):
    """Mean and standard deviation of ``N(-l^2, 2 l^2 a)``."""
    ell = _check_ell(ell)
    return -ell * ell, np.sqrt(2.0 * ell * ell * np.asarray(a, dtype=float))


def f_a(x, a):
    """``e^x Phi(-x/a)``."""
    x = np.asarray(x, dtype=float)
    out = np.exp(x + log_ndtr(-x / a))
    return _ret(out, np.ndim(out) == 0)


def f_a_prime(x, a):
    x = np.asarray(x, dtype=float)
    out = np.asarray(f_a(x, a)) - np.exp(x - 0.5 * (x / a) ** 2) / (a * math.sqrt(2.0 * math.pi))
    return _ret(out, np.ndim(out) == 0)


def f_a_lipschitz_scale(a):
    """``(1 + a) e^{a^2}``, the a-dependence of the Lipschitz constant of f_a."""
    a = np.asarray(a, dtype=float)
    out = (1.0 + a) * np.exp(a * a)
    return _ret(out, np.ndim(out) == 0)
