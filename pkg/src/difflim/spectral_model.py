"""Gaussian reference measure in spectral coordinates.

The covariance operator is diagonal in a fixed orthonormal basis with
eigenvalues ``lambda_j**2`` where ``lambda_j = j**(-kappa)``.  A state is the
vector of its first ``n`` coefficients in that basis.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta


@dataclass(frozen=True)
class CovarianceSpectrum:
    """Eigen-decay ``lambda_j = j**(-kappa)`` truncated at ``n`` modes.

    ``s`` is the Sobolev exponent defining ``||x||_s^2 = sum j^{2s} x_j^2``.
    Build instances with :func:`make_spectrum`, which validates the domain.
    """

    kappa: float
    s: float
    n: int
    lam: np.ndarray = field(repr=False, compare=False)

    @property
    def index(self):
        return np.arange(1, self.n + 1, dtype=float)

    @property
    def lam_sq(self):
        return self.lam * self.lam

    @property
    def sobolev_weights(self):
        return self.index ** (2.0 * self.s)

    @property
    def trace_s(self):
        """Partial trace ``sum_{j<=n} lambda_j^2 j^{2s}`` of C in H^s."""
        return math.fsum(self.lam_sq * self.sobolev_weights)

    def tail_mass(self):
        """Trace mass ``sum_{j>n} lambda_j^2 j^{2s}`` left out by truncation."""
        return float(zeta(2.0 * self.kappa - 2.0 * self.s, self.n + 1))


def make_spectrum(kappa, s, n):
    if not kappa > 0.5:
        raise ValueError(f"kappa must exceed 1/2 (got kappa={kappa})")
    if s < 0:
        raise ValueError(f"s must be non-negative (got s={s})")
    if not s < kappa - 0.5:
        raise ValueError(f"s must be below kappa - 1/2 = {kappa - 0.5} (got s={s})")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer (got n={n})")
    n = int(n)
    lam = np.arange(1, n + 1, dtype=float) ** (-float(kappa))
    lam.setflags(write=False)
    return CovarianceSpectrum(float(kappa), float(s), n, lam)


def _check_dim(x, spec):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.n:
        raise ValueError(f"dimension mismatch: vector has {x.shape[-1]} coordinates, spectrum has n={spec.n}")
    return x


def sobolev_norm_sq(x, spec, s=None):
    x = _check_dim(x, spec)
    s = spec.s if s is None else s
    return math.fsum(spec.index ** (2.0 * s) * x * x)


def s_of(x, spec):
    """The statistic ``(1/N) sum_j x_j^2 / lambda_j^2``."""
    x = _check_dim(x, spec)
    u = x / spec.lam
    return math.fsum(u * u) / spec.n


@dataclass(frozen=True)
class TargetFunctional:
    """Diagonal quadratic change of measure ``Psi(x) = 1/2 sum_j w_j x_j^2``.

    ``kind`` is ``"zero"``, ``"half_sobolev"`` (``w_j = j^{2s}``) or
    ``"diagonal"`` with explicit non-negative ``weights``.
    """

    kind: str = "zero"
    weights: tuple = None

    def __post_init__(self):
        if self.kind not in ("zero", "half_sobolev", "diagonal"):
            raise ValueError(f"unknown target functional kind {self.kind!r}")
        if self.kind == "diagonal":
            if self.weights is None:
                raise ValueError("diagonal target functional needs weights")
            if any(w < 0 for w in self.weights):
                raise ValueError("diagonal weights must be non-negative")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def half_sobolev(cls):
        return cls("half_sobolev")

    @classmethod
    def diagonal(cls, weights):
        return cls("diagonal", tuple(float(w) for w in weights))

    @classmethod
    def parse(cls, name):
        name = name.strip().lower().replace("-", "_")
        if name in ("zero", "0", "none"):
            return cls.zero()
        if name in ("half_sobolev", "half_sobolev_norm_sq"):
            return cls.half_sobolev()
        raise ValueError(f"unknown psi {name!r} (expected zero or half_sobolev)")

    @property
    def is_zero(self):
        return self.kind == "zero"

    def __str__(self):
        return self.kind

    def mode_weights(self, spec):
        if self.kind == "zero":
            return np.zeros(spec.n)
        if self.kind == "half_sobolev":
            return spec.sobolev_weights
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (spec.n,):
            raise ValueError(f"dimension mismatch: {w.size} weights for n={spec.n}")
        return w

    def lipschitz_constant(self, spec):
        """Exact constant L with ``||F(x) - F(y)||_s <= L ||x - y||_s``."""
        return 1.0 + float(np.max(spec.lam_sq * self.mode_weights(spec), initial=0.0))


def psi_value(psi, x, spec):
    x = _check_dim(x, spec)
    if psi.is_zero:
        return 0.0
    return 0.5 * math.fsum(psi.mode_weights(spec) * x * x)


def grad_psi(psi, x, spec):
    x = _check_dim(x, spec)
    return psi.mode_weights(spec) * x


def c_grad_psi(psi, x, spec):
    """Coordinates of ``C grad Psi(x)``, i.e. ``lambda_j^2 w_j x_j``."""
    x = _check_dim(x, spec)
    return spec.lam_sq * psi.mode_weights(spec) * x


def drift_field(psi, x, spec):
    """``F(x) = -x - C grad Psi(x)``."""
    x = _check_dim(x, spec)
    return -x - c_grad_psi(psi, x, spec)
