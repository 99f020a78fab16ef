"""Integrators for the limit equations.

``integrate_ode`` solves ``dS = A_l(S) dt`` with fixed-step RK4.  The SDE
integrators use Euler-Maruyama in spectral coordinates with the scalar
coefficients ``D_l(S(t))`` and ``Gamma_l(S(t))`` in front of a C-Brownian
motion, vectorised over replicas.  Each replica draws its noise from its own
stream, in time order, so results do not depend on the chunking.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import log_ndtr

from . import rng as rngmod
from .scalar_laws import X_ZERO, a_ell_ext, d_ell, gamma_ell, h_ell

_SQRT1_2 = math.sqrt(0.5)
# floats drawn per replica chunk when generating noise
_CHUNK_FLOATS = 2_000_000


def _phi(t):
    return 0.5 * math.erfc(-t * _SQRT1_2)


def _a_ext_scalar(ell, x):
    # scalar twin of a_ell_ext; the RK4 loop spends most of its time here
    l2 = ell * ell
    if x >= X_ZERO:
        root = math.sqrt(2.0 * x)
        arg = ell * (1.0 - 2.0 * x) / root
        if arg > -20.0:
            d = 2.0 * l2 * math.exp(min(l2 * (x - 1.0), 700.0)) * _phi(arg)
        else:
            d = 2.0 * l2 * math.exp(l2 * (x - 1.0) + float(log_ndtr(arg)))
        return (1.0 - 2.0 * x) * d + 2.0 * l2 * _phi(-ell / root)
    if x >= 0.0:
        return 2.0 * l2 * math.exp(-l2)
    return float(a_ell_ext(ell, x))


@dataclass(frozen=True)
class OdeSolution:
    """RK4 grid solution of ``dS = A_l(S) dt`` with Hermite dense output."""

    times: np.ndarray
    values: np.ndarray  # shape (len(times),) or (len(times), m) for m initial values
    ell: float
    dt: float

    @property
    def horizon(self):
        return float(self.times[-1])

    def _spline(self):
        slopes = np.asarray(a_ell_ext(self.ell, self.values))
        return CubicHermiteSpline(self.times, self.values, slopes, axis=0)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < -1e-12) or np.any(t_arr > self.horizon + 1e-9):
            raise ValueError(f"t outside [0, {self.horizon}]")
        if len(self.times) == 1:
            out = np.broadcast_to(self.values[0], t_arr.shape + self.values.shape[1:]).copy()
        else:
            out = self._spline()(np.clip(t_arr, 0.0, self.horizon))
        return float(out) if out.ndim == 0 else out


def rk4_steps(ell, s0, n_steps, dt):
    """Return the RK4 iterates ``S_0..S_{n_steps}`` for a single start value."""
    out = np.empty(n_steps + 1)
    s = float(s0)
    out[0] = s
    half = 0.5 * dt
    f = _a_ext_scalar
    for i in range(1, n_steps + 1):
        k1 = f(ell, s)
        k2 = f(ell, s + half * k1)
        k3 = f(ell, s + half * k2)
        k4 = f(ell, s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i] = s
    return out


def _n_steps(T, dt):
    # smallest grid that reaches T; exact multiples are not pushed over by round-off
    return max(0, int(math.ceil(T / dt - 1e-9)))


def integrate_ode(ell, s0, T, dt=1e-3):
    """Solve ``dS = A_l(S) dt`` on ``[0, T]`` (the grid ends at the first multiple of dt >= T).

    ``s0`` may be a scalar or a 1-d array of start values.
    """
    if not ell > 0:
        raise ValueError("ell must be positive")
    if not 0 < dt <= 1e-2:
        raise ValueError("dt must lie in (0, 1e-2]")
    if T < 0:
        raise ValueError("T must be non-negative")
    s0_arr = np.asarray(s0, dtype=float)
    if np.any(s0_arr < 0):
        raise ValueError("s0 must be non-negative")
    k = _n_steps(T, dt)
    times = np.arange(k + 1) * dt
    if s0_arr.ndim == 0:
        values = rk4_steps(float(ell), float(s0_arr), k, dt)
    else:
        values = np.column_stack([rk4_steps(float(ell), v, k, dt) for v in s0_arr])
    return OdeSolution(times, values, float(ell), float(dt))


@dataclass(frozen=True)
class SdePath:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), N)
    noise_seed: int
    replica: int


@dataclass(frozen=True)
class SdeEnsemble:
    """Snapshots of all replicas; ``states`` has shape (len(times), replicas, N)."""

    times: np.ndarray
    states: np.ndarray
    noise_seed: int

    @property
    def replicas(self):
        return self.states.shape[1]

    def path(self, r):
        return SdePath(self.times, self.states[:, r, :], self.noise_seed, r)

    def s_values(self, spec):
        """``S`` of every snapshot and replica, shape (len(times), replicas)."""
        u = self.states / spec.lam
        return np.einsum("trj,trj->tr", u, u) / spec.n


def _snapshot_steps(snapshot_times, dt, k):
    if snapshot_times is None:
        return np.array([k])
    steps = np.rint(np.asarray(snapshot_times, dtype=float) / dt).astype(int)
    if np.any(steps < 0) or np.any(steps > k):
        raise ValueError("snapshot times outside [0, T]")
    return steps


def euler_maruyama(spec, psi, x0, drift_coef, diff_coef, dt, noise, snapshot_steps):
    """Euler-Maruyama core with caller-supplied noise.

    ``drift_coef[n]`` and ``diff_coef[n]`` multiply the drift and the variance
    at step n.  ``noise(n0, n1)`` returns the standard normals for steps
    ``n0..n1-1`` with shape (n1 - n0, replicas, N).
    """
    x = np.array(x0, dtype=float)
    k = len(drift_coef)
    snaps = np.empty((len(snapshot_steps),) + x.shape)
    wanted = {}
    for i, s in enumerate(snapshot_steps):
        wanted.setdefault(int(s), []).append(i)
    for i in wanted.get(0, []):
        snaps[i] = x
    lam = spec.lam
    has_psi = not psi.is_zero
    cw = spec.lam_sq * psi.mode_weights(spec)
    chunk = max(1, _CHUNK_FLOATS // max(1, x.size))
    n0 = 0
    while n0 < k:
        n1 = min(k, n0 + chunk)
        eta = noise(n0, n1)
        for n in range(n0, n1):
            drift = -x - cw * x if has_psi else -x
            x = x + (dt * drift_coef[n]) * drift + math.sqrt(dt * diff_coef[n]) * (lam * eta[n - n0])
            for i in wanted.get(n + 1, []):
                snaps[i] = x
        n0 = n1
    return snaps


def _replica_noise(seed, replicas, n, first_replica=0):
    gens = [rngmod.stream(seed, rngmod.SDE, first_replica + r) for r in range(replicas)]

    def noise(n0, n1):
        out = np.empty((n1 - n0, replicas, n))
        for r, g in enumerate(gens):
            out[:, r, :] = g.standard_normal((n1 - n0, n))
        return out

    return noise


def _broadcast_x0(x0, spec, replicas):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape == (spec.n,):
        return np.broadcast_to(x0, (replicas, spec.n)).copy()
    if x0.shape == (replicas, spec.n):
        return x0.copy()
    raise ValueError(f"dimension mismatch: x0 must have shape ({spec.n},) or ({replicas}, {spec.n})")


def _check_dt(T, dt):
    if not 0 < dt <= 1e-3:
        raise ValueError("dt must lie in (0, 1e-3]")
    if not T > 0:
        raise ValueError("T must be positive")


def integrate_limit_sde(
    spec, psi, ell, ode, x0, T, dt=1e-3, seed=0, replicas=1, snapshot_times=None, coefficients=None, first_replica=0
):
    """Euler-Maruyama for ``dx = (-x - C grad Psi(x)) D_l(S(t)) dt + sqrt(Gamma_l(S(t))) dW``.

    ``S(t)`` comes from the ODE solution ``ode``.  ``coefficients(t)`` may
    replace ``(D, Gamma)`` as functions of the step times.  The default
    snapshot is the end point only.  Replica r draws its noise from stream
    ``first_replica + r``.
    """
    _check_dt(T, dt)
    k = _n_steps(T, dt)
    t_steps = np.arange(k) * dt
    if coefficients is None:
        if ode.horizon < k * dt - 1e-9:
            raise ValueError(f"horizon mismatch: ODE solved to {ode.horizon}, SDE needs {k * dt}")
        if ode.ell != ell:
            raise ValueError(f"ell mismatch: ODE used {ode.ell}, SDE uses {ell}")
        s_path = np.asarray(ode(t_steps)) if k else np.empty(0)
        s_path = np.maximum(s_path, 0.0)
        d_coef = np.asarray(d_ell(ell, s_path))
        g_coef = np.asarray(gamma_ell(ell, s_path))
    else:
        d_coef, g_coef = (np.broadcast_to(np.asarray(c, dtype=float), (k,)) for c in coefficients(t_steps))
    return _integrate(spec, psi, x0, d_coef, g_coef, dt, seed, replicas, snapshot_times, first_replica)


def integrate_stationary_sde(
    spec, psi, ell, x0, T, dt=1e-3, seed=0, replicas=1, snapshot_times=None, h=None, first_replica=0
):
    """Euler-Maruyama for ``dz = -h (z + C grad Psi(z)) dt + sqrt(2h) dW`` with ``h = h_l`` by default."""
    _check_dt(T, dt)
    h = h_ell(ell) if h is None else float(h)
    k = _n_steps(T, dt)
    d_coef = np.full(k, h)
    g_coef = np.full(k, 2.0 * h)
    return _integrate(spec, psi, x0, d_coef, g_coef, dt, seed, replicas, snapshot_times, first_replica)


def _integrate(spec, psi, x0, d_coef, g_coef, dt, seed, replicas, snapshot_times, first_replica):
    if replicas < 1:
        raise ValueError("replicas must be positive")
    k = len(d_coef)
    steps = _snapshot_steps(snapshot_times, dt, k)
    x = _broadcast_x0(x0, spec, replicas)
    snaps = euler_maruyama(spec, psi, x, d_coef, g_coef, dt, _replica_noise(seed, replicas, spec.n, first_replica), steps)
    return SdeEnsemble(steps * dt, snaps, int(seed))
