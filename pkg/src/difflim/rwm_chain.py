"""Random Walk Metropolis in spectral coordinates.

The proposal is ``y_j = x_j + sqrt(2 l^2 / N^beta) lambda_j xi_j`` and a move
is accepted with probability ``1 ^ exp(Q)``, where ``Q`` is the log-ratio of
the target densities.  Alongside the chain itself this module provides the
split ``Q = R + r`` of the log-ratio into its Gaussian-dominant part and the
Taylor remainder, the Gaussian surrogate ``Z ~ N(-l^2, 2 l^2 S)``, the
continuous-time interpolants and one-step Monte Carlo drift estimators.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .spectral_model import TargetFunctional, psi_value, s_of

# exact recomputation period for the cached S statistic
S_REFRESH = 1000
# tolerance on the cache invariant s_current == s_of(x)
S_CACHE_TOL = 1e-10


@dataclass(frozen=True)
class InitialCondition:
    """How ``x_0`` is built.

    ``profile`` sets ``x_0 = c lambda`` (so ``S_0^N = c^2`` for every N),
    ``gaussian`` draws ``x_0 = tau lambda rho`` with standard normal rho and
    ``stationary`` is ``gaussian`` with ``tau = 1``.
    """

    kind: str = "stationary"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("profile", "gaussian", "stationary"):
            raise ValueError(f"unknown initial condition {self.kind!r}")
        if self.kind == "gaussian" and not self.value > 0:
            raise ValueError("gaussian initial condition needs tau > 0")

    @classmethod
    def profile(cls, c):
        return cls("profile", float(c))

    @classmethod
    def gaussian(cls, tau):
        return cls("gaussian", float(tau))

    @classmethod
    def stationary(cls):
        return cls("stationary", 1.0)

    @classmethod
    def parse(cls, text):
        parts = text.split()
        kind = parts[0].lower()
        if kind == "stationary":
            return cls.stationary()
        if len(parts) != 2:
            raise ValueError(f"cannot parse initial condition {text!r}")
        if kind == "profile":
            return cls.profile(float(parts[1]))
        if kind == "gaussian":
            return cls.gaussian(float(parts[1]))
        raise ValueError(f"cannot parse initial condition {text!r}")

    @property
    def is_random(self):
        return self.kind != "profile"

    @property
    def s0(self):
        """Large-N limit of ``S_0^N``."""
        return self.value**2

    def draw(self, spec, rng=None):
        if self.kind == "profile":
            return self.value * spec.lam
        return self.value * spec.lam * rng.standard_normal(spec.n)

    def __str__(self):
        return "stationary" if self.kind == "stationary" else f"{self.kind} {self.value:g}"


@dataclass(frozen=True)
class ChainConfig:
    spec: object
    psi: TargetFunctional = TargetFunctional.zero()
    ell: float = 1.0
    beta: float = 1.0
    horizon: float = 1.0
    init: InitialCondition = InitialCondition.stationary()
    seed: int = 0
    track: tuple = (1,)
    force_accept: bool = False
    # keep a StepRecord every ``diag_every`` steps; None means ceil(N/64), 0 disables
    diag_every: int = None

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")
        for j in self.track:
            if not 1 <= j <= self.spec.n:
                raise ValueError(f"tracked coordinate {j} outside 1..{self.spec.n}")

    @property
    def n(self):
        return self.spec.n

    @property
    def n_steps(self):
        # [T N]; the small guard absorbs products like 0.29 * 100 = 28.999...
        return int(math.floor(self.horizon * self.n + 1e-9))

    @property
    def step_size(self):
        return math.sqrt(2.0 * self.ell**2 / self.n**self.beta)

    @property
    def z_mean(self):
        return -(self.ell**2) * self.n ** (1.0 - self.beta)

    @property
    def diagnostics_stride(self):
        if self.diag_every is None:
            return max(1, math.ceil(self.n / 64))
        return self.diag_every

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class ChainState:
    x: np.ndarray
    k: int
    s_current: float
    rng: np.random.Generator


@dataclass(frozen=True)
class StepRecord:
    k: int
    accepted: bool
    q: float
    r: float
    r_small: float
    z: float
    delta_s: float


@dataclass
class PathRecord:
    """One realisation of the chain on the grid ``t_k = k/N``."""

    n: int
    times: np.ndarray
    s_values: np.ndarray
    track: tuple
    coords: np.ndarray  # shape (steps + 1, len(track))
    accepted: np.ndarray  # shape (steps,), entry k-1 is the move k-1 -> k
    accept_prob: np.ndarray = None  # 1 ^ e^Q of each proposal, same layout
    replica: int = 0
    horizon: float = None
    diagnostics: list = field(default_factory=list)

    @property
    def acceptance_count(self):
        return int(np.count_nonzero(self.accepted))

    def coord(self, j):
        return self.coords[:, self.track.index(j)]


def initial_state(cfg, replica=0):
    init_rng = rngmod.stream(cfg.seed, rngmod.INIT, replica) if cfg.init.is_random else None
    x0 = np.array(cfg.init.draw(cfg.spec, init_rng), dtype=float)
    return ChainState(x0, 0, s_of(x0, cfg.spec), rngmod.stream(cfg.seed, rngmod.CHAIN, replica))


def propose(state, cfg):
    xi = state.rng.standard_normal(cfg.n)
    return state.x + cfg.step_size * cfg.spec.lam * xi, xi


def log_q(x, y, cfg):
    """Log acceptance ratio ``1/2|C^{-1/2}x|^2 - 1/2|C^{-1/2}y|^2 + Psi(x) - Psi(y)``."""
    spec = cfg.spec
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (spec.n,) or y.shape != (spec.n,):
        raise ValueError(f"dimension mismatch: expected vectors of length {spec.n}")
    ux = x / spec.lam
    uy = y / spec.lam
    gauss = 0.5 * math.fsum(ux * ux) - 0.5 * math.fsum(uy * uy)
    return gauss + (psi_value(cfg.psi, x, spec) - psi_value(cfg.psi, y, spec))


def decompose_q(x, xi, cfg):
    """Return ``(q, r, r_small, z)`` for the move driven by noise ``xi`` from ``x``.

    ``r = -(l^2/N^beta)|xi|^2 - h <zeta, xi>`` with
    ``zeta = C^{-1/2} x + C^{1/2} grad Psi(x)``, ``r_small = q - r`` is the
    Taylor remainder of Psi and ``z = -l^2 N^{1-beta} - h <C^{-1/2} x, xi>``.
    """
    spec = cfg.spec
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.shape != (spec.n,) or xi.shape != (spec.n,):
        raise ValueError(f"dimension mismatch: expected vectors of length {spec.n}")
    h = cfg.step_size
    u = x / spec.lam
    c_half_grad = spec.lam * cfg.psi.mode_weights(spec) * x
    zeta = u + c_half_grad
    r = -0.5 * h * h * float(xi @ xi) - h * float(zeta @ xi)
    y = x + h * spec.lam * xi
    r_small = psi_value(cfg.psi, x, spec) - psi_value(cfg.psi, y, spec) + h * float(c_half_grad @ xi)
    z = cfg.z_mean - h * float(u @ xi)
    return r + r_small, r, r_small, z


class _Stepper:
    """Precomputed constants for the hot loop of a single chain."""

    def __init__(self, cfg):
        spec = cfg.spec
        self.cfg = cfg
        self.n = spec.n
        self.h = cfg.step_size
        self.half_h2 = 0.5 * self.h * self.h
        self.lam = spec.lam
        self.inv_lam = 1.0 / spec.lam
        self.hlam = self.h * spec.lam
        w = cfg.psi.mode_weights(spec)
        self.has_psi = not cfg.psi.is_zero
        self.lam_w = spec.lam * w
        self.w_lam_sq = w * spec.lam_sq
        self.z_mean = cfg.z_mean
        self.force = cfg.force_accept

    def advance(self, state, want_record):
        xi = state.rng.standard_normal(self.n)
        unif = state.rng.random()
        x = state.x
        a = float((x * self.inv_lam) @ xi)
        b = float(xi @ xi)
        r = -self.half_h2 * b - self.h * a
        r_small = 0.0
        if self.has_psi:
            r -= self.h * float((self.lam_w * x) @ xi)
            r_small = -self.half_h2 * float(self.w_lam_sq @ (xi * xi))
        q = r + r_small
        self.last_alpha = 1.0 if q >= 0.0 else math.exp(q)
        accepted = self.force or q >= 0.0 or (unif > 0.0 and math.log(unif) < q)
        delta_s = 0.0
        if accepted:
            delta_s = (2.0 * self.h * a + self.h * self.h * b) / self.n
            state.x = x + self.hlam * xi
            state.s_current += delta_s
        state.k += 1
        if state.k % S_REFRESH == 0:
            state.s_current = s_of(state.x, self.cfg.spec)
        if not want_record:
            return accepted, None
        z = self.z_mean - self.h * a
        return accepted, StepRecord(state.k, bool(accepted), q, r, r_small, z, delta_s)


def step(state, cfg):
    """Advance ``state`` in place by one Metropolis step and return it with its record.

    The per-step noise block is ``(xi_1..xi_N, U)``; acceptance compares
    ``log U < Q``.  ``s_current`` is updated with the exact increment
    ``(2h<C^{-1/2}x, xi> + h^2|xi|^2)/N`` on acceptance.
    """
    _, record = _Stepper(cfg).advance(state, True)
    return state, record


def run(cfg, replica=0, state=None):
    """Run one replica over ``[0, T]`` and record ``[T N] + 1`` states."""
    stepper = _Stepper(cfg)
    state = initial_state(cfg, replica) if state is None else state
    n_steps = cfg.n_steps
    stride = cfg.diagnostics_stride
    idx = np.asarray(cfg.track, dtype=int) - 1
    s_values = np.empty(n_steps + 1)
    coords = np.empty((n_steps + 1, idx.size))
    accepted = np.zeros(n_steps, dtype=bool)
    alpha = np.empty(n_steps)
    s_values[0] = state.s_current
    coords[0] = state.x[idx]
    diagnostics = []
    for k in range(1, n_steps + 1):
        want = stride > 0 and k % stride == 0
        acc, record = stepper.advance(state, want)
        accepted[k - 1] = acc
        alpha[k - 1] = stepper.last_alpha
        s_values[k] = state.s_current
        coords[k] = state.x[idx]
        if record is not None:
            diagnostics.append(record)
    times = np.arange(n_steps + 1) / cfg.n
    return PathRecord(cfg.n, times, s_values, tuple(cfg.track), coords, accepted, alpha, replica, cfg.horizon, diagnostics)


def _run_batch(args):
    cfg, replicas = args
    return [run(cfg, r) for r in replicas]


def run_ensemble(cfg, replicas, jobs=1):
    """Run replicas ``0..replicas-1``; output order never depends on ``jobs``."""
    indices = list(range(replicas))
    if jobs <= 1 or replicas <= 1:
        return [run(cfg, r) for r in indices]
    batches = [indices[i::jobs] for i in range(jobs)]
    out = [None] * replicas
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for batch, paths in zip(batches, pool.map(_run_batch, [(cfg, b) for b in batches])):
            for r, p in zip(batch, paths):
                out[r] = p
    return out


def _interp(path, values, t, kind):
    t_arr = np.asarray(t, dtype=float)
    horizon = path.horizon if path.horizon is not None else path.times[-1]
    if np.any(t_arr < 0) or np.any(t_arr > horizon + 1e-12):
        raise ValueError(f"t must lie in [0, {horizon}]")
    if kind == "linear":
        out = np.interp(t_arr, path.times, values)
    elif kind == "constant":
        k = np.minimum(np.floor(t_arr * path.n + 1e-9).astype(int), len(values) - 1)
        out = values[k]
    else:
        raise ValueError(f"unknown interpolation kind {kind!r}")
    return float(out) if out.ndim == 0 else out


def interpolate_s(path, t, kind="linear"):
    """Continuous (``linear``) or piecewise-constant interpolant of S at time t."""
    return _interp(path, path.s_values, t, kind)


def interpolate_coord(path, j, t, kind="linear"):
    return _interp(path, path.coord(j), t, kind)


def mean_acceptance(path, k_range=None, kind="count"):
    """Mean acceptance over steps ``k_range = (first, last)``, 1-based inclusive.

    ``kind="count"`` is the fraction of accepted moves.  ``kind="probability"``
    averages ``1 ^ e^Q`` over the same proposals instead: the same expectation
    with far smaller variance, and still informative when acceptances are
    too rare to be counted.
    """
    if kind not in ("count", "probability"):
        raise ValueError(f"unknown kind {kind!r}")
    paths = path if isinstance(path, (list, tuple)) else [path]
    total = 0
    acc = 0.0
    for p in paths:
        lo, hi = (1, len(p.accepted)) if k_range is None else k_range
        window = (p.accepted if kind == "count" else p.accept_prob)[lo - 1:hi]
        total += window.size
        acc += float(np.count_nonzero(window)) if kind == "count" else math.fsum(window)
    if total == 0:
        raise ValueError("empty acceptance window")
    return acc / total


@dataclass(frozen=True)
class OneStepStatistics:
    """Monte Carlo moments of one transition from a frozen state."""

    m_samples: int
    drift_s: float
    drift_s_se: float
    qv_s: float  # N E[(dS)^2]
    qv_s_se: float
    coord_drift: dict  # j -> (estimate, se) of N E[dx_j]
    acceptance: float


def one_step_statistics(x, cfg, m_samples, coords=(), chunk=8192, stream_key=0):
    """Sample ``m_samples`` independent one-step transitions from ``x``.

    Returns ``N E[dS]``, ``N E[(dS)^2]`` and ``N E[dx_j]`` for the requested
    coordinates with their standard errors.
    """
    if m_samples < 2:
        raise ValueError("need at least two samples")
    spec = cfg.spec
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError(f"dimension mismatch: expected a vector of length {spec.n}")
    gen = rngmod.stream(cfg.seed, rngmod.ESTIMATOR, stream_key)
    n = spec.n
    h = cfg.step_size
    u = x / spec.lam
    w = cfg.psi.mode_weights(spec)
    zeta = u + spec.lam * w * x
    w_lam_sq = w * spec.lam_sq
    idx = np.asarray(coords, dtype=int) - 1
    ds_all = np.empty(m_samples)
    dx_all = np.empty((m_samples, idx.size))
    acc_all = np.empty(m_samples, dtype=bool)
    done = 0
    while done < m_samples:
        b = min(chunk, m_samples - done)
        xi = gen.standard_normal((b, n))
        unif = gen.random(b)
        a = xi @ u
        xi_sq = xi * xi
        sq = xi_sq.sum(axis=1)
        q = -0.5 * h * h * sq - h * (xi @ zeta)
        if not cfg.psi.is_zero:
            q -= 0.5 * h * h * (xi_sq @ w_lam_sq)
        with np.errstate(divide="ignore"):
            acc = cfg.force_accept | (np.log(unif) < q)
        ds_all[done:done + b] = np.where(acc, (2.0 * h * a + h * h * sq) / n, 0.0)
        if idx.size:
            dx_all[done:done + b] = np.where(acc[:, None], h * spec.lam[idx] * xi[:, idx], 0.0)
        acc_all[done:done + b] = acc
        done += b
    root_m = math.sqrt(m_samples)
    drift = n * ds_all
    qv = n * ds_all * ds_all
    coord_drift = {}
    for c, j in enumerate(coords):
        col = n * dx_all[:, c]
        coord_drift[int(j)] = (float(col.mean()), float(col.std(ddof=1) / root_m))
    return OneStepStatistics(
        m_samples,
        float(drift.mean()),
        float(drift.std(ddof=1) / root_m),
        float(qv.mean()),
        float(qv.std(ddof=1) / root_m),
        coord_drift,
        float(acc_all.mean()),
    )


def estimate_drift_s(x, cfg, m_samples):
    """``N E[S_{k+1} - S_k | x_k = x]`` and its standard error."""
    if m_samples < 1000:
        raise ValueError("m_samples must be at least 1000")
    st = one_step_statistics(x, cfg, m_samples)
    return st.drift_s, st.drift_s_se


def estimate_drift_coord(x, cfg, m_samples, coords):
    """``{j: (N E[x_{k+1,j} - x_{k,j} | x_k = x], se)}``."""
    if m_samples < 1000:
        raise ValueError("m_samples must be at least 1000")
    return one_step_statistics(x, cfg, m_samples, coords).coord_drift


def sample_q_decomposition(x, cfg, m_samples, chunk=8192, stream_key=0):
    """Draw ``m_samples`` triples ``(r, r_small, z)`` at a frozen state ``x``."""
    spec = cfg.spec
    x = np.asarray(x, dtype=float)
    gen = rngmod.stream(cfg.seed, rngmod.ESTIMATOR, stream_key)
    h = cfg.step_size
    u = x / spec.lam
    w = cfg.psi.mode_weights(spec)
    zeta = u + spec.lam * w * x
    w_lam_sq = w * spec.lam_sq
    r = np.empty(m_samples)
    r_small = np.empty(m_samples)
    z = np.empty(m_samples)
    done = 0
    while done < m_samples:
        b = min(chunk, m_samples - done)
        xi = gen.standard_normal((b, spec.n))
        xi_sq = xi * xi
        sl = slice(done, done + b)
        r[sl] = -0.5 * h * h * xi_sq.sum(axis=1) - h * (xi @ zeta)
        r_small[sl] = -0.5 * h * h * (xi_sq @ w_lam_sq)
        z[sl] = cfg.z_mean - h * (xi @ u)
        done += b
    return r, r_small, z


def predicted_acceptance(ell, beta, n, s):
    """Large-N mean acceptance when ``Q ~ N(-l^2 N^{1-beta}, 2 l^2 N^{1-beta} S)``."""
    from .scalar_laws import expect_min1_exp

    m = n ** (1.0 - beta)
    return expect_min1_exp(-(ell**2) * m, math.sqrt(2.0 * ell**2 * m * s))
