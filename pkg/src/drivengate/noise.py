"""Ornstein-Uhlenbeck and Wiener noise with exact updates and self-tests.

Random numbers come from counter-based ``Philox`` generators.  Every
trajectory owns a substream spawned from one ``SeedSequence``, so ensembles
are reproducible and independent of how the trajectories are distributed over
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import TimeStepError

DT_GUARD_RATIO = 1.0 / 3.0


@dataclass(frozen=True)
class OUConfig:
    """Ornstein-Uhlenbeck process ``dX = -X/tau dt + sqrt(c) dW``.

    Parameters
    ----------
    tau : float
        Correlation time (s).
    c : float
        Diffusion constant (units of ``X**2 / s``).
    x0 : float
        Initial value.
    """

    tau: float
    c: float
    x0: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("O-U correlation time tau must be positive")
        if not self.c >= 0:
            raise ValueError("O-U diffusion constant c must be non-negative")

    @property
    def stationary_variance(self):
        return 0.5 * self.c * self.tau

    @property
    def stationary_std(self):
        return math.sqrt(self.stationary_variance)


@dataclass(frozen=True)
class WienerConfig:
    """Driftless Wiener process with ``Var W(t) = c t``."""

    c: float
    x0: float = 0.0

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("Wiener diffusion constant c must be non-negative")


@dataclass(frozen=True, eq=False)
class NoisePath:
    """One sampled noise realization."""

    times: np.ndarray
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("noise-path times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def dump(self, path):
        """Write ``time,value`` rows as comma-separated text."""
        np.savetxt(path, np.column_stack([self.times, self.values]), delimiter=",",
                   header="time_s,value", comments="")


def make_rng(seed):
    """Philox generator seeded from an integer or ``SeedSequence``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def trajectory_rngs(seed, n):
    """``n`` independent generators spawned from ``seed``."""
    return [make_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _ou_coeffs(dt, cfg):
    decay = math.exp(-dt / cfg.tau)
    return decay, math.sqrt(cfg.stationary_variance * -math.expm1(-2 * dt / cfg.tau))


def ou_step(x, dt, cfg, rng):
    """Exact O-U update over ``dt`` (works elementwise on arrays)."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    decay, sd = _ou_coeffs(dt, cfg)
    return x * decay + sd * rng.standard_normal(np.shape(x))


def wiener_step(x, dt, cfg, rng):
    """Exact Wiener update ``x + sqrt(c dt) n``."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    return x + math.sqrt(cfg.c * dt) * rng.standard_normal(np.shape(x))


def sample_values(cfg, dt, n_steps, rng):
    """Values at ``0, dt, ..., (n_steps-1) dt`` starting from ``cfg.x0``."""
    out = np.empty(n_steps)
    x = cfg.x0
    for k in range(n_steps):
        out[k] = x
        if k + 1 < n_steps:
            x = (ou_step if isinstance(cfg, OUConfig) else wiener_step)(x, dt, cfg, rng)
    return out


def sample_path(cfg, times, seed):
    """:class:`NoisePath` on an arbitrary increasing grid starting at ``cfg.x0``."""
    t = np.asarray(times, dtype=float)
    rng = make_rng(seed)
    v = np.empty_like(t)
    x = cfg.x0
    step = ou_step if isinstance(cfg, OUConfig) else wiener_step
    for k in range(len(t)):
        if k:
            x = step(x, t[k] - t[k - 1], cfg, rng)
        v[k] = x
    return NoisePath(t, v, seed if isinstance(seed, int) else None)


def dephasing_config(T2, tau_ratio=0.1):
    """O-U model of qubit-frequency noise with decoherence time ``T2``."""
    if not T2 > 0:
        raise ValueError("T2 must be positive")
    if math.isinf(T2):
        return OUConfig(tau=1.0, c=0.0)
    tau = tau_ratio * T2
    return OUConfig(tau=tau, c=2.0 / (T2 * tau**2))


def intensity_config(Omega_d, zeta_I, tau=1e-3):
    """O-U model of drive-strength noise with stationary std ``zeta_I * Omega_d``."""
    if zeta_I < 0:
        raise ValueError("relative intensity noise zeta_I must be non-negative")
    return OUConfig(tau=tau, c=2.0 * (zeta_I * Omega_d) ** 2 / tau)


def phase_config(zeta_p, t_g, n_gates=1000):
    """Wiener model of laser-phase drift: std ``zeta_p * pi`` after ``n_gates`` gates."""
    if zeta_p < 0:
        raise ValueError("relative phase drift zeta_p must be non-negative")
    return WienerConfig(c=(zeta_p * math.pi) ** 2 / (n_gates * t_g))


def integrated_ou_variance(cfg, t_f):
    """Variance of ``Y(t_f) = int_0^t_f X dt`` for a process started at zero."""
    if not t_f > 0:
        raise ValueError("t_f must be positive")
    tau = cfg.tau
    return cfg.c * tau**2 * (
        t_f + 2 * tau * math.expm1(-t_f / tau) - 0.5 * tau * math.expm1(-2 * t_f / tau)
    )


def discretized_integrated_variance(cfg, t_f, dt):
    """Variance of the piecewise-constant sum ``dt * sum_k X(k dt)``, ``X(0) = 0``."""
    n = int(round(t_f / dt))
    k = np.arange(n)
    lo = np.minimum.outer(k, k)
    lag = np.abs(np.subtract.outer(k, k))
    cov = cfg.stationary_variance * np.exp(-lag * dt / cfg.tau) * -np.expm1(-2 * lo * dt / cfg.tau)
    return dt**2 * cov.sum()


def check_time_step(dt, cfg, ratio=DT_GUARD_RATIO):
    """Refuse steps that under-resolve the O-U correlation time."""
    if isinstance(cfg, OUConfig) and cfg.c > 0 and dt > ratio * cfg.tau:
        raise TimeStepError(
            f"time step {dt:.3e} s exceeds tau/{1 / ratio:g} = {ratio * cfg.tau:.3e} s"
        )


@dataclass(frozen=True)
class SelfTestResult:
    """Outcome of one statistical self-test."""

    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool


def _within(name, value, expected, sigma, k=3.0):
    tol = k * sigma
    return SelfTestResult(name, float(value), float(expected), float(tol),
                          bool(abs(value - expected) <= tol))


def self_test(n_samples=100_000, seed=12345):
    """Statistical checks of the samplers against closed forms.

    Returns
    -------
    list of SelfTestResult
    """
    rng = make_rng(seed)
    cfg = OUConfig(tau=2.0, c=3.0)
    var = cfg.stationary_variance
    n = n_samples
    out = []

    dt = 0.7
    x = ou_step(np.zeros(n), dt, cfg, rng)
    v1 = var * -math.expm1(-2 * dt / cfg.tau)
    out.append(_within("ou_one_step_mean", x.mean(), 0.0, math.sqrt(v1 / n)))
    out.append(_within("ou_one_step_variance", x.var(), v1, v1 * math.sqrt(2 / n)))

    x0 = 1.5
    x = ou_step(np.full(n, x0), dt, cfg, rng)
    out.append(_within("ou_mean_reversion", x.mean(), x0 * math.exp(-dt / cfg.tau), math.sqrt(v1 / n)))

    xs = rng.standard_normal(n) * cfg.stationary_std
    lag = 1.3
    xl = ou_step(xs, lag, cfg, rng)
    prod = xs * xl
    out.append(_within("ou_stationary_autocovariance", prod.mean(),
                       var * math.exp(-lag / cfg.tau), prod.std() / math.sqrt(n)))

    a = ou_step(ou_step(np.zeros(n), dt / 2, cfg, rng), dt / 2, cfg, rng)
    b = ou_step(np.zeros(n), dt, cfg, rng)
    p = stats.ks_2samp(a, b).pvalue
    out.append(SelfTestResult("ou_step_splitting_ks_pvalue", float(p), 0.001, 0.0, bool(p > 0.001)))

    wc = WienerConfig(c=0.8)
    t = 2.5
    w = wiener_step(np.zeros(n), t, wc, rng)
    out.append(_within("wiener_variance", w.var(), wc.c * t, wc.c * t * math.sqrt(2 / n)))

    t_f = 40 * cfg.tau
    exact = integrated_ou_variance(cfg, t_f)
    disc = discretized_integrated_variance(cfg, t_f, cfg.tau / 10)
    rel = abs(disc / exact - 1)
    out.append(SelfTestResult("integrated_variance_rel_dev", rel, 0.0, 0.02, bool(rel < 0.02)))
    return out


def free_induction(cfg, t_f, steps, n_paths, seed):
    """Ensemble ``<sigma_x(t)>`` of a qubit with frequency noise ``X(t) sigma_z / 2``.

    The noise is held constant over each of ``steps`` intervals.

    Returns
    -------
    times, mean, stderr : ndarray
    """
    dt = t_f / steps
    rng = make_rng(seed)
    x = np.full(n_paths, cfg.x0, dtype=float)
    phase = np.zeros(n_paths)
    mean = np.empty(steps + 1)
    err = np.empty(steps + 1)
    mean[0], err[0] = 1.0, 0.0
    for k in range(steps):
        phase += x * dt
        x = ou_step(x, dt, cfg, rng)
        c = np.cos(phase)
        mean[k + 1] = c.mean()
        err[k + 1] = c.std() / math.sqrt(n_paths)
    return np.arange(steps + 1) * dt, mean, err


def free_induction_check(T2, tau_ratio=0.1, n_paths=10_000, steps=400, seed=2024, n_batches=10):
    """Free-induction decay against its Gaussian closed form.

    The ensemble ``<cos Y(t)>`` over ``[0, 2 T2]`` is compared pointwise with
    ``exp(-Var Y / 2)`` of the sampled (piecewise-constant) process, and the
    late-time decay rate with ``1/T2``.  Monte-Carlo errors come from
    ``n_batches`` independent batches.

    Returns
    -------
    list of SelfTestResult
    """
    cfg = dephasing_config(T2, tau_ratio)
    t_f = 2 * T2
    per = max(n_paths // n_batches, 2)
    runs = [free_induction(cfg, t_f, steps, per, s) for s in np.random.SeedSequence(seed).spawn(n_batches)]
    times = runs[0][0]
    means = np.array([r[1] for r in runs])
    mean = means.mean(axis=0)
    err = np.sqrt(np.mean([r[2] ** 2 for r in runs], axis=0) / n_batches)

    dt = t_f / steps
    k = np.arange(steps)
    lag = np.abs(np.subtract.outer(k, k))
    lo = np.minimum.outer(k, k)
    cov = cfg.stationary_variance * np.exp(-lag * dt / cfg.tau) * -np.expm1(-2 * lo * dt / cfg.tau)
    var = dt**2 * np.concatenate([[0.0], cov.cumsum(0).cumsum(1).diagonal()])
    z = np.abs(mean[1:] - np.exp(-0.5 * var[1:])) / np.maximum(err[1:], 1e-300)

    # two-point decay rate between 5 tau and t_f, per batch
    a = int(np.searchsorted(times, 5 * cfg.tau))
    rates = np.log(means[:, a] / means[:, -1]) / (times[-1] - times[a]) * T2
    rate_err = rates.std(ddof=1) / math.sqrt(n_batches)
    return [
        SelfTestResult("free_induction_max_zscore", float(z.max()), 0.0, 4.0, bool(z.max() <= 4.0)),
        _within("free_induction_rate_times_T2", rates.mean(), 1.0, rate_err),
    ]


__all__ = [
    "OUConfig",
    "WienerConfig",
    "NoisePath",
    "SelfTestResult",
    "ou_step",
    "wiener_step",
    "sample_values",
    "sample_path",
    "trajectory_rngs",
    "make_rng",
    "dephasing_config",
    "intensity_config",
    "phase_config",
    "integrated_ou_variance",
    "discretized_integrated_variance",
    "check_time_step",
    "self_test",
    "free_induction",
    "free_induction_check",
]
