"""Propagation engines for static, stochastic and periodically driven gates.

Static single-drive gates use one eigendecomposition of ``H'``.  Noisy gates
are piecewise constant: within step ``k`` of trajectory ``j`` the Hamiltonian
is ``H0 + x_jk V``.  The step propagator ``exp(-i (H0 + x V) dt)`` is an
entire function of ``x``; it is interpolated on Chebyshev nodes spanning all
sampled ``x`` with an a-priori error bound and an a-posteriori spot check, so
every node is an exact eigendecomposition-based exponential.  Laser-phase
noise is exact by construction: ``H'(phi) = R H' R†`` with the diagonal phonon
rotation ``R = exp(-i phi N)``.

The doubly-driven gate is integrated with the fourth-order Gauss-Legendre
Magnus scheme over segments; its periodicity reduces the work to one
repetition pattern of segments.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConstraintError, NumericalGuardError
from .hamiltonian import (
    HAMILTONIAN_KINDS,
    NO_ECHO,
    DoubleDriveModel,
    DssModel,
    EchoSpec,
    build_dss_intensity_noisy,
)
from .noise import OUConfig, WienerConfig, check_time_step, ou_step, trajectory_rngs, wiener_step
from .qcore import SpectralPropagator, State, signed_permutation_sectors

INTERP_TOL = 1e-11
WORKERS_ENV = "DRIVENGATE_WORKERS"


def default_workers():
    """Worker count from ``DRIVENGATE_WORKERS`` (default: all cores)."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass(frozen=True)
class PropagationPlan:
    """Description of a (possibly stochastic) gate simulation.

    Parameters
    ----------
    kind : str
        One of :data:`HAMILTONIAN_KINDS`.
    t_g : float
        Gate duration (s).
    steps : int
        Piecewise-constant steps per gate.
    echo : EchoSpec
        Refocusing pulse, inserted after ``steps // 2`` steps.
    noise : OUConfig or WienerConfig or None
        Noise process driving the stochastic term.
    n_traj : int
        Number of noise realizations.
    seed : int
        Base seed; trajectory ``j`` uses the ``j``-th spawned substream.
    workers : int or None
        Process count (``None``: from the environment).
    """

    kind: str
    t_g: float
    steps: int = 200
    echo: EchoSpec = NO_ECHO
    noise: OUConfig | WienerConfig | None = None
    n_traj: int = 1000
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.kind not in HAMILTONIAN_KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}; expected one of {HAMILTONIAN_KINDS}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if not self.t_g > 0:
            raise ValueError("t_g must be positive")
        if self.n_traj < 1:
            raise ValueError("n_traj must be positive")
        if self.echo.active and self.steps % 2:
            raise ValueError("an echo at half the gate needs an even number of steps")
        noisy = self.kind not in ("dss_time_independent", "double_drive_lab")
        if noisy and self.noise is None:
            raise ValueError(f"kind {self.kind!r} needs a noise process")
        if self.kind == "dss_phase_noisy" and not isinstance(self.noise, WienerConfig):
            raise ValueError("laser-phase noise is a Wiener process")
        if self.kind in ("dss_intensity_noisy", "dss_dephasing_noisy", "double_drive_noisy") and not isinstance(
            self.noise, OUConfig
        ):
            raise ValueError(f"kind {self.kind!r} needs an O-U process")
        if isinstance(self.noise, OUConfig):
            check_time_step(self.dt, self.noise)

    @property
    def dt(self):
        return self.t_g / self.steps


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Monte-Carlo ensemble outcome.

    Attributes
    ----------
    mean_state : State
        Trajectory-averaged density matrix.
    per_traj_fidelity : ndarray
    stderr : float
        Sample standard deviation over ``sqrt(n_traj)``.
    """

    mean_state: State
    per_traj_fidelity: np.ndarray
    stderr: float

    @property
    def fidelity(self):
        return float(np.mean(self.per_traj_fidelity))

    @property
    def error(self):
        return 1.0 - self.fidelity


# ---------------------------------------------------------------- static


def exchange_parity_sectors(layout, *ops):
    """Invariant subspaces of ion exchange times zigzag parity.

    Returns ``None`` unless every operator in ``ops`` commutes with the
    symmetry.
    """
    lv = layout.n_levels
    q1, q2, n1, n2 = np.unravel_index(np.arange(layout.dim), (2, 2, lv, lv))
    perm = np.ravel_multi_index((q2, q1, n1, n2), (2, 2, lv, lv))
    signs = (-1.0) ** n2
    for H in ops:
        PH = np.empty_like(H)
        PH[perm] = signs[:, None] * H
        HP = H[:, perm] * signs[None, :]
        if np.abs(PH - HP).max() > 1e-12 * np.abs(H).max():
            return None
    return signed_permutation_sectors(perm, signs)


def dss_sectors(model):
    """Symmetry sectors of ``H'`` (``None`` for asymmetric forces)."""
    return exchange_parity_sectors(model.layout, model.H)


def dss_propagator(params, layout):
    """Spectral propagator of ``H'`` (symmetry-blocked when possible)."""
    model = DssModel(params, layout)
    return SpectralPropagator(model.H, dss_sectors(model))


def propagate_static(H, t):
    """``exp(-iHt)`` for a scalar or a sequence of times.

    ``H`` may be a matrix or an existing :class:`SpectralPropagator`, whose
    eigendecomposition is then reused.
    """
    sp = H if isinstance(H, SpectralPropagator) else SpectralPropagator(H)
    if np.ndim(t) == 0:
        return sp.at(float(t))
    return [sp.at(float(x)) for x in t]


def initial_columns(initial, layout=None):
    """``(weights, vectors)`` of a state given as State, vector or pair."""
    if isinstance(initial, State):
        return initial.mixture()
    if isinstance(initial, tuple):
        w, v = initial
        return np.asarray(w, dtype=float), np.asarray(v, dtype=complex)
    v = np.asarray(initial, dtype=complex)
    return np.ones(1), (v / np.linalg.norm(v))[:, None]


def target_fidelities(vecs, target, weights=None, n_comp=1):
    """Bell-state fidelities of pure columns.

    ``vecs`` holds ``n_traj * n_comp`` columns, component-major within each
    trajectory; the result is the weighted sum over components.
    """
    t = np.asarray(target, dtype=complex)
    d = vecs.shape[0] // 4
    amp = np.einsum("i,iak->ak", t.conj(), vecs.reshape(4, d, -1))
    f = (np.abs(amp) ** 2).sum(axis=0).reshape(-1, n_comp)
    w = np.ones(n_comp) if weights is None else np.asarray(weights)
    return f @ w


def static_gate(params, layout, initial, echo=NO_ECHO, t=None, propagator=None):
    """Evolve pure components under ``H'`` for ``t`` (default ``t_g``) with an optional echo.

    Returns
    -------
    weights, vectors : ndarray
    """
    t = params.t_g if t is None else t
    sp = propagator or dss_propagator(params, layout)
    w, v = initial_columns(initial)
    if echo.active:
        v = sp.apply(t / 2, v)
        v = layout.embed_qubits(echo.qubit_operator) @ v
        v = sp.apply(t / 2, v)
    else:
        v = sp.apply(t, v)
    return w, v


def phase_space_trajectory(params, layout, initial, times, propagator=None):
    """Dressed-frame quadratures of both modes.

    Returns
    -------
    ndarray, shape (2, len(times), 2)
        ``[mode, time, (x~, p~)]`` with ``x~ = <a + a†>/sqrt(2)`` and
        ``p~ = i <a† - a>/sqrt(2)``.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(times > params.t_g * (1 + 1e-12)):
        raise ValueError("trajectory times must lie in [0, t_g]")
    sp = propagator or dss_propagator(params, layout)
    w, v = initial_columns(initial)
    c = sp.to_eigenbasis(v)
    ops = [layout.embed(np.eye(4), layout.phonon_a(n)) for n in (1, 2)]
    out = np.empty((2, len(times), 2))
    for k, t in enumerate(times):
        psi = sp.from_eigenbasis(c, t)
        for n in range(2):
            a = np.einsum("ik,ik->k", psi.conj(), ops[n] @ psi) @ w
            a *= np.exp(1j * params.deltas[n] * t)
            out[n, k] = math.sqrt(2) * a.real, math.sqrt(2) * a.imag
    return out


# ------------------------------------------------------- noisy stepping


class ChebyshevFamily:
    """Chebyshev interpolant of ``x -> exp(-i (H0 + x V) dt)`` on ``[lo, hi]``.

    Parameters
    ----------
    node_unitary : callable
        Exact step propagator for a scalar ``x``.
    lo, hi : float
        Interpolation interval.
    order : int
        Polynomial degree ``K`` (``K + 1`` nodes).
    """

    def __init__(self, node_unitary, lo, hi, order):
        self.lo, self.hi, self.order = float(lo), float(hi), int(order)
        k = np.arange(order + 1)
        theta = (2 * k + 1) * np.pi / (2 * order + 2)
        self.mid = 0.5 * (self.hi + self.lo)
        self.half = 0.5 * (self.hi - self.lo)
        self.nodes = self.mid + self.half * np.cos(theta)
        self._bw = (-1.0) ** k * np.sin(theta)
        self.unitaries = np.stack([node_unitary(x) for x in self.nodes])

    def weights(self, x):
        """Lagrange weights ``(len(x), K + 1)`` by the barycentric formula."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[:, None] - self.nodes[None, :]
        exact = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            q = self._bw / diff
            w = q / q.sum(axis=1, keepdims=True)
        hit = exact.any(axis=1)
        w[hit] = exact[hit].astype(float)
        return w

    def matrix(self, x):
        return np.tensordot(self.weights([x])[0], self.unitaries, axes=1)

    def apply(self, vecs, x):
        """Act column-wise: column ``j`` is propagated with ``x[j]``."""
        w = self.weights(x)
        out = np.zeros_like(vecs)
        for k in range(self.order + 1):
            out += (self.unitaries[k] @ vecs) * w[:, k][None, :]
        return out


def chebyshev_order(width, op_norm, dt, n_steps, tol=INTERP_TOL, max_order=24):
    """Smallest degree whose interpolation bound, summed over steps, is below ``tol``.

    Uses ``|| d^n U / dx^n || <= (||V|| dt)^n`` and the Chebyshev remainder
    ``(h^(K+1) / (2^K (K+1)!)) max ||U^(K+1)||`` with half-width ``h``.
    """
    z = 0.5 * width * op_norm * dt
    for K in range(1, max_order + 1):
        bound = 2.0 * z ** (K + 1) / math.factorial(K + 1)
        if bound * n_steps < tol:
            return K
    raise NumericalGuardError(f"Chebyshev interpolation needs more than {max_order} nodes (z = {z:.3g})")


def _spot_check(family, node_unitary, rng, tol):
    xs = family.lo + (family.hi - family.lo) * rng.random(2)
    for x in xs:
        err = np.abs(family.matrix(x) - node_unitary(x)).max()
        if err > tol:
            raise NumericalGuardError(f"step-propagator interpolation error {err:.2e} exceeds {tol:.1e}")


def sample_noise(cfg, n_traj, steps, dt, seed):
    """Noise value held during each step: ``(n_traj, steps)``, first step at ``x0``."""
    rngs = trajectory_rngs(seed, n_traj)
    step = ou_step if isinstance(cfg, OUConfig) else wiener_step
    out = np.empty((n_traj, steps))
    for j, rng in enumerate(rngs):
        x = cfg.x0
        for k in range(steps):
            out[j, k] = x
            x = step(x, dt, cfg, rng)
    return out


# trajectories are propagated in fixed-size blocks so that floating-point
# results do not depend on how the blocks are spread over workers
TRAJ_BLOCK = 32


def _chunks(n, workers):
    n_blocks = -(-n // TRAJ_BLOCK)
    workers = max(1, min(workers, n_blocks))
    edges = np.linspace(0, n_blocks, workers + 1).astype(int) * TRAJ_BLOCK
    edges = np.minimum(edges, n)
    return [(edges[i], edges[i + 1]) for i in range(workers) if edges[i + 1] > edges[i]]


def _noisy_chunk(args):
    (kind, params, layout, plan, weights, vecs, target, xs, echo_op, family_spec) = args
    return [
        _run_columns(kind, params, layout, plan, weights, vecs, target, xs[a:a + TRAJ_BLOCK],
                     echo_op, family_spec)
        for a in range(0, xs.shape[0], TRAJ_BLOCK)
    ]


def _step_family(kind, params, layout, dt, lo, hi, order):
    model = DssModel(params, layout)
    if kind == "dss_intensity_noisy":
        def node(x):
            return SpectralPropagator(build_dss_intensity_noisy(params, layout, x)).at(dt)
    else:
        H0, V = model.H, model.dephasing

        def node(x):
            return SpectralPropagator(H0 + x * V).at(dt)
    return ChebyshevFamily(node, lo, hi, order), node


def _run_columns(kind, params, layout, plan, weights, vecs, target, xs, echo_op, family_spec):
    n_comp = vecs.shape[1]
    n_traj = xs.shape[0]
    psi = np.repeat(vecs[:, None, :], n_traj, axis=1).reshape(vecs.shape[0], -1)
    x_cols = np.repeat(xs, n_comp, axis=0)
    half = plan.steps // 2
    if kind == "dss_phase_noisy":
        model = DssModel(params, layout)
        U0 = SpectralPropagator(model.H).at(plan.dt)
        N = np.tile(sum(layout.phonon_numbers), 4)
        for k in range(plan.steps):
            if echo_op is not None and k == half:
                psi = echo_op @ psi
            ph = np.exp(-1j * np.outer(N, x_cols[:, k]))
            psi = ph * (U0 @ (ph.conj() * psi))
    else:
        family, _ = _step_family(kind, params, layout, plan.dt, *family_spec)
        for k in range(plan.steps):
            if echo_op is not None and k == half:
                psi = echo_op @ psi
            psi = family.apply(psi, x_cols[:, k])
    fid = target_fidelities(psi, target, weights, n_comp)
    wcol = np.tile(weights, n_traj)
    rho = (psi * wcol[None, :]) @ psi.conj().T
    return fid, rho


def propagate_noisy(plan, params, layout, initial, target):
    """Monte-Carlo ensemble of a noisy single-drive gate.

    Parameters
    ----------
    plan : PropagationPlan
        ``kind`` is ``dss_dephasing_noisy``, ``dss_intensity_noisy`` or
        ``dss_phase_noisy``.
    initial : State, ndarray or (weights, vectors)
    target : ndarray
        Two-qubit target state; fidelity is taken after tracing the phonons.
    """
    if plan.kind not in ("dss_dephasing_noisy", "dss_intensity_noisy", "dss_phase_noisy"):
        raise ValueError(f"propagate_noisy does not handle kind {plan.kind!r}")
    weights, vecs = initial_columns(initial)
    xs = sample_noise(plan.noise, plan.n_traj, plan.steps, plan.dt, plan.seed)
    return _ensemble(plan, params, layout, weights, vecs, target, xs)


def _ensemble(plan, params, layout, weights, vecs, target, xs):
    echo_op = layout.embed_qubits(plan.echo.qubit_operator) if plan.echo.active else None
    family_spec = None
    if plan.kind != "dss_phase_noisy":
        X = float(np.abs(xs).max())
        if X == 0.0:
            family_spec = (-1.0, 1.0, 1)
        else:
            order = chebyshev_order(2 * X, 1.0, plan.dt, plan.steps)
            family_spec = (-X, X, order)
            family, node = _step_family(plan.kind, params, layout, plan.dt, *family_spec)
            _spot_check(family, node, np.random.default_rng(0), 100 * INTERP_TOL)
    workers = plan.workers or default_workers()
    chunks = _chunks(plan.n_traj, workers)
    jobs = [
        (plan.kind, params, layout, plan, weights, vecs, target, xs[a:b], echo_op, family_spec)
        for a, b in chunks
    ]
    if len(jobs) == 1:
        results = _noisy_chunk(jobs[0])
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as ex:
            results = [r for block in ex.map(_noisy_chunk, jobs) for r in block]
    fid = np.concatenate([r[0] for r in results])
    rho = sum(r[1] for r in results) / plan.n_traj
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    state = State(layout, rho, psd_check_dim=0)
    stderr = float(fid.std(ddof=1) / math.sqrt(len(fid))) if len(fid) > 1 else 0.0
    return EnsembleResult(state, fid, stderr)


def propagate_sequential_gates(plan, params, layout, n_gates, initial, target):
    """Per-gate fidelities of ``n_gates`` consecutive gates under a drifting laser phase.

    The Wiener path runs continuously through all gates (``steps`` samples per
    gate); every gate starts from ``initial``.
    """
    if plan.kind != "dss_phase_noisy":
        raise ValueError("sequential gates model laser-phase drift (kind dss_phase_noisy)")
    weights, vecs = initial_columns(initial)
    rng = trajectory_rngs(plan.seed, 1)[0]
    path = np.empty(n_gates * plan.steps)
    x = plan.noise.x0
    for k in range(len(path)):
        path[k] = x
        x = wiener_step(x, plan.dt, plan.noise, rng)
    xs = path.reshape(n_gates, plan.steps)
    seq_plan = PropagationPlan(
        kind=plan.kind, t_g=plan.t_g, steps=plan.steps, echo=plan.echo, noise=plan.noise,
        n_traj=n_gates, seed=plan.seed, workers=plan.workers,
    )
    res = _ensemble(seq_plan, params, layout, weights, vecs, target, xs)
    return res.per_traj_fidelity, path


# ----------------------------------------------------------- double drive


def _gl4_step(model, t, h, x):
    """One fourth-order Gauss-Legendre Magnus step of ``H_det + x V``."""
    c = math.sqrt(3) / 6
    t1, t2 = t + (0.5 - c) * h, t + (0.5 + c) * h
    H1 = model.hamiltonian(t1, x)
    H2 = model.hamiltonian(t2, x)
    # Omega = h/2 (A1 + A2) + (sqrt(3)/12) h^2 [A2, A1] with A = -iH; G = i Omega
    G = 0.5 * h * (H1 + H2) - 1j * (math.sqrt(3) / 12) * h**2 * (H2 @ H1 - H1 @ H2)
    return _expm_hermitian_small(G)


def _expm_hermitian_small(G, tol=1e-17):
    """``exp(-iG)`` by a truncated Taylor series when ``||G||_1`` is small."""
    norm = float(np.abs(G).sum(axis=0).max())
    if norm > 0.5:
        return SpectralPropagator(G).at(1.0)
    A = -1j * G
    U = np.eye(len(G), dtype=complex) + A
    term, k, bound = A, 1, norm
    while bound > tol:
        k += 1
        term = term @ A / k
        U += term
        bound *= norm / k
    return U


def _integrate(model, t0, t1, n_sub, x):
    h = (t1 - t0) / n_sub
    U = np.eye(model.dim, dtype=complex)
    for i in range(n_sub):
        U = _gl4_step(model, t0 + i * h, h, x) @ U
    return U


@dataclass
class DoubleDriveEngine:
    """Segment propagators of the doubly-driven gate.

    Parameters
    ----------
    params : GateParams
        Double-drive parameters with integer ``p`` and ``q``.
    layout : HilbertLayout
    segments : int
        Segments per gate (noise refresh steps).
    per_cycle : float
        Magnus substeps per period of the fastest frequency in ``H(t)``.
    """

    params: object
    layout: object
    segments: int = 200
    per_cycle: float = 8.0
    model: DoubleDriveModel = field(init=False)

    def __post_init__(self):
        self.model = DoubleDriveModel(self.params, self.layout)
        if self.params.p is None or self.params.q is None:
            raise ConstraintError("double-drive engine needs integer p and q")
        m = self.model
        t = self.params.t_g * np.array([0.137, 0.611])
        self.sectors = exchange_parity_sectors(
            self.layout, m.deterministic(t[0]), m.deterministic(t[1]), m.noise_operator(t[0])
        )
        self._sector_models = [m.projected(Q) for Q in self.sectors] if self.sectors else None

    @property
    def seg_dt(self):
        return self.params.t_g / self.segments

    @property
    def pattern(self):
        """Number of distinct segment propagators (segment index modulo pattern)."""
        n_per = self.params.t_g / self.model.period
        if abs(n_per - round(n_per)) > 1e-9:
            return self.segments
        return self.segments // math.gcd(self.segments, int(round(n_per)))

    @property
    def substeps(self):
        cycles = self.seg_dt * self.model.max_frequency / (2 * math.pi)
        return max(4, int(math.ceil(cycles * self.per_cycle)))

    def segment(self, s, x=0.0, substeps=None):
        t0 = (s % self.pattern) * self.seg_dt
        n = substeps or self.substeps
        if self._sector_models is None:
            return _integrate(self.model, t0, t0 + self.seg_dt, n, x)
        U = np.zeros((self.layout.dim, self.layout.dim), dtype=complex)
        for Q, m in zip(self.sectors, self._sector_models):
            U += Q @ _integrate(m, t0, t0 + self.seg_dt, n, x) @ Q.conj().T
        return U

    @cached_property
    def deterministic_segments(self):
        return [self.segment(s) for s in range(self.pattern)]

    def gate(self, echo=NO_ECHO, segments=None):
        """Noiseless full-gate propagator."""
        segs = segments or self.deterministic_segments
        U = np.eye(self.layout.dim, dtype=complex)
        E = self.layout.embed_qubits(echo.qubit_operator) if echo.active else None
        for s in range(self.segments):
            if E is not None and s == self.segments // 2:
                U = E @ U
            U = segs[s % self.pattern] @ U
        return U

    def evolve_states(self, psi, n_segments, segments=None, echo=NO_ECHO):
        """States after each of ``n_segments`` noiseless segments.

        An active echo is applied after ``self.segments // 2`` segments.
        """
        segs = segments or self.deterministic_segments
        E = self.layout.embed_qubits(echo.qubit_operator) if echo.active else None
        out = [psi]
        for s in range(n_segments):
            if E is not None and s == self.segments // 2:
                psi = E @ psi
            psi = segs[s % self.pattern] @ psi
            out.append(psi)
        return np.array(out)

    def step_doubling_change(self, initial, target, echo=NO_ECHO):
        """Fidelity change when the Magnus substeps are doubled."""
        fine = [self.segment(s, substeps=2 * self.substeps) for s in range(self.pattern)]
        f1 = target_fidelities(self.gate(echo) @ initial[:, None], target)[0]
        f2 = target_fidelities(self.gate(echo, fine) @ initial[:, None], target)[0]
        return abs(f1 - f2)

    def noisy_families(self, lo, hi, order):
        """Chebyshev families in the first-drive fluctuation for every pattern segment."""
        fams = []
        for s in range(self.pattern):
            def node(x, s=s):
                return self.segment(s, x)
            fams.append(ChebyshevFamily(node, lo, hi, order))
        return fams


def propagate_double_noisy(plan, params, layout, initial, target, engine=None):
    """Monte-Carlo ensemble of the doubly-driven gate with first-drive intensity noise."""
    if plan.kind != "double_drive_noisy":
        raise ValueError("propagate_double_noisy needs kind double_drive_noisy")
    engine = engine or DoubleDriveEngine(params, layout, segments=plan.steps)
    if engine.segments != plan.steps:
        raise ValueError("engine segments must equal plan steps")
    weights, vecs = initial_columns(initial)
    xs = sample_noise(plan.noise, plan.n_traj, plan.steps, plan.dt, plan.seed)
    X = float(np.abs(xs).max())
    n_comp = vecs.shape[1]
    psi = np.repeat(vecs[:, None, :], plan.n_traj, axis=1).reshape(vecs.shape[0], -1)
    E = layout.embed_qubits(plan.echo.qubit_operator) if plan.echo.active else None
    if X == 0.0:
        segs = engine.deterministic_segments
        for s in range(plan.steps):
            if E is not None and s == plan.steps // 2:
                psi = E @ psi
            psi = segs[s % engine.pattern] @ psi
    else:
        order = chebyshev_order(2 * X, 1.0, plan.dt, plan.steps)
        fams = engine.noisy_families(-X, X, order)
        _spot_check(fams[0], lambda x: engine.segment(0, x), np.random.default_rng(0), 1e3 * INTERP_TOL)
        x_cols = np.repeat(xs, n_comp, axis=0)
        for s in range(plan.steps):
            if E is not None and s == plan.steps // 2:
                psi = E @ psi
            psi = fams[s % engine.pattern].apply(psi, x_cols[:, s])
    fid = target_fidelities(psi, target, weights, n_comp)
    wcol = np.tile(weights, plan.n_traj)
    rho = (psi * wcol[None, :]) @ psi.conj().T / plan.n_traj
    rho = 0.5 * (rho + rho.conj().T)
    state = State(layout, rho / np.trace(rho).real, psd_check_dim=0)
    stderr = float(fid.std(ddof=1) / math.sqrt(len(fid))) if len(fid) > 1 else 0.0
    return EnsembleResult(state, fid, stderr)


__all__ = [
    "PropagationPlan",
    "EnsembleResult",
    "ChebyshevFamily",
    "DoubleDriveEngine",
    "chebyshev_order",
    "default_workers",
    "dss_propagator",
    "dss_sectors",
    "exchange_parity_sectors",
    "initial_columns",
    "phase_space_trajectory",
    "propagate_double_noisy",
    "propagate_noisy",
    "propagate_sequential_gates",
    "propagate_static",
    "sample_noise",
    "static_gate",
    "target_fidelities",
]
