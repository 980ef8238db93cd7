"""Bell targets, fidelities, closed-form predictions and sweep tables."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError
from .qcore import State, partial_trace_phonons

_S2 = 1 / math.sqrt(2)
_PLUS = np.array([1, 1], dtype=complex) * _S2
_MINUS = np.array([1, -1], dtype=complex) * _S2
_ZERO = np.array([1, 0], dtype=complex)
_ONE = np.array([0, 1], dtype=complex)

# label -> (first ket pair, second ket pair, sign of the i-term)
_TABLE = {
    "Phi_minus": ((_ZERO, _ZERO), (_ONE, _ONE), -1),
    "Psi_minus": ((_ZERO, _ONE), (_ONE, _ZERO), -1),
    "Psi_plus": ((_ZERO, _ONE), (_ONE, _ZERO), +1),
    "Phi_plus": ((_ZERO, _ZERO), (_ONE, _ONE), +1),
    "Phi_minus_tilde": ((_PLUS, _PLUS), (_MINUS, _MINUS), -1),
    "Psi_minus_tilde": ((_PLUS, _MINUS), (_MINUS, _PLUS), -1),
    "Psi_plus_tilde": ((_PLUS, _MINUS), (_MINUS, _PLUS), +1),
    "Phi_plus_tilde": ((_PLUS, _PLUS), (_MINUS, _MINUS), +1),
}

# input product state that each Bell state is generated from
GATE_INPUTS = {
    "Phi_minus": "00",
    "Psi_minus": "01",
    "Psi_plus": "10",
    "Phi_plus": "11",
    "Phi_minus_tilde": "++",
    "Psi_minus_tilde": "+-",
    "Psi_plus_tilde": "-+",
    "Phi_plus_tilde": "--",
}


def product_state(labels):
    """Two-qubit product vector from a string over ``0 1 + -``."""
    kets = {"0": _ZERO, "1": _ONE, "+": _PLUS, "-": _MINUS}
    try:
        a, b = (kets[c] for c in labels)
    except (KeyError, ValueError) as exc:
        raise ValueError(f"product state needs two characters from '01+-', got {labels!r}") from exc
    return np.kron(a, b)


@dataclass(frozen=True)
class BellTarget:
    """Bell state from the entangling tables.

    Parameters
    ----------
    label : str
        ``Psi_plus``, ``Psi_minus``, ``Phi_plus``, ``Phi_minus`` or their
        ``*_tilde`` versions in the ``|+->`` basis.
    sign : int
        Sign of the qubit-qubit coupling that produced the state.
    """

    label: str
    sign: int = 1

    def __post_init__(self):
        if self.label not in _TABLE:
            raise ValueError(f"unknown Bell label {self.label!r}; expected one of {sorted(_TABLE)}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def vector(self):
        (a, b), (c, d), s = _TABLE[self.label]
        return _S2 * (np.kron(a, b) + 1j * s * self.sign * np.kron(c, d))

    @property
    def source(self):
        return GATE_INPUTS[self.label]


def bell_state(label, sign=1):
    """Normalized Bell 4-vector."""
    return BellTarget(label, int(np.sign(sign)) or 1).vector


def bell_fidelity(s, target):
    """``<target| Tr_ph rho |target>`` for a State or a 4x4 reduced matrix."""
    t = target.vector if isinstance(target, BellTarget) else np.asarray(target, dtype=complex)
    rq = partial_trace_phonons(s) if isinstance(s, State) else np.asarray(s)
    if rq.shape != (4, 4):
        rq = partial_trace_phonons(rq)
    return float(np.real(t.conj() @ rq @ t))


def _kappa(params, nbar_1, nbar_2):
    F = params.F
    nb = np.array([nbar_1, nbar_2], dtype=float)
    return np.abs(F[0]) ** 2 / params.deltas**2 * (2 * nb + 1)


def thermal_fidelity_closed_form(params, nbar_1, nbar_2, t, strict=True):
    """Strong-driving fidelity of ``|10> -> |Psi+>`` in the dressed frame.

    The displacement factors carry ``kappa_n (1 - cos delta_n t)``; away from
    ``t_g`` the accumulated Ising phase differs from ``pi/4`` by ``Delta(t)``
    and the cross term is weighted by ``cos(2 Delta)``, which is 1 at ``t_g``.

    Parameters
    ----------
    strict : bool
        Require ``Omega_d t_g`` to be an integer multiple of ``2 pi`` (the
        commensurability the resolver actually produces).
    """
    if params.mode != "single":
        raise ConstraintError("closed-form thermal fidelity is for the single-drive gate")
    if strict:
        m = params.Omega_d * params.t_g / (2 * math.pi)
        if abs(m - round(m)) > 1e-6:
            raise ConstraintError(f"Omega_d t_g / 2pi = {m:.6f} is not an integer")
    t = np.asarray(t, dtype=float)
    d = params.deltas
    kap = _kappa(params, nbar_1, nbar_2)
    osc = 1 - np.cos(np.multiply.outer(t, d))
    F = params.F
    Jn = -(F[0] * F[1].conj()).real / (4 * d)
    g = np.multiply.outer(t, np.ones(2)) - np.sin(np.multiply.outer(t, d)) / d
    delta_phase = 2 * params.J12 * params.t_g - 2 * (g * Jn).sum(axis=-1)
    out = (
        0.25
        + 0.5 * np.cos(2 * delta_phase) * np.exp(-(osc * kap).sum(axis=-1))
        + 0.125 * np.exp(-4 * osc * kap).sum(axis=-1)
    )
    return out if out.ndim else float(out)


def dephasing_predictions(T2, tau, Omega_d):
    """Born-Markov dephasing rates in the bare and dressed frames.

    Returns
    -------
    Gamma_d, DeltaOmega_shift, Gamma_tilde, T2_tilde : float
    """
    if not T2 > 0 or not tau > 0:
        raise ValueError("T2 and tau must be positive")
    if Omega_d * T2 < 10:
        warnings.warn("Omega_d T2 < 10: the dressed-frame Born-Markov rates are unreliable", stacklevel=2)
    c = 2.0 / (T2 * tau**2)
    gamma = c * tau**2 / 4
    s = 1 + (Omega_d * tau) ** 2
    shift = Omega_d * tau / (4 * T2 * s)
    return gamma, shift, gamma / s, T2 * s


@dataclass(frozen=True)
class SweepResultRow:
    """One gate-error point of a drive-strength sweep."""

    Omega_d: float
    p: int | None
    error: float
    stderr: float
    n_traj: int
    noise_kind: str
    noise_magnitude: float

    def __post_init__(self):
        e = self.error
        if not -1e-12 <= e <= 1 + 1e-12:
            raise ValueError(f"gate error {e} outside [0, 1]")
        object.__setattr__(self, "error", float(min(max(e, 0.0), 1.0)))

    @property
    def ci95(self):
        return 1.96 * self.stderr


@dataclass(frozen=True)
class SweepResult:
    """Rows sorted by drive strength with the minimum-error row."""

    rows: tuple
    noise_kind: str

    @property
    def minimum(self):
        return min(self.rows, key=lambda r: r.error)

    @property
    def minimum_index(self):
        return self.rows.index(self.minimum)

    @property
    def has_interior_minimum(self):
        return 0 < self.minimum_index < len(self.rows) - 1

    @property
    def errors(self):
        return np.array([r.error for r in self.rows])

    @property
    def drives(self):
        return np.array([r.Omega_d for r in self.rows])


def assemble_sweep(rows, delta_1=None):
    """Sort rows by drive strength and check ``p |delta_1| = Omega_d`` when given."""
    rows = list(rows)
    if not rows:
        raise ValueError("empty sweep")
    kinds = {r.noise_kind for r in rows}
    if len(kinds) != 1:
        raise ValueError(f"rows mix noise kinds {sorted(kinds)}")
    if delta_1 is not None:
        for r in rows:
            if r.p is not None and abs(r.p * abs(delta_1) - r.Omega_d) > 1e-9 * abs(r.Omega_d):
                raise ConstraintError(f"row with p={r.p} violates Omega_d = p delta_1")
    return SweepResult(tuple(sorted(rows, key=lambda r: r.Omega_d)), kinds.pop())


def monotone_enveloped(errors):
    """Downward trend test: the late half stays below the early half and the
    log-log slope against the index is negative."""
    e = np.maximum(np.asarray(errors, dtype=float), 1e-300)
    h = len(e) // 2
    if h == 0:
        return False
    slope = np.polyfit(np.log(np.arange(1, len(e) + 1)), np.log(e), 1)[0]
    return bool(e[h:].max() < e[:h].max() and slope < 0)


__all__ = [
    "BellTarget",
    "GATE_INPUTS",
    "SweepResult",
    "SweepResultRow",
    "assemble_sweep",
    "bell_fidelity",
    "bell_state",
    "dephasing_predictions",
    "monotone_enveloped",
    "product_state",
    "thermal_fidelity_closed_form",
]
