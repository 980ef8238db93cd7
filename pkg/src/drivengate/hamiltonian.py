"""Hamiltonians of the driven single-sideband gates in their numerical frames.

Single drive
    The time-independent frame ``H' = sum_n delta_n a_n†a_n + (Omega_d/2) S_x +
    sum_{i,n} (F_in sigma_i^+ a_n + h.c.)`` with ``S_x = sigma_1^x + sigma_2^x``.
Double drive
    The double dressed-state interaction picture with explicit time dependence;
    the phonon phases use the bare detunings ``Omega_d + delta~_n``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConstraintError
from .qcore import check_hermitian, qubit_op

SZZ = qubit_op("sigma_z", 1) @ qubit_op("sigma_z", 2)
SYY = qubit_op("sigma_y", 1) @ qubit_op("sigma_y", 2)
SX_TOT = qubit_op("sigma_x", 1) + qubit_op("sigma_x", 2)
SY_TOT = qubit_op("sigma_y", 1) + qubit_op("sigma_y", 2)
SZ_TOT = qubit_op("sigma_z", 1) + qubit_op("sigma_z", 2)

HAMILTONIAN_KINDS = (
    "dss_time_independent",
    "dss_phase_noisy",
    "dss_intensity_noisy",
    "dss_dephasing_noisy",
    "double_drive_lab",
    "double_drive_noisy",
)

ECHO_PULSES = {"sigma_z_pair": SZZ, "sigma_y_pair": SYY, "none": np.eye(4, dtype=complex)}


@dataclass(frozen=True)
class EchoSpec:
    """Refocusing pulse inserted at ``at * t_g``."""

    pulse: str = "sigma_z_pair"
    at: float = 0.5

    def __post_init__(self):
        if self.pulse not in ECHO_PULSES:
            raise ValueError(f"unknown echo pulse {self.pulse!r}; expected one of {sorted(ECHO_PULSES)}")

    @property
    def active(self):
        return self.pulse != "none"

    @property
    def qubit_operator(self):
        return ECHO_PULSES[self.pulse]


NO_ECHO = EchoSpec("none")


def _check_layout(layout):
    if layout.n_qubits != 2 or layout.n_modes != 2:
        raise ValueError("layout must describe two qubits and two modes")


class DssModel:
    """Cached building blocks of the single-drive Hamiltonian ``H'``.

    ``H' = phonon + Omega_d * drive + sideband`` where ``drive = S_x / 2``.
    """

    def __init__(self, params, layout):
        if params.mode != "single":
            raise ConstraintError("single-drive Hamiltonian needs single-drive parameters")
        _check_layout(layout)
        self.params = params
        self.layout = layout

    @cached_property
    def phonon_diag(self):
        n1, n2 = self.layout.phonon_numbers
        d = self.params.delta_1 * n1 + self.params.delta_2 * n2
        return np.tile(d, 4).astype(float)

    @cached_property
    def drive(self):
        return self.layout.embed_qubits(SX_TOT / 2)

    @cached_property
    def dephasing(self):
        """Global frequency-noise operator ``S_z / 2``."""
        return self.layout.embed_qubits(SZ_TOT / 2)

    @cached_property
    def sideband(self):
        return sideband_operator(self.params.F, self.layout)

    def hamiltonian(self, phi=0.0, dOmega=0.0):
        H = np.exp(1j * phi) * self.sideband
        H = H + H.conj().T
        H += (self.params.Omega_d + dOmega) * self.drive
        H[np.diag_indices_from(H)] += self.phonon_diag
        return H

    @cached_property
    def H(self):
        return self.hamiltonian()

    def frame_qubit(self, t):
        """Qubit part of the dressed-frame map ``W(t) = exp(i t H0')``.

        ``H0' = sum delta_n a†a + (Omega_d/2) S_x``; the dressed-frame state is
        ``W(t) psi'(t)``.
        """
        c, s = np.cos(self.params.Omega_d * t / 2), np.sin(self.params.Omega_d * t / 2)
        one = c * np.eye(2) + 1j * s * np.array([[0, 1], [1, 0]])
        return np.kron(one, one)

    def frame_phonon_phases(self, t):
        return np.exp(1j * self.phonon_diag * t)

    def to_dressed(self, t, vecs):
        """Map states of the ``H'`` frame to the dressed frame, ``W(t) psi'``."""
        Wq = np.kron(self.frame_qubit(t), np.eye(self.layout.phonon_dim))
        vecs = np.asarray(vecs)
        ph = self.frame_phonon_phases(t)
        return (ph[:, None] if vecs.ndim == 2 else ph) * (Wq @ vecs)


def sideband_operator(F, layout):
    """``sum_{i,n} F_in sigma_i^+ a_n`` (without the Hermitian conjugate)."""
    out = np.zeros((layout.dim, layout.dim), dtype=complex)
    for i in (1, 2):
        sp = qubit_op("sigma_plus", i)
        for n in (1, 2):
            out += F[i - 1, n - 1] * layout.embed(sp, layout.phonon_a(n))
    return out


def build_dss(params, layout):
    """Time-independent single-drive Hamiltonian ``H'``."""
    return DssModel(params, layout).H


def build_dss_phase_noisy(params, layout, phi):
    """``H'`` with every force multiplied by ``exp(i phi)``."""
    return DssModel(params, layout).hamiltonian(phi=float(phi))


def build_dss_intensity_noisy(params, layout, dOmega):
    """``H'`` with the drive strength ``Omega_d + dOmega``."""
    if abs(dOmega) >= abs(params.Omega_d):
        raise ValueError(
            f"intensity fluctuation {dOmega:.3e} rad/s exceeds the drive itself; noise mis-scaled"
        )
    return DssModel(params, layout).hamiltonian(dOmega=float(dOmega))


def build_dss_dephasing_noisy(params, layout, domega0):
    """``H'`` plus a global qubit-frequency shift ``domega0 * S_z / 2``."""
    model = DssModel(params, layout)
    return model.H + float(domega0) * model.dephasing


def apply_echo(U_first_half, U_second_half, echo, layout):
    """``U_second_half @ (P ⊗ 1) @ U_first_half`` with the echo pulse ``P``."""
    if U_first_half.shape != U_second_half.shape or U_first_half.shape[0] != layout.dim:
        raise ValueError("propagator dimensions do not match the layout")
    if not echo.active:
        return U_second_half @ U_first_half
    return U_second_half @ layout.embed_qubits(echo.qubit_operator) @ U_first_half


def time_dependences(params, t):
    """``(f_x, f_y, f_z)`` of the double dressed-state picture."""
    th = 0.5 * params.Omega_d2 * np.asarray(t)
    c = np.cos(params.Omega_d * np.asarray(t))
    fx = np.cos(th) - 1j * np.sin(th) * c
    fy = np.sin(th) + 1j * np.cos(th) * c
    fz = np.sin(params.Omega_d * np.asarray(t)) + 0j
    return fx, fy, fz


class DoubleDriveModel:
    """Time-dependent doubly-driven Hamiltonian ``H(t) = H_det(t) + dOmega1 V(t)``.

    ``V(t) = (1/2) sum_i (cos(Om2 t/2) sigma_i^x + sin(Om2 t/2) sigma_i^y)`` is the
    first-drive intensity-noise operator.
    """

    def __init__(self, params, layout):
        if params.mode != "double":
            raise ConstraintError("doubly-driven Hamiltonian needs double-drive parameters")
        _check_layout(layout)
        self.params = params
        self.layout = layout
        F = params.F
        self._blocks = []
        for n in (1, 2):
            a = layout.phonon_a(n)
            ops = []
            for label in ("sigma_x", "sigma_y", "sigma_z"):
                q = sum(F[i - 1, n - 1] / 2 * qubit_op(label, i) for i in (1, 2))
                ops.append(layout.embed(q, a))
            self._blocks.append(ops)
        self._sx = layout.embed_qubits(SX_TOT / 2)
        self._sy = layout.embed_qubits(SY_TOT / 2)

    @property
    def detunings(self):
        return self.params.bare_detunings

    @property
    def max_frequency(self):
        """Largest angular frequency appearing in ``H(t)``."""
        p = self.params
        return float(np.max(np.abs(self.detunings)) + abs(p.Omega_d) + abs(p.Omega_d2) / 2)

    @property
    def period(self):
        """Common period of all time dependences (requires integer p, q)."""
        p = self.params
        base = abs(p.delta_1)
        return 2 * np.pi / base * (1 if p.q % 2 == 0 else 2)

    def check_time(self, t):
        if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) > self.params.t_g * (1 + 1e-12)):
            raise ValueError("time outside the gate window [0, t_g]")

    @property
    def dim(self):
        return self._sx.shape[0]

    def projected(self, Q):
        """Copy acting on the invariant subspace spanned by the columns of ``Q``."""
        out = copy.copy(self)
        Qh = Q.conj().T
        out._blocks = [[Qh @ A @ Q for A in ops] for ops in self._blocks]
        out._sx = Qh @ self._sx @ Q
        out._sy = Qh @ self._sy @ Q
        return out

    def deterministic(self, t):
        fx, fy, fz = time_dependences(self.params, t)
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for (ax, ay, az), d in zip(self._blocks, self.detunings):
            ph = np.exp(-1j * d * t)
            H += ph * (fx * ax + fy * ay - 1j * fz * az)
        return H + H.conj().T

    def noise_operator(self, t):
        th = 0.5 * self.params.Omega_d2 * t
        return np.cos(th) * self._sx + np.sin(th) * self._sy

    def hamiltonian(self, t, dOmega1=0.0):
        H = self.deterministic(t)
        if dOmega1:
            H = H + dOmega1 * self.noise_operator(t)
        return H


def build_double_drive(params, layout, t, dOmega1=0.0):
    """Doubly-driven Hamiltonian at time ``t`` in the double dressed picture."""
    model = DoubleDriveModel(params, layout)
    model.check_time(t)
    H = model.hamiltonian(t, dOmega1)
    check_hermitian(H, 1e-12)
    return H
