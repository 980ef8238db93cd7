"""Resolution of trap inputs into commensurate gate parameters.

All frequencies are angular (rad/s) and times are in seconds.  Detunings keep
their sign (``delta_1 < 0`` for the radial zigzag/centre-of-mass pair with
``k = 2``); the gate time always uses ``|delta_1|``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError

TWO_PI = 2 * math.pi
SELF_CHECK_RTOL = 1e-9
DOUBLE_BAND = (0.05, 0.25)


@dataclass(frozen=True)
class TrapSpec:
    """Raw trap inputs.

    Parameters
    ----------
    omega_x : float
        Radial trap frequency (rad/s).
    omega_z : float
        Axial trap frequency (rad/s).
    eta_1 : float
        Lamb-Dicke parameter of the radial centre-of-mass mode.
    """

    omega_x: float
    omega_z: float
    eta_1: float

    def __post_init__(self):
        if not self.omega_z > 0:
            raise ConstraintError("axial frequency omega_z must be positive")
        if not self.omega_x > self.omega_z:
            raise ConstraintError(
                "omega_x must exceed omega_z (no radial zigzag mode below the centre of mass)"
            )
        if not self.eta_1 > 0:
            raise ConstraintError("Lamb-Dicke parameter eta_1 must be positive")

    @classmethod
    def reference(cls):
        """4 MHz radial, 1 MHz axial, eta = 0.225."""
        return cls(TWO_PI * 4e6, TWO_PI * 1e6, 0.225)


@dataclass(frozen=True)
class GateParams:
    """Fully resolved gate parameters.

    For ``mode == "double"`` the detunings ``delta_1, delta_2`` are the
    dressed-sideband detunings; :attr:`bare_detunings` gives the detunings
    from the undressed sideband that enter the numerical frame.
    ``p`` is ``None`` when the drive strength was set by hand and does not
    satisfy the commensurability constraint.
    """

    omega_1: float
    omega_2: float
    xi: float
    delta_1: float
    delta_2: float
    eta_1: float
    eta_2: float
    Omega_L: float
    Omega_d: float
    Omega_d2: float
    t_g: float
    r: int
    k: int
    p: int | None
    q: int | None
    forces: tuple
    J12: float
    mode: str = "single"

    @property
    def deltas(self):
        return np.array([self.delta_1, self.delta_2])

    @property
    def bare_detunings(self):
        if self.mode == "double":
            return self.Omega_d + self.deltas
        return self.deltas

    @property
    def F(self):
        """Force matrix ``F[i, n]`` (0-based ion, mode)."""
        return np.array(self.forces, dtype=complex)

    def with_drive(self, Omega_d):
        """Copy with a hand-set drive strength (not constrained, ``p=None``)."""
        if self.mode != "single":
            raise ConstraintError("with_drive applies to single-drive parameters")
        return dataclasses.replace(self, Omega_d=float(Omega_d), p=None)

    def with_p(self, p):
        """Copy with a different integer drive multiple ``p``."""
        _check_p(p, self.r, self.k)
        return dataclasses.replace(self, Omega_d=p * abs(self.delta_1), p=int(p))

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["forces"] = [[[z.real, z.imag] for z in row] for row in self.F]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["forces"] = tuple(tuple(complex(re, im) for re, im in row) for row in d["forces"])
        return cls(**d)


def resolve_modes(spec):
    """Radial mode frequencies, their ratio and the zigzag Lamb-Dicke parameter.

    Returns
    -------
    omega_1, omega_2, xi, eta_2 : float
    """
    omega_1 = spec.omega_x
    omega_2 = math.sqrt(spec.omega_x**2 - spec.omega_z**2)
    xi = omega_2 / omega_1
    eta_2 = spec.eta_1 * math.sqrt(omega_1 / omega_2)
    return omega_1, omega_2, xi, eta_2


def _check_int(name, v):
    if isinstance(v, bool) or not float(v).is_integer():
        raise ConstraintError(f"{name} must be an integer, got {v!r}")
    return int(v)


def _check_p(p, r, k):
    p = _check_int("p", p)
    if abs(p) <= abs(r) + abs(k):
        raise ConstraintError(
            f"drive multiple violates |p| > |r| + |k| (p={p}, r={r}, k={k})"
        )
    return p


def _base_detuning(spec, r, k):
    r = _check_int("r", r)
    k = _check_int("k", k)
    if k == 1:
        raise ConstraintError("k = 1 makes both detunings equal; need delta_2 = k delta_1 with k != 1")
    if r == 0 or r % k:
        raise ConstraintError(f"r/k must be a non-zero integer (r={r}, k={k})")
    omega_1, omega_2, xi, eta_2 = resolve_modes(spec)
    delta_1 = (xi - 1.0) / (k - 1.0) * omega_1
    if abs(delta_1) < 1e-9 * omega_1:
        raise ConstraintError("degenerate radial modes: gate time diverges")
    factor = 1.0 - 1.0 / (2.0 * xi)
    if factor <= 0:
        raise ConstraintError("1 - 1/(2 xi) <= 0: laser intensity formula undefined")
    return r, k, omega_1, omega_2, xi, eta_2, delta_1, factor


def _forces(Omega_L, eta_1, eta_2):
    a1 = abs(Omega_L) * eta_1 / (2 * math.sqrt(2))
    a2 = abs(Omega_L) * eta_2 / (2 * math.sqrt(2))
    return ((1j * a1, -1j * a2), (1j * a1, 1j * a2))


def coupling_j12(forces, deltas, denom=4.0):
    """``-sum_n F_1n F_2n^* / (denom * delta_n)`` (real part)."""
    F = np.asarray(forces)
    return float(-np.sum((F[0] * F[1].conj()).real / (denom * np.asarray(deltas))))


def resolve_single_drive(spec, r, k=2, p=57):
    """Constrained parameters of the singly-driven gate.

    Raises
    ------
    ConstraintError
        On integer or validity violations, or if the self-check
        ``t_g = pi / (8 J12)`` fails.
    """
    r, k, omega_1, omega_2, xi, eta_2, delta_1, factor = _base_detuning(spec, r, k)
    p = _check_p(p, r, k)
    delta_2 = k * delta_1
    t_g = r * TWO_PI / abs(delta_1)
    Omega_L = abs(delta_1) / (spec.eta_1 * math.sqrt(0.5 * r * factor))
    forces = _forces(Omega_L, spec.eta_1, eta_2)
    J12 = coupling_j12(forces, (delta_1, delta_2))
    _self_check(t_g, J12)
    return GateParams(
        omega_1=omega_1, omega_2=omega_2, xi=xi, delta_1=delta_1, delta_2=delta_2,
        eta_1=spec.eta_1, eta_2=eta_2, Omega_L=Omega_L, Omega_d=p * abs(delta_1),
        Omega_d2=0.0, t_g=t_g, r=r, k=k, p=p, q=None, forces=forces, J12=J12,
        mode="single",
    )


def resolve_double_drive(spec, r, k=2, p=79, q=47, strict_band=False):
    """Constrained parameters of the doubly-driven gate.

    The detunings are measured from the dressed sideband.  A secondary drive
    outside ``0.05 <= q / (4 p) <= 0.25`` triggers a warning, or a
    ``ConstraintError`` when ``strict_band`` is set.
    """
    r, k, omega_1, omega_2, xi, eta_2, delta_1, factor = _base_detuning(spec, r, k)
    p = _check_p(p, r, k)
    q = _check_int("q", q)
    if q == 0:
        raise ConstraintError("secondary drive multiple q must be non-zero")
    ratio = abs(q) / (4.0 * abs(p))
    if not DOUBLE_BAND[0] <= ratio <= DOUBLE_BAND[1]:
        msg = f"secondary drive ratio {ratio:.3f} outside the strong-driving band {DOUBLE_BAND}"
        if strict_band:
            raise ConstraintError(msg)
        warnings.warn(msg, stacklevel=2)
    delta_2 = k * delta_1
    t_g = r * TWO_PI / abs(delta_1)
    Omega_L = 2 * abs(delta_1) / (spec.eta_1 * math.sqrt(0.5 * r * factor))
    forces = _forces(Omega_L, spec.eta_1, eta_2)
    J12 = coupling_j12(forces, (delta_1, delta_2), denom=16.0)
    _self_check(t_g, J12)
    return GateParams(
        omega_1=omega_1, omega_2=omega_2, xi=xi, delta_1=delta_1, delta_2=delta_2,
        eta_1=spec.eta_1, eta_2=eta_2, Omega_L=Omega_L, Omega_d=p * abs(delta_1),
        Omega_d2=abs(q) * abs(delta_1), t_g=t_g, r=r, k=k, p=p, q=q, forces=forces,
        J12=J12, mode="double",
    )


def _self_check(t_g, J12):
    if J12 == 0 or abs(8 * abs(J12) * t_g / math.pi - 1) > SELF_CHECK_RTOL:
        raise ConstraintError(
            f"gate-time self-check failed: 8 |J12| t_g / pi = {8 * abs(J12) * t_g / math.pi!r}"
        )


def p_for_frequency(params, f_hz):
    """Nearest integer multiple ``p`` for a target drive frequency in Hz."""
    return int(round(TWO_PI * f_hz / abs(params.delta_1)))
