"""Second-order Magnus propagator of the driven single-sideband Hamiltonian.

The expansion is taken in the dressed frame, i.e. the interaction picture with
respect to ``H0' = sum_n delta_n a_n†a_n + (Omega_d/2) S_x``, where

    H~(t) = sum_{j,n} (F_jn/2) (sigma_j^x + i sigma_j^y cos(Omega_d t)
            - i sigma_j^z sin(Omega_d t)) a_n exp(-i delta_n t) + h.c.

The second-order term is evaluated in closed form as a double sum over pairs
of Fourier components of ``H~``.  Phonon bilinears are normal ordered before
truncation, so the operators are exact on every Fock block below the cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError
from .hamiltonian import DssModel
from .qcore import SpectralPropagator, qubit_op

POLE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class MagnusTerms:
    """Second-order Magnus generator split into its three parts.

    Attributes
    ----------
    Omega1, Omega2a, Omega2b, Omega2c : ndarray
        Anti-Hermitian operators on the full space.
    J_eff, K_eff, M_eff : ndarray
        2x2 real coupling matrices (rad/s), indexed by ion.
    DeltaOmega : ndarray
        2x2 drive-induced shifts indexed (ion, mode) (rad/s).
    """

    Omega1: np.ndarray
    Omega2a: np.ndarray
    Omega2b: np.ndarray
    Omega2c: np.ndarray
    J_eff: np.ndarray
    K_eff: np.ndarray
    M_eff: np.ndarray
    DeltaOmega: np.ndarray

    @property
    def Omega2(self):
        return self.Omega2a + self.Omega2b + self.Omega2c

    @property
    def total(self):
        return self.Omega1 + self.Omega2


def _E(w, t):
    """``int_0^t exp(i w s) ds``."""
    if w == 0.0:
        return t + 0j
    return (np.exp(1j * w * t) - 1.0) / (1j * w)


def _inv(x, name):
    if abs(x) < POLE_RTOL:
        raise ConstraintError(f"Magnus pole: denominator {name} vanishes")
    return 1.0 / x


def _check_poles(params):
    Om = params.Omega_d
    d = params.deltas
    scale = max(abs(Om), float(np.max(np.abs(d))))
    for n in range(2):
        _inv(d[n] / scale, f"delta_{n + 1}")
        _inv((Om - d[n]) / scale, f"Omega_d - delta_{n + 1}")
        _inv((Om + d[n]) / scale, f"Omega_d + delta_{n + 1}")


def effective_couplings(params):
    """``(J_eff, K_eff, M_eff, DeltaOmega)`` of the secular second-order term."""
    F = params.F
    Om = params.Omega_d
    d = params.deltas
    J = np.zeros((2, 2))
    K = np.zeros((2, 2))
    M = np.zeros((2, 2))
    for j in range(2):
        for k in range(2):
            ff = F[j] * F[k].conj()
            J[j, k] = -np.sum(ff.real / d)
            K[j, k] = np.sum((1 / (Om - d) - 1 / (Om + d)) * ff.real)
            M[j, k] = np.sum((1 / (Om - d) + 1 / (Om + d)) * ff.imag)
    dOm = -0.25 * (1 / (Om - d) + 1 / (Om + d))[None, :] * np.abs(F) ** 2
    return J, K, M, dOm


def harmonics(params):
    """Fourier components of the dressed-frame Hamiltonian.

    Returns
    -------
    list of (q, mode, dagger, omega)
        ``H~(t) = sum q ⊗ b exp(i omega t)`` with ``b = a_mode`` or its
        adjoint; ``q`` is a 4x4 qubit operator and ``mode`` is 0-based.
    """
    F, Om, d = params.F, params.Omega_d, params.deltas
    out = []
    for n in range(2):
        for j in range(2):
            sx, sy, sz = (qubit_op(f"sigma_{lab}", j + 1) for lab in "xyz")
            f = F[j, n]
            for q, w in (
                (f / 2 * sx, -d[n]),
                (f / 4 * (1j * sy - sz), Om - d[n]),
                (f / 4 * (1j * sy + sz), -(Om + d[n])),
            ):
                out.append((q, n, False, w))
                out.append((q.conj().T, n, True, -w))
    return out


def _pair_integral(a, b, t, scale):
    """Split ``int_0^t ds e^{ias} int_0^s du e^{ibu}`` into ``(secular, oscillatory)``.

    The secular part is the term linear in ``t`` that survives when
    ``a + b = 0``; ``b`` is never zero (poles are excluded beforehand).
    """
    if abs(a + b) < 1e-12 * scale:
        return 1j * t / a, _E(a, t) / (1j * a)
    return 0.0, (_E(a + b, t) - _E(a, t)) / (1j * b)


def _second_order(params, t):
    """Normal-ordered second-order generator as ``{monomial: 4x4 block}``.

    Keys are ``("1",)`` for the qubit-only part (split into ``"sec"`` and
    ``"osc"``), ``("aa", n, m)`` for ``a_n a_m``, ``("dd", n, m)`` for
    ``a_n† a_m†`` and ``("da", n, m)`` for ``a_n† a_m``.
    """
    hs = harmonics(params)
    scale = abs(params.Omega_d) + float(np.max(np.abs(params.deltas)))
    blocks = {}

    def add(key, q):
        blocks[key] = blocks.get(key, 0) + q

    for qa, n, da, wa in hs:
        for qb, m, db, wb in hs:
            sec, osc = _pair_integral(wa, wb, t, scale)
            c = -0.5 * (sec + osc)
            comm = qa @ qb - qb @ qa
            if not da and not db:
                add(("aa", n, m), c * comm)
            elif da and db:
                add(("dd", n, m), c * comm)
            elif not da:
                # [A a_n, B a_m†] = [A, B] a_m† a_n + delta_nm A B
                add(("da", m, n), c * comm)
                if n == m:
                    add(("1", "sec"), -0.5 * sec * (qa @ qb))
                    add(("1", "osc"), -0.5 * osc * (qa @ qb))
            else:
                # [A a_n†, B a_m] = [A, B] a_n† a_m - delta_nm B A
                add(("da", n, m), c * comm)
                if n == m:
                    add(("1", "sec"), 0.5 * sec * (qb @ qa))
                    add(("1", "osc"), 0.5 * osc * (qb @ qa))
    return blocks


def omega1(params, layout, t):
    """First-order Magnus term (state-dependent displacements)."""
    _check_poles(params)
    X = np.zeros((layout.dim, layout.dim), dtype=complex)
    for q, n, dag, w in harmonics(params):
        if not dag:
            X += layout.embed(-1j * _E(w, t) * q, layout.phonon_a(n + 1))
    return X - X.conj().T


def secular_qubit_term(params, t, couplings=None):
    """Closed-form secular qubit-only generator as a 4x4 matrix."""
    J, K, M, dOm = couplings if couplings is not None else effective_couplings(params)
    s = {(lab, j): qubit_op(f"sigma_{lab}", j + 1) for lab in "xyz" for j in range(2)}
    q = np.zeros((4, 4), dtype=complex)
    for j in range(2):
        for k in range(2):
            q += 0.25 * J[j, k] * s["x", j] @ s["x", k]
            q += M[j, k] / 8 * s["y", j] @ s["z", k]
            q += K[j, k] / 16 * (s["y", j] @ s["y", k] + s["z", j] @ s["z", k])
        q -= 0.5 * dOm[j].sum() * s["x", j]
    return -1j * t * q


def omega2(params, layout, t):
    """Full second-order Magnus term with its couplings.

    ``Omega2a`` is the closed-form secular qubit-only part, ``Omega2b`` the
    oscillating qubit-only part and ``Omega2c`` everything acting on the
    phonons, including the secular drive-induced shift of ``a†a``.
    """
    _check_poles(params)
    couplings = effective_couplings(params)
    blocks = _second_order(params, t)
    a = [layout.phonon_a(1), layout.phonon_a(2)]
    ad = [x.conj().T for x in a]
    c = np.zeros((layout.dim, layout.dim), dtype=complex)
    for key, q in blocks.items():
        if key[0] == "aa":
            c += layout.embed(q, a[key[1]] @ a[key[2]])
        elif key[0] == "dd":
            c += layout.embed(q, ad[key[1]] @ ad[key[2]])
        elif key[0] == "da":
            c += layout.embed(q, ad[key[1]] @ a[key[2]])
    return MagnusTerms(
        Omega1=omega1(params, layout, t),
        Omega2a=layout.embed_qubits(secular_qubit_term(params, t, couplings)),
        Omega2b=layout.embed_qubits(blocks.get(("1", "osc"), np.zeros((4, 4), complex))),
        Omega2c=c,
        J_eff=couplings[0], K_eff=couplings[1], M_eff=couplings[2], DeltaOmega=couplings[3],
    )


def secular_residual(params, t):
    """Max deviation between the closed-form and the pair-summed secular part."""
    blocks = _second_order(params, t)
    return float(np.max(np.abs(blocks[("1", "sec")] - secular_qubit_term(params, t))))


def expm_antihermitian(A):
    """``exp(A)`` for anti-Hermitian ``A`` via the Hermitian generator ``iA``."""
    return SpectralPropagator(1j * A).at(1.0)


def u_app(params, layout, t, terms=None):
    """Magnus propagator in the time-independent frame of ``H'``.

    Returns ``W(t)† exp(Omega1 + Omega2)`` with ``W(t) = exp(i t H0')``, so it
    is directly comparable to ``exp(-i H' t)``.
    """
    if terms is None:
        terms = omega2(params, layout, t)
    U = expm_antihermitian(terms.total)
    model = DssModel(params, layout)
    Wq = np.kron(model.frame_qubit(t).conj().T, np.eye(layout.phonon_dim))
    ph = model.frame_phonon_phases(t).conj()
    return ph[:, None] * (Wq @ U)


def u_app_double(params, layout, t):
    """Effective doubly-driven propagator ``exp(-i t sum J^ddss sigma^z sigma^z)``.

    It is expressed in the double dressed-state picture used by the numerics, so
    it compares directly with propagators of :class:`DoubleDriveModel`; the
    phonons are left untouched.
    """
    if params.mode != "double":
        raise ConstraintError("u_app_double needs double-drive parameters")
    F = params.F
    q = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            Jij = -np.sum((F[i] * F[j].conj()).real / (16 * params.deltas))
            q += Jij * qubit_op("sigma_z", i + 1) @ qubit_op("sigma_z", j + 1)
    U = SpectralPropagator(q).at(t)
    return layout.embed_qubits(U)


__all__ = [
    "MagnusTerms",
    "effective_couplings",
    "omega1",
    "omega2",
    "u_app",
    "u_app_double",
    "harmonics",
    "secular_qubit_term",
]
