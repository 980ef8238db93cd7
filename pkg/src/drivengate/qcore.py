"""Dense Hilbert-space algebra for two qubits coupled to two phonon modes.

The factor order is fixed as ``qubit1 ⊗ qubit2 ⊗ mode1 ⊗ mode2``.  Operators
are plain complex ``numpy`` arrays whose shape matches the layout; ``State``
wraps a density matrix together with its layout.

Qubit conventions: basis index 0 is ``|0>`` and 1 is ``|1>``, with
``sigma_z = |1><1| - |0><0|`` and ``sigma_plus = |1><0|``.  Consequently
``sigma_y = -i sigma_plus + i sigma_minus``, and the usual algebra
``[sigma_x, sigma_y] = 2i sigma_z`` holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import TruncationError

HERMITIAN_RTOL = 1e-10
LOSS_BOUND = 1e-6

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
SP = np.array([[0, 0], [1, 0]], dtype=complex)
SM = SP.T.copy()
I2 = np.eye(2, dtype=complex)

_QUBIT_OPS = {
    "sigma_x": SX,
    "sigma_y": SY,
    "sigma_z": SZ,
    "sigma_plus": SP,
    "sigma_minus": SM,
}
_MODE_OPS = ("a", "a_dagger", "n_op")


def ladder(n_max):
    """Truncated annihilation operator on ``n_max + 1`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


@dataclass(frozen=True)
class HilbertLayout:
    """Truncated composite space of two qubits and two phonon modes.

    Parameters
    ----------
    n_max : int
        Highest Fock level kept in each mode.
    """

    n_max: int
    n_qubits: int = field(default=2, init=False)
    n_modes: int = field(default=2, init=False)

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")

    @property
    def n_levels(self):
        return self.n_max + 1

    @property
    def phonon_dim(self):
        return self.n_levels**2

    @property
    def dim(self):
        return 4 * self.phonon_dim

    @property
    def dims(self):
        return (2, 2, self.n_levels, self.n_levels)

    def embed_qubits(self, q4):
        """Tensor a 4x4 two-qubit operator with the phonon identity."""
        return np.kron(np.asarray(q4, dtype=complex), np.eye(self.phonon_dim))

    def embed(self, q4, ph):
        """Tensor a 4x4 qubit operator with a phonon operator."""
        return np.kron(np.asarray(q4, dtype=complex), np.asarray(ph, dtype=complex))

    @cached_property
    def _phonon_ops(self):
        a = ladder(self.n_max)
        eye = np.eye(self.n_levels)
        return {1: np.kron(a, eye), 2: np.kron(eye, a)}

    def phonon_a(self, mode):
        """Annihilation operator of ``mode`` on the two-mode phonon factor."""
        if mode not in (1, 2):
            raise IndexError(f"mode index must be 1 or 2, got {mode}")
        return self._phonon_ops[mode]

    @cached_property
    def phonon_numbers(self):
        """Fock numbers ``(n1, n2)`` of each phonon basis index."""
        n = np.arange(self.n_levels)
        return np.repeat(n, self.n_levels), np.tile(n, self.n_levels)

    @cached_property
    def total_phonon_number(self):
        """Diagonal of ``a1†a1 + a2†a2`` over the full space."""
        n1, n2 = self.phonon_numbers
        return np.tile(n1 + n2, 4).astype(float)


def qubit_op(which, ion):
    """Single-qubit Pauli-type operator on ``ion`` (1 or 2) as a 4x4 matrix."""
    if which not in _QUBIT_OPS:
        raise ValueError(f"unknown qubit operator {which!r}")
    if ion == 1:
        return np.kron(_QUBIT_OPS[which], I2)
    if ion == 2:
        return np.kron(I2, _QUBIT_OPS[which])
    raise IndexError(f"ion index must be 1 or 2, got {ion}")


def build_elementary(layout, which, index):
    """Identity-padded elementary operator.

    Parameters
    ----------
    layout : HilbertLayout
    which : str
        One of ``sigma_x, sigma_y, sigma_z, sigma_plus, sigma_minus`` (``index``
        is the ion) or ``a, a_dagger, n_op`` (``index`` is the mode).
    index : int
        1-based ion or mode index.
    """
    if which in _QUBIT_OPS:
        return layout.embed_qubits(qubit_op(which, index))
    if which in _MODE_OPS:
        a = layout.phonon_a(index)
        ph = {"a": a, "a_dagger": a.conj().T, "n_op": a.conj().T @ a}[which]
        return layout.embed(np.eye(4), ph)
    raise ValueError(f"unknown operator label {which!r}")


def check_hermitian(H, rtol=HERMITIAN_RTOL):
    scale = max(np.abs(H).max(), 1.0)
    dev = np.abs(H - H.conj().T).max()
    if dev > rtol * scale:
        raise ValueError(f"operator is not Hermitian (deviation {dev:.3e})")


class SpectralPropagator:
    """Cached eigendecomposition of a Hermitian generator.

    ``at(t)`` returns ``exp(-iHt)``; ``apply(t, vecs)`` acts on column vectors
    without forming the full propagator.  ``sectors`` optionally lists
    orthonormal bases (columns) of invariant subspaces that together span the
    space; each block is then diagonalized separately.
    """

    def __init__(self, H, sectors=None):
        H = np.asarray(H, dtype=complex)
        check_hermitian(H)
        H = 0.5 * (H + H.conj().T)
        if sectors is None:
            self.energies, self.vectors = np.linalg.eigh(H)
        else:
            es, vs = [], []
            for Q in sectors:
                e, v = np.linalg.eigh(Q.conj().T @ H @ Q)
                es.append(e)
                vs.append(Q @ v)
            self.energies = np.concatenate(es)
            self.vectors = np.concatenate(vs, axis=1)
        self._vh = self.vectors.conj().T

    def phases(self, t):
        return np.exp(-1j * self.energies * t)

    def at(self, t):
        return (self.vectors * self.phases(t)) @ self._vh

    def to_eigenbasis(self, vecs):
        return self._vh @ vecs

    def from_eigenbasis(self, coeffs, t):
        return self.vectors @ (self.phases(t)[:, None] * coeffs)

    def apply(self, t, vecs):
        vecs = np.asarray(vecs, dtype=complex)
        flat = vecs.ndim == 1
        c = self.to_eigenbasis(vecs.reshape(len(vecs), -1))
        out = self.from_eigenbasis(c, t)
        return out[:, 0] if flat else out


def signed_permutation_sectors(perm, signs):
    """Eigenspace bases of the involution ``P e_i = signs[i] e_{perm[i]}``.

    Returns
    -------
    (Q_plus, Q_minus) : ndarray
        Real orthonormal bases of the ``+1`` and ``-1`` eigenspaces.
    """
    perm = np.asarray(perm)
    signs = np.asarray(signs)
    n = len(perm)
    if np.any(perm[perm] != np.arange(n)) or np.any(signs * signs[perm] != 1):
        raise ValueError("perm/signs do not define an involution")
    plus, minus = [], []
    for i in range(n):
        j = perm[i]
        if j == i:
            (plus if signs[i] > 0 else minus).append(((i, 1.0),))
        elif i < j:
            # P(e_i + s e_j) = s e_j + e_i with s = signs[i]
            s = float(signs[i])
            r = 1 / np.sqrt(2)
            plus.append(((i, r), (j, s * r)))
            minus.append(((i, r), (j, -s * r)))
    out = []
    for group in (plus, minus):
        Q = np.zeros((n, len(group)))
        for col, entries in enumerate(group):
            for i, v in entries:
                Q[i, col] = v
        out.append(Q)
    return tuple(out)


def expm(H, t):
    """Unitary ``exp(-iHt)`` of a Hermitian operator via eigendecomposition."""
    return SpectralPropagator(H).at(t)


def unitarity_error(U):
    return np.abs(U.conj().T @ U - np.eye(len(U))).max()


def thermal_populations(nbar, n_max):
    """Truncated Bose-Einstein populations, renormalized.

    Raises
    ------
    TruncationError
        If the discarded tail weight exceeds ``LOSS_BOUND``.
    """
    if nbar < 0:
        raise ValueError("mean phonon number must be non-negative")
    n = np.arange(n_max + 1)
    if nbar == 0:
        p = (n == 0).astype(float)
        return p
    ratio = nbar / (nbar + 1.0)
    loss = ratio ** (n_max + 1)
    if loss > LOSS_BOUND:
        raise TruncationError(
            f"thermal state with nbar={nbar} loses {loss:.2e} probability "
            f"above n_max={n_max}"
        )
    p = ratio**n / (nbar + 1.0)
    return p / p.sum()


def thermal_state(layout, nbar_1, nbar_2):
    """Two-mode thermal phonon density matrix (phonon factor only)."""
    p1 = thermal_populations(nbar_1, layout.n_max)
    p2 = thermal_populations(nbar_2, layout.n_max)
    return np.diag(np.kron(p1, p2)).astype(complex)


@dataclass(frozen=True, eq=False)
class State:
    """Density operator on the composite space.

    Trace and Hermiticity are always validated.  Positivity is checked through
    the spectrum for dimensions up to ``psd_check_dim`` (the check costs a full
    diagonalization).
    """

    layout: HilbertLayout
    rho: np.ndarray
    psd_check_dim: int = 1024

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(f"rho shape {rho.shape} does not match layout dim {self.layout.dim}")
        if abs(np.trace(rho) - 1) > 1e-10:
            raise ValueError(f"trace {np.trace(rho).real:.12f} != 1")
        check_hermitian(rho)
        if self.layout.dim <= self.psd_check_dim:
            lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
            if lo < -1e-10:
                raise ValueError(f"density matrix not positive (eigenvalue {lo:.3e})")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, layout, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(layout, np.outer(psi, psi.conj()))

    @classmethod
    def product(cls, layout, qubit, phonon_rho):
        """``qubit ⊗ phonon_rho``; ``qubit`` is a 4-vector or a 4x4 matrix."""
        q = np.asarray(qubit, dtype=complex)
        if q.ndim == 1:
            q = np.outer(q, q.conj()) / np.vdot(q, q).real
        return cls(layout, np.kron(q, phonon_rho))

    def mixture(self, tol=1e-12):
        """Weights and orthonormal pure components (columns) of the state."""
        w, v = np.linalg.eigh(self.rho)
        keep = w > tol
        w = w[keep]
        return w / w.sum(), v[:, keep]


def computational_state(bits):
    """Two-qubit basis vector for a string such as ``"10"``."""
    idx = int(bits, 2)
    v = np.zeros(4, dtype=complex)
    v[idx] = 1
    return v


def fock_mixture(layout, qubit_vec, nbar_1, nbar_2, weight_tol=1e-12):
    """Pure-state decomposition of ``|q><q| ⊗ rho_th`` in the Fock basis.

    Returns
    -------
    weights : ndarray
    vectors : ndarray, shape (dim, n_components)
    """
    p = np.kron(
        thermal_populations(nbar_1, layout.n_max),
        thermal_populations(nbar_2, layout.n_max),
    )
    idx = np.flatnonzero(p > weight_tol)
    q = np.asarray(qubit_vec, dtype=complex)
    q = q / np.linalg.norm(q)
    vecs = np.zeros((layout.dim, len(idx)), dtype=complex)
    for col, k in enumerate(idx):
        vecs[:, col] = np.kron(q, np.eye(layout.phonon_dim)[k])
    w = p[idx]
    return w / w.sum(), vecs


def partial_trace_phonons(s):
    """Reduced 4x4 two-qubit density matrix."""
    rho = s.rho if isinstance(s, State) else np.asarray(s)
    d = rho.shape[0] // 4
    return np.einsum("iaja->ij", rho.reshape(4, d, 4, d))


def reduced_qubits_from_vectors(vecs, weights=None):
    """Qubit density matrix of a weighted set of pure states (columns)."""
    vecs = np.asarray(vecs)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    d = vecs.shape[0] // 4
    m = vecs.reshape(4, d, -1)
    if weights is None:
        weights = np.full(vecs.shape[1], 1.0 / vecs.shape[1])
    return np.einsum("iak,jak,k->ij", m, m.conj(), weights)


def _displacement_matrix(alpha, n_levels):
    """Exact Fock matrix elements <m|D(alpha)|n> for m, n < n_levels."""
    x = abs(alpha) ** 2
    m = np.arange(n_levels)[:, None]
    n = np.arange(n_levels)[None, :]
    lo = np.minimum(m, n)
    hi = np.maximum(m, n)
    diff = hi - lo
    logfac = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1))
    lag = eval_genlaguerre(lo, diff, x)
    base = np.where(m >= n, alpha, -np.conj(alpha))
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(diff == 0, 1.0 + 0j, base**diff)
    return np.exp(logfac - x / 2) * power * lag


def displacement_expectation(s, mode, alpha):
    """``Tr(D(alpha) rho)`` for one phonon mode, using exact matrix elements.

    Raises
    ------
    TruncationError
        If displacing the occupied Fock levels pushes more than ``LOSS_BOUND``
        of the population above the cutoff.
    """
    layout = s.layout
    L = layout.n_levels
    r = s.rho.reshape(4, L, L, 4, L, L)
    if mode == 1:
        rm = np.einsum("iabicb->ac", r)
    elif mode == 2:
        rm = np.einsum("iabiac->bc", r)
    else:
        raise IndexError(f"mode index must be 1 or 2, got {mode}")
    D = _displacement_matrix(alpha, L)
    kept = (np.abs(D) ** 2).sum(axis=0)
    pops = np.real(np.diag(rm))
    loss = float(np.dot(pops, 1 - kept))
    if loss > LOSS_BOUND:
        raise TruncationError(f"displacement |alpha|={abs(alpha):.3f} leaks {loss:.2e} above n_max")
    return complex(np.trace(D @ rm))
