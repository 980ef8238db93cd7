import dataclasses

import numpy as np
import pytest

from drivengate.errors import ConstraintError
from drivengate.hamiltonian import (
    HAMILTONIAN_KINDS,
    SYY,
    SZZ,
    DoubleDriveModel,
    DssModel,
    EchoSpec,
    apply_echo,
    build_double_drive,
    build_dss,
    build_dss_dephasing_noisy,
    build_dss_intensity_noisy,
    build_dss_phase_noisy,
    sideband_operator,
    time_dependences,
)
from drivengate.magnus import harmonics
from drivengate.qcore import HilbertLayout, qubit_op

L3 = HilbertLayout(3)


def test_kinds():
    assert "dss_time_independent" in HAMILTONIAN_KINDS and "double_drive_noisy" in HAMILTONIAN_KINDS


def test_hermitian(gate8):
    for H in (build_dss(gate8, L3), build_dss_phase_noisy(gate8, L3, 0.7),
              build_dss_intensity_noisy(gate8, L3, 1e3), build_dss_dephasing_noisy(gate8, L3, 2e3)):
        assert np.abs(H - H.conj().T).max() <= 1e-12 * np.abs(H).max()


def test_free_spectrum(gate8):
    g = dataclasses.replace(gate8, forces=((0j, 0j), (0j, 0j)), Omega_d=0.0)
    H = build_dss(g, L3)
    assert np.allclose(H, np.diag(np.diag(H)))
    n1, n2 = L3.phonon_numbers
    assert np.allclose(np.diag(H).real, np.tile(n1 * g.delta_1 + n2 * g.delta_2, 4))


def test_drive_splitting(gate8):
    g = dataclasses.replace(gate8, forces=((0j, 0j), (0j, 0j)))
    L = HilbertLayout(1)
    H = build_dss(g, L)
    idx = np.arange(4) * L.phonon_dim
    vac = np.linalg.eigvalsh(H[np.ix_(idx, idx)])
    # ground-state spin sector: S_x/2 eigenvalues -1, 0, 0, +1 times Omega_d
    assert np.allclose(vac, np.array([-1, 0, 0, 1]) * g.Omega_d)


def test_sideband_matrix_element(gate8):
    S = sideband_operator(gate8.F, L3)
    # <1,0; n1=0| sigma_1^+ a_1 |0,0; n1=1> = F_11
    bra = np.kron([0, 0, 1, 0], np.eye(L3.phonon_dim)[0])
    ket = np.kron([1, 0, 0, 0], np.eye(L3.phonon_dim)[L3.n_levels])
    assert np.isclose(bra @ S @ ket, gate8.F[0, 0])


def test_phase_noise(gate8):
    H0 = build_dss(gate8, L3)
    assert np.allclose(build_dss_phase_noisy(gate8, L3, 0.0), H0)
    Hpi = build_dss_phase_noisy(gate8, L3, np.pi)
    g_neg = dataclasses.replace(gate8, forces=tuple(tuple(-f for f in row) for row in gate8.forces))
    assert np.allclose(Hpi, build_dss(g_neg, L3))
    Hh = build_dss_phase_noisy(gate8, L3, np.pi / 2)
    assert np.isclose(np.linalg.norm(Hh), np.linalg.norm(H0))
    assert np.allclose(np.linalg.eigvalsh(Hh), np.linalg.eigvalsh(H0), atol=1e-6 * np.abs(H0).max())


def test_intensity_noise(gate8):
    H0 = build_dss(gate8, L3)
    d = 1e-4 * gate8.Omega_d
    diff = build_dss_intensity_noisy(gate8, L3, d) - H0
    assert np.allclose(diff, d * L3.embed_qubits((qubit_op("sigma_x", 1) + qubit_op("sigma_x", 2)) / 2))
    with pytest.raises(ValueError):
        build_dss_intensity_noisy(gate8, L3, 2 * gate8.Omega_d)


def test_echo_conjugation(gate8):
    """sigma_z sigma_z flips the drive and the sideband but leaves the phonons alone."""
    m = DssModel(gate8, L3)
    P = L3.embed_qubits(SZZ)
    side = m.sideband + m.sideband.conj().T
    H = m.H
    flipped = np.diag(m.phonon_diag) - gate8.Omega_d * m.drive - side
    assert np.allclose(P @ H @ P, flipped)


def test_apply_echo():
    U = np.eye(L3.dim, dtype=complex)
    assert np.allclose(apply_echo(U, U, EchoSpec("sigma_z_pair"), L3), L3.embed_qubits(SZZ))
    assert np.allclose(apply_echo(U, U, EchoSpec("none"), L3), U)
    assert np.allclose(EchoSpec("sigma_y_pair").qubit_operator, SYY)
    with pytest.raises(ValueError):
        EchoSpec("sigma_q")


def test_time_dependences_at_zero(gate_double):
    fx, fy, fz = time_dependences(gate_double, 0.0)
    assert np.isclose(fx, 1) and np.isclose(fy, 1j) and np.isclose(fz, 0)


def test_double_drive_hermitian_and_noise_row(gate_double):
    L = HilbertLayout(2)
    t = 0.37 * gate_double.t_g
    H = build_double_drive(gate_double, L, t)
    assert np.abs(H - H.conj().T).max() < 1e-12 * np.abs(H).max()
    m = DoubleDriveModel(gate_double, L)
    assert np.allclose(m.hamiltonian(t, 0.0), m.deterministic(t))
    assert not np.allclose(m.hamiltonian(t, 50.0), m.deterministic(t))
    with pytest.raises(ValueError):
        build_double_drive(gate_double, L, 2 * gate_double.t_g)
    with pytest.raises(ConstraintError):
        DoubleDriveModel(dataclasses.replace(gate_double, mode="single"), L)


def test_double_drive_reduces_to_single_dressed_frame(gate8):
    """Without the second drive the double-drive builder is the dressed-frame single drive."""
    g = dataclasses.replace(gate8, mode="double", Omega_d2=0.0,
                            delta_1=gate8.delta_1 - gate8.Omega_d,
                            delta_2=gate8.delta_2 - gate8.Omega_d, q=0)
    L = HilbertLayout(2)
    m = DoubleDriveModel(g, L)
    a = [L.phonon_a(1), L.phonon_a(2)]
    for t in (0.0, 1.3e-6, 0.41 * gate8.t_g):
        ref = np.zeros((L.dim, L.dim), dtype=complex)
        for q, n, dag, w in harmonics(gate8):
            b = a[n].conj().T if dag else a[n]
            ref += np.exp(1j * w * t) * L.embed(q, b)
        assert np.allclose(m.deterministic(t), ref, atol=1e-9 * np.abs(ref).max())


def test_projected_model_blocks(gate_double):
    from drivengate.evolve import exchange_parity_sectors

    L = HilbertLayout(2)
    m = DoubleDriveModel(gate_double, L)
    t = 0.2 * gate_double.t_g
    sectors = exchange_parity_sectors(L, m.deterministic(t), m.noise_operator(t))
    assert sectors is not None
    H = m.hamiltonian(t, 3.0)
    Q = np.hstack(sectors)
    blocks = [m.projected(S).hamiltonian(t, 3.0) for S in sectors]
    k = sectors[0].shape[1]
    Hq = Q.conj().T @ H @ Q
    assert np.allclose(Hq[:k, :k], blocks[0]) and np.allclose(Hq[k:, k:], blocks[1])
    assert np.abs(Hq[:k, k:]).max() < 1e-9 * np.abs(H).max()
