import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from drivengate.analysis import (
    GATE_INPUTS,
    BellTarget,
    SweepResultRow,
    assemble_sweep,
    bell_fidelity,
    bell_state,
    dephasing_predictions,
    monotone_enveloped,
    product_state,
    thermal_fidelity_closed_form,
)
from drivengate.errors import ConstraintError
from drivengate.qcore import HilbertLayout, State, qubit_op

XX = qubit_op("sigma_x", 1) @ qubit_op("sigma_x", 2)
ZZ = qubit_op("sigma_z", 1) @ qubit_op("sigma_z", 2)


@pytest.mark.parametrize("label", [k for k in GATE_INPUTS if not k.endswith("tilde")])
def test_z_basis_table_from_xx_gate(label):
    out = expm(-1j * np.pi / 4 * XX) @ product_state(GATE_INPUTS[label])
    assert abs(abs(np.vdot(bell_state(label), out)) - 1) < 1e-12


@pytest.mark.parametrize("label", [k for k in GATE_INPUTS if k.endswith("tilde")])
def test_pm_basis_table_from_zz_gate(label):
    out = expm(-1j * np.pi / 4 * ZZ) @ product_state(GATE_INPUTS[label])
    assert abs(abs(np.vdot(bell_state(label), out)) - 1) < 1e-12


def test_bell_states_orthonormal():
    for suffix in ("", "_tilde"):
        B = np.array([bell_state(k + suffix) for k in ("Phi_minus", "Psi_minus", "Psi_plus", "Phi_plus")])
        assert np.allclose(B.conj() @ B.T, np.eye(4))


def test_bell_target_validation():
    with pytest.raises(ValueError):
        BellTarget("Chi")
    with pytest.raises(ValueError):
        BellTarget("Psi_plus", 0)
    assert np.allclose(BellTarget("Psi_plus", -1).vector, bell_state("Psi_minus"))
    assert BellTarget("Psi_plus").source == "10"
    with pytest.raises(ValueError):
        product_state("0x")


def test_bell_fidelity_ignores_phonon_unitaries(rng):
    L = HilbertLayout(2)
    A = rng.normal(size=(L.phonon_dim,) * 2) + 1j * rng.normal(size=(L.phonon_dim,) * 2)
    W = expm(1j * (A + A.conj().T))
    ph = rng.normal(size=L.phonon_dim) + 1j * rng.normal(size=L.phonon_dim)
    ph /= np.linalg.norm(ph)
    q = 0.8 * bell_state("Phi_minus") + 0.6 * bell_state("Phi_plus")
    psi = np.kron(q, ph)
    s1 = State.pure(L, psi)
    s2 = State.pure(L, np.kron(np.eye(4), W) @ psi)
    t = BellTarget("Phi_minus")
    assert np.isclose(bell_fidelity(s1, t), 0.64)
    assert np.isclose(bell_fidelity(s2, t), 0.64)
    assert np.isclose(bell_fidelity(s1.rho, t.vector), 0.64)


def test_thermal_closed_form(gate8):
    p = gate8.with_p(161)
    assert np.isclose(thermal_fidelity_closed_form(p, 0.5, 0.5, p.t_g), 1.0)
    ts = np.linspace(0, p.t_g, 7)[1:-1]
    f_cold = thermal_fidelity_closed_form(p, 0.0, 0.0, ts)
    f_hot = thermal_fidelity_closed_form(p, 1.0, 1.0, ts)
    assert f_cold.shape == ts.shape and np.all(f_hot <= f_cold + 1e-15)
    with pytest.raises(ConstraintError):
        thermal_fidelity_closed_form(gate8.with_drive(1.01 * gate8.Omega_d), 0.1, 0.1, p.t_g)


def test_dephasing_predictions():
    g, shift, gt, T2t = dephasing_predictions(15e-6, 1.5e-6, 2 * np.pi * 5e6)
    assert np.isclose(g, 0.5 / 15e-6)
    assert gt < g and T2t > 15e-6 and shift > 0
    drives = 2 * np.pi * np.array([1e6, 3e6, 10e6])
    T2s = [dephasing_predictions(15e-6, 1.5e-6, w)[3] for w in drives]
    assert np.all(np.diff(T2s) > 0)
    with pytest.warns(UserWarning):
        dephasing_predictions(15e-6, 1.5e-6, 1e5)
    with pytest.raises(ValueError):
        dephasing_predictions(-1, 1, 1)


def _row(Od, p, e):
    return SweepResultRow(Od, p, e, 1e-5, 100, "dephasing", 15e-6)


def test_sweep_assembly(gate8):
    d1 = abs(gate8.delta_1)
    rows = [_row(p * d1, p, e) for p, e in ((57, 2e-4), (15, 1e-3), (30, 1e-4))]
    res = assemble_sweep(rows, gate8.delta_1)
    assert [r.p for r in res.rows] == [15, 30, 57]
    assert res.minimum.p == 30 and res.has_interior_minimum
    assert np.allclose(res.drives, np.sort(res.drives))
    with pytest.raises(ConstraintError):
        assemble_sweep([_row(3.0, 15, 0.1)], gate8.delta_1)
    with pytest.raises(ValueError):
        assemble_sweep([])
    with pytest.raises(ValueError):
        assemble_sweep([_row(1.0, None, 0.1), SweepResultRow(2.0, None, 0.1, 0, 1, "intensity", 1e-4)])
    with pytest.raises(ValueError):
        _row(1.0, None, 1.5)
    assert _row(1.0, None, -1e-13).error == 0.0


def test_monotone_enveloped():
    assert monotone_enveloped([1e-2, 5e-3, 6e-3, 2e-3, 1e-3, 1.2e-3])
    assert not monotone_enveloped([1e-3, 2e-3, 3e-3, 4e-3])
    assert not monotone_enveloped([1e-3])
