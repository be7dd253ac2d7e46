import warnings

import numpy as np
import pytest

from ottoqed import hilbert, model
from ottoqed.hilbert import FockCutoff
from ottoqed.model import CouplingSchedule, DriveSchedule, SystemParams

CUT = FockCutoff(4)
PARAMS = SystemParams(omega0=1.8, g0=0.05, eps=0.144, eta=0.8)


def _ham(params=PARAMS, g=None, d=None, kind="jc"):
    g = g if g is not None else CouplingSchedule.constant(params.g0)
    d = d if d is not None else DriveSchedule.harmonic(params.omega0, params.eps, params.eta)
    return model.DrivenHamiltonian(params, CUT, g, d, kind)


def test_params_validation():
    SystemParams(omega0=1.8, g0=0.05, eps=0.144).validate(CUT)
    with pytest.raises(ValueError, match="perturbative"):
        SystemParams(omega0=1.8, g0=0.05, eps=0.5).validate()
    with pytest.warns(UserWarning, match="marginally"):
        SystemParams(omega0=1.8, g0=0.05, eps=0.2).validate()
    with pytest.raises(ValueError, match="weak-coupling"):
        SystemParams(omega0=1.8, g0=0.5).validate()
    with pytest.raises(ValueError, match="dispersive"):
        SystemParams(omega0=1.05, g0=0.05).validate(CUT)  # |Delta|=0.05 < 2g sqrt(4)


def test_uncoupled_limit_diagonal():
    p = SystemParams(omega0=1.8, g0=0.0)
    h = model.hamiltonian_jc(p, CUT, CouplingSchedule.zero(),
                             DriveSchedule.constant(p.omega0), t=3.7)
    assert np.allclose(h, np.diag(np.diag(h)))
    for n in range(CUT.n_max + 1):
        assert h[2 * n, 2 * n].real == pytest.approx(n - 0.9)
        assert h[2 * n + 1, 2 * n + 1].real == pytest.approx(n + 0.9)


def test_jc_conserves_excitation_number():
    ham = _ham()
    a = hilbert.annihilation(CUT)
    sp, sm, _ = hilbert.atom_ops(CUT)
    n_tot = a.conj().T @ a + sp @ sm
    for t in (0.0, 1.3, 17.9):
        h = ham.h(t)
        assert np.allclose(h, h.conj().T, atol=1e-14)
        assert np.max(np.abs(h @ n_tot - n_tot @ h)) < 1e-13


def test_one_excitation_block_eigenvalue():
    # {|g,1>, |e,0>} block at Fig-1 parameters, static case
    h = _ham(d=DriveSchedule.constant(1.8)).h(0.0)
    block = h[np.ix_([2, 1], [2, 1])]
    beta1 = np.sqrt(0.8**2 + 4 * 0.05**2)
    lo = np.linalg.eigvalsh(block)[0]
    assert lo == pytest.approx(0.5 - beta1 / 2, abs=1e-14)
    assert lo == pytest.approx(0.09688, abs=2e-5)


def test_rabi_reduces_to_jc_without_coupling():
    p = SystemParams(omega0=1.8, g0=0.05, eps=0.144, eta=0.8)
    g = CouplingSchedule.zero()
    d = DriveSchedule.harmonic(p.omega0, p.eps, p.eta)
    t = 2.1
    assert np.allclose(model.hamiltonian_rabi(p, CUT, g, d, t),
                       model.hamiltonian_jc(p, CUT, g, d, t))


def test_rabi_breaks_number_conservation_but_keeps_parity():
    ham = _ham(kind="rabi")
    a = hilbert.annihilation(CUT)
    sp, sm, _ = hilbert.atom_ops(CUT)
    n_tot = a.conj().T @ a + sp @ sm
    parity = np.diag(np.exp(1j * np.pi * np.diag(n_tot).real))
    for t in (0.0, 5.3):
        h = ham.h(t)
        assert np.max(np.abs(h @ n_tot - n_tot @ h)) > 1e-3
        assert np.max(np.abs(h @ parity - parity @ h)) < 1e-13


def test_coupling_schedules():
    g = CouplingSchedule.ramp_on(0.05)
    ts = np.linspace(0, 100, 50)
    vals = np.array([g.value(t) for t in ts])
    assert np.all(np.diff(vals) > 0) and np.all(vals < 0.05)
    assert g.value(0.0) == 0.0
    g_off = CouplingSchedule.ramp_off(0.05)
    vals = np.array([g_off.value(t) for t in ts])
    assert np.all(np.diff(vals) < 0)
    assert g_off.value(0.0) == pytest.approx(0.05)
    assert g.reference() == 0.05 and g_off.reference() == 0.0
    with pytest.raises(ValueError):
        CouplingSchedule("linear", 0.05)


def test_dh_dt_constant_schedules_vanish():
    p = SystemParams(omega0=1.8, g0=0.05)
    dh = model.dh_dt(p, CUT, CouplingSchedule.constant(p.g0),
                     DriveSchedule.constant(p.omega0), t=1.0)
    assert np.allclose(dh, 0.0)


def test_dh_dt_at_drive_origin():
    ham = _ham(g=CouplingSchedule.constant(0.05))
    _, _, sz = hilbert.atom_ops(CUT)
    expect = 0.5 * PARAMS.eps * PARAMS.eta * sz
    assert np.allclose(ham.dh_dt(0.0), expect, atol=1e-15)


@pytest.mark.parametrize("kind", ["jc", "rabi"])
def test_dh_dt_matches_central_differences(kind):
    ham = _ham(g=CouplingSchedule.ramp_on(0.05), kind=kind)
    t = 7.3
    errs = []
    for delta in (1e-3, 1e-4):
        fd = (ham.h(t + delta) - ham.h(t - delta)) / (2 * delta)
        errs.append(np.max(np.abs(fd - ham.dh_dt(t))))
    assert errs[0] < 1e-5
    # second-order convergence: error drops ~100x for a 10x smaller delta
    assert errs[0] / errs[1] == pytest.approx(100, rel=0.2)


def test_static_reference_uses_schedule_asymptotes():
    ham = _ham(g=CouplingSchedule.ramp_on(0.05))
    h_ref = ham.static_reference()
    h_static = _ham(g=CouplingSchedule.constant(0.05),
                    d=DriveSchedule.constant(1.8)).h(0.0)
    assert np.allclose(h_ref, h_static)
    assert not ham.is_static
    assert _ham(g=CouplingSchedule.constant(0.05),
                d=DriveSchedule.constant(1.8)).is_static
