"""Shared fixtures: the expensive reference runs are executed once per session."""

import time

import numpy as np
import pytest

from ottoqed import cycle, dynamics, hilbert, model
from ottoqed.dynamics import BathSpec, IntegratorConfig
from ottoqed.hilbert import FockCutoff
from ottoqed.model import SystemParams


FIG1 = dict(omega0=1.8, g0=0.05, eps=0.144, gamma=0.05, kappa=0.05)
FIG3 = dict(omega0=0.2, g0=0.05, eps=0.016, nbar=1.8)


def fig1_params() -> SystemParams:
    return SystemParams(omega0=FIG1["omega0"], g0=FIG1["g0"], eps=FIG1["eps"])


def fig3_params() -> SystemParams:
    return SystemParams(omega0=FIG3["omega0"], g0=FIG3["g0"], eps=FIG3["eps"])


def fig1_cycle_spec() -> cycle.CycleSpec:
    return cycle.CycleSpec(
        model="jc",
        params=fig1_params(),
        cutoff=FockCutoff(4),
        bath_atom=BathSpec("atom", FIG1["gamma"], 2.8 * FIG1["omega0"]),
        bath_cavity=BathSpec("cavity", FIG1["kappa"], 0.0),
    )


@pytest.fixture(scope="session")
def otto_run():
    """Full Fig-1 Otto cycle; returns (CycleRecord, wall_seconds)."""
    t0 = time.time()
    rec = cycle.run_otto_cycle(fig1_cycle_spec(), IntegratorConfig())
    return rec, time.time() - t0


@pytest.fixture(scope="session")
def fig2_offres(otto_run):
    """Off-resonant work strokes over the resonant duration: {eta: record}."""
    crec, _ = otto_run
    params = fig1_params()
    duration = crec.strokes[1].duration
    rho0 = crec.strokes[0].rho_end
    cut = FockCutoff(4)
    out = {}
    for eta in fig2_detunings(crec.eta):
        p = params.with_eta(eta)
        ham = model.DrivenHamiltonian(
            p, cut,
            model.CouplingSchedule.ramp_on(p.g0),
            model.DriveSchedule.harmonic(p.omega0, p.eps, eta),
            "jc",
        )
        out[eta] = dynamics.evolve(rho0, duration, ham, None, IntegratorConfig(),
                                   pop_labels=("g0", "e0", "g1"), label="work_extraction")
    return out


def fig2_detunings(eta_r: float) -> tuple[float, float]:
    """The two off-resonance drive frequencies of the Fig-2 panels."""
    params = fig1_params()
    shift = params.g0**2 / (params.omega + params.omega0)
    return eta_r - 16 * shift, eta_r - 100 * shift


@pytest.fixture(scope="session")
def rabi_runs():
    """Fig-3 JC and ADCE extraction records; returns (dict, wall_seconds)."""
    params = fig3_params()
    cut = FockCutoff(15)
    cfg = IntegratorConfig(sample_every=8, renormalize_trace=True, leakage_tol=1e-2)
    t0 = time.time()
    recs = {
        "jc": cycle.run_rabi_extraction("jc", FIG3["nbar"], params, cut, cfg),
        "adce": cycle.run_rabi_extraction("adce", FIG3["nbar"], params, cut, cfg),
    }
    return recs, time.time() - t0


@pytest.fixture(scope="session")
def transfer_run():
    """Unitary stroke-2 evolution from |e,0> (effective-model oracle input)."""
    params = fig1_params()
    cut = FockCutoff(4)
    eta = float(np.sqrt(params.detuning**2 + 4 * params.g0**2))
    p = params.with_eta(eta)
    ham = model.DrivenHamiltonian(
        p, cut,
        model.CouplingSchedule.ramp_on(p.g0),
        model.DriveSchedule.harmonic(p.omega0, p.eps, eta),
        "jc",
    )
    ve0 = hilbert.basis_state(cut, 0, 1)
    rho0 = np.outer(ve0, ve0.conj())
    lam = params.g0 * params.eps / (2 * abs(params.detuning))
    duration = 1.2 * np.pi / (2 * lam)
    rec = dynamics.evolve(rho0, duration, ham, None, IntegratorConfig(),
                          pop_labels=("g1", "e0"), label="work_extraction")
    return rec, lam
