"""Acceptance gate: every primary criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line (visible with pytest -s, or in the
captured output on failure). The expensive reference runs live in session
fixtures (conftest.py) and are shared across criteria.
"""

import json

import numpy as np
import pytest

from ottoqed import cli_io, hilbert, spectra, thermo
from ottoqed.hilbert import FockCutoff
from ottoqed.model import SystemParams

from conftest import fig2_detunings, fig3_params

P_GIBBS = 1.0 / (1.0 + np.exp(-1.0 / 2.8))
BETA1 = np.sqrt(0.8**2 + 4 * 0.05**2)


def _check(name: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# 1 ------------------------------------------------------------------------


def test_criterion_otto_cycle_reproduction(otto_run):
    crec, wall = otto_run
    w_ref = (1 - P_GIBBS) * (-0.8)  # ~ -0.33; paper rounds to -0.3
    q_ref = (1 - P_GIBBS) * 1.8     # ~ 0.741
    ok_w = abs(crec.w_out - (-0.33)) <= 0.10 * 0.33
    ok_q = abs(crec.q_in - q_ref) <= 0.05 * q_ref
    ok_closure = abs(crec.closure) <= 1e-3
    ok_runtime = wall <= 60.0
    _check(
        "Otto cycle reproduction",
        ok_w and ok_q and ok_closure and ok_runtime,
        f"W_out={crec.w_out:.5f} (target -0.33+-10%, analytic {w_ref:.5f}), "
        f"Q_in={crec.q_in:.5f} (target {q_ref:.5f}+-5%), "
        f"closure={crec.closure:.2e} (<=1e-3), runtime={wall:.1f}s (<=60s)",
    )
    # supporting Otto consistency: |W|/Q_in ~ |Delta|/Omega0 within 5%
    eff = abs(crec.w_out) / crec.q_in
    assert eff == pytest.approx(0.8 / 1.8, rel=0.05)


# 2 ------------------------------------------------------------------------


def test_criterion_entropy_profile(otto_run):
    crec, _ = otto_run
    s1, s2, s3, s4 = (rec.s for rec in crec.strokes)
    s_gibbs = -(P_GIBBS * np.log(P_GIBBS) + (1 - P_GIBBS) * np.log(1 - P_GIBBS))
    ds2 = float(np.max(np.abs(s2 - s2[0])))
    ds4 = float(np.max(np.abs(s4 - s4[0])))
    rising = bool(np.all(np.diff(s1) > -1e-9))
    ok = (
        ds2 <= 1e-6
        and ds4 <= 1e-6
        and rising
        and abs(s1[-1] - s_gibbs) <= 1e-3
        and s3[-1] <= 1e-3
    )
    _check(
        "Entropy profile",
        ok,
        f"|dS| stroke2={ds2:.2e}, stroke4={ds4:.2e} (<=1e-6); "
        f"stroke1 monotone={rising} to {s1[-1]:.6f} (Gibbs {s_gibbs:.6f}); "
        f"S(end of stroke 3)={s3[-1]:.2e} (<=1e-3)",
    )


# 3 ------------------------------------------------------------------------


def test_criterion_effective_model_oracle(transfer_run):
    rec, lam = transfer_run
    assert lam == pytest.approx(0.0045, abs=1e-12)
    half_time = np.pi / (2 * lam)
    mask = rec.times <= half_time
    model_pop = np.sin(lam * rec.times[mask]) ** 2
    rms = float(np.sqrt(np.mean((rec.pops["g1"][mask] - model_pop) ** 2)))
    t_max = float(rec.times[np.argmax(rec.pops["g1"])])
    ok_rms = rms <= 0.05
    ok_time = abs(t_max - half_time) <= 0.10 * half_time
    _check(
        "Effective-model oracle",
        ok_rms and ok_time,
        f"RMS(pop_g1 - sin^2(lambda t))={rms:.4f} (<=0.05) over one half-period; "
        f"max transfer at t={t_max:.1f} vs pi/(2 lambda)={half_time:.1f} +-10%",
    )


# 4 ------------------------------------------------------------------------


def test_criterion_quantum_power_boost(otto_run, fig2_offres):
    crec, _ = otto_run
    rec_res = crec.strokes[1]
    t3 = rec_res.times[-1]
    p_av = thermo.avg_quantum_power(rec_res, t3)
    p_c = thermo.avg_classical_power(rec_res, t3)
    gap_res = abs(p_av - p_c)
    eta_mid, eta_far = fig2_detunings(crec.eta)
    gaps = {"res": gap_res}
    for tag, eta in (("mid", eta_mid), ("far", eta_far)):
        rec = fig2_offres[eta]
        pa = thermo.avg_quantum_power(rec, rec.times[-1])
        pc = thermo.avg_classical_power(rec, rec.times[-1])
        gaps[tag] = abs(pa - pc)
    ok_sign = p_av < 0 and p_av < p_c
    ok_cmag = abs(p_c) <= 0.10 * abs(p_av)
    ok_far = gaps["far"] <= 0.10 * gaps["res"]
    ok_monotone = gaps["res"] > gaps["mid"] > gaps["far"]
    _check(
        "Quantum power boost",
        ok_sign and ok_cmag and ok_far and ok_monotone,
        f"P_av(t3)={p_av:.3e}<0, P_c_av(t3)={p_c:.3e} (|P_c|<=10%|P_av|); "
        f"gaps res={gaps['res']:.3e} > mid={gaps['mid']:.3e} > far={gaps['far']:.3e}, "
        f"far<=10% of res: {ok_far}",
    )


# 5 ------------------------------------------------------------------------


def test_criterion_rabi_regimes(rabi_runs):
    recs, wall = rabi_runs
    stats = {}
    for tag, rec in recs.items():
        i = int(np.argmin(rec.w))
        stats[tag] = {
            "w_min": float(rec.w[i]),
            "t_min": float(rec.times[i]),
            "p_av": float(thermo.avg_quantum_power_series(rec)[i]),
            "p_c": float(thermo.avg_classical_power_series(rec)[i]),
        }
    ratio = stats["adce"]["w_min"] / stats["jc"]["w_min"]
    ok_ratio = 1.6 <= ratio <= 2.4
    ok_time = stats["adce"]["t_min"] > stats["jc"]["t_min"]
    ok_boost = all(
        s["p_av"] < s["p_c"] and s["p_av"] < 0 and s["p_c"] < 0.25 * abs(s["p_av"])
        for s in stats.values()
    )
    ok_runtime = wall <= 900.0
    _check(
        "Rabi regimes (JC vs ADCE)",
        ok_ratio and ok_time and ok_boost and ok_runtime,
        f"min W_ADCE/min W_JC={ratio:.3f} (in [1.6,2.4]); "
        f"t_min ADCE={stats['adce']['t_min']:.0f} > JC={stats['jc']['t_min']:.0f}; "
        f"P_av<P_c_av<~0 in both regimes; runtime={wall:.0f}s (<=900s)",
    )


# 6 ------------------------------------------------------------------------


def test_criterion_property_suites(otto_run, tmp_path):
    crec, _ = otto_run
    # state sanity at every sample of every stroke
    trace_ok = all(np.max(r.trace_err) <= 1e-6 for r in crec.strokes)
    pos_ok = all(np.min(r.min_eig) >= -1e-8 for r in crec.strokes)
    herm = max(
        float(np.max(np.abs(rho - rho.conj().T)))
        for r in crec.strokes
        for rho in list(r.states.values())[:5] + [r.rho_end]
    )
    # detailed balance at the hot-isochore stationary state
    s1 = crec.strokes[0]
    ratio = s1.pops["e0"][-1] / s1.pops["g0"][-1]
    db_ok = abs(ratio - np.exp(-1.8 / 5.04)) <= 1e-3
    ok = trace_ok and pos_ok and herm <= 1e-12 and db_ok
    _check(
        "Property suite (states, detailed balance)",
        ok,
        f"trace<=1e-6: {trace_ok}, min_eig>=-1e-8: {pos_ok}, herm={herm:.1e}, "
        f"p_e/p_g={ratio:.6f} vs exp(-Omega0/T_a)={np.exp(-1.8/5.04):.6f} (+-1e-3)",
    )
    # RK4 order, Hellmann-Feynman and byte-identical reruns are covered by
    # dedicated tests; assert their criteria here via quick reruns
    from test_dynamics import test_rk4_order_unitary_path

    test_rk4_order_unitary_path()
    print("[PASS] Property suite (RK4 step-halving ~16x): see test_dynamics")

    from test_thermo import test_hellmann_feynman_vs_finite_difference

    test_hellmann_feynman_vs_finite_difference()
    print("[PASS] Property suite (Hellmann-Feynman vs finite differences <=1e-4)")

    # analytic dressed energies vs the numerical eigensolver, all manifolds
    params = SystemParams(omega0=1.8, g0=0.05, eps=0.144)
    cut = FockCutoff(4)
    from ottoqed.model import CouplingSchedule, DriveSchedule, DrivenHamiltonian

    h = DrivenHamiltonian(params, cut, CouplingSchedule.constant(0.05),
                          DriveSchedule.constant(1.8), "jc").static_reference()
    es = spectra.eigendecompose(h)
    worst = 0.0
    for m in range(1, cut.n_max + 1):
        pair = spectra.dressed_states_jc(params, cut, m)
        for e in (pair.e_plus, pair.e_minus):
            worst = max(worst, float(np.min(np.abs(es.energies - e))))
    _check("Property suite (dressed energies vs eigensolver)", worst <= 1e-10,
           f"max |analytic - numeric| = {worst:.2e} (<=1e-10)")


# 7 ------------------------------------------------------------------------


def test_criterion_resonance_report():
    fig1 = SystemParams(omega0=1.8, g0=0.05, eps=0.144)
    rep1 = spectra.resonance_report(fig1, FockCutoff(4), "jc", n=0)
    rep3 = spectra.resonance_report(fig3_params(), FockCutoff(15), "rabi", n=2)
    ok_eta_r = abs(rep1.eta_r - 0.80623) <= 5e-6
    ok_jc = abs(rep3.refined_sideband / 0.8021 - 1.0) <= 0.01
    ok_adce = abs(rep3.refined_adce / 2.8041 - 1.0) <= 0.005
    both_reported = all(
        np.isfinite(x) for x in (rep3.eta_jc, rep3.eta_adce_guess,
                                 rep3.refined_sideband, rep3.refined_adce)
    )
    _check(
        "Resonance report",
        ok_eta_r and ok_jc and ok_adce and both_reported,
        f"eta_r(n=0)={rep1.eta_r:.6f} (=0.80623+-5e-6); "
        f"refined JC gap={rep3.refined_sideband:.5f} (within 1% of 0.8021); "
        f"refined ADCE gap={rep3.refined_adce:.5f} (within 0.5% of 2.8041); "
        f"closed forms reported alongside",
    )
