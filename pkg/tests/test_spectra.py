import numpy as np
import pytest

from ottoqed import hilbert, model, spectra
from ottoqed.hilbert import FockCutoff
from ottoqed.model import CouplingSchedule, DriveSchedule, SystemParams

CUT = FockCutoff(4)
FIG1 = SystemParams(omega0=1.8, g0=0.05, eps=0.144)
FIG3 = SystemParams(omega0=0.2, g0=0.05, eps=0.016)
BETA1 = np.sqrt(0.8**2 + 4 * 0.05**2)


def _static_h(params, kind, cutoff=CUT):
    ham = model.DrivenHamiltonian(
        params, cutoff,
        CouplingSchedule.constant(params.g0),
        DriveSchedule.constant(params.omega0),
        kind,
    )
    return ham.static_reference()


def test_eigendecompose_diagonal():
    h = np.diag([3.0, -1.0, 2.0]).astype(complex)
    es = spectra.eigendecompose(h)
    assert np.allclose(es.energies, [-1.0, 2.0, 3.0])
    assert np.allclose(np.abs(es.vectors), np.eye(3)[:, [1, 2, 0]])


def test_eigendecompose_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        spectra.eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_jc_one_excitation_gap():
    es = spectra.eigendecompose(_static_h(FIG1, "jc"))
    # the |1,+->/|1,-> doublet brackets the one-excitation block
    v_g1 = hilbert.basis_state(CUT, 1, 0)
    v_e0 = hilbert.basis_state(CUT, 0, 1)
    gap = spectra.refine_resonance(_static_h(FIG1, "jc"), v_e0, v_g1)
    assert gap == pytest.approx(BETA1, abs=1e-12)
    assert gap == pytest.approx(0.80623, abs=5e-6)
    assert es.min_match == 1.0


def test_random_hermitian_reconstruction():
    rng = np.random.default_rng(7)
    for _ in range(20):
        h = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        h = h + h.conj().T
        es = spectra.eigendecompose(h)
        recon = es.vectors @ np.diag(es.energies) @ es.vectors.conj().T
        assert np.max(np.abs(recon - h)) <= 1e-9 * np.linalg.norm(h)
        gram = es.vectors.conj().T @ es.vectors
        assert np.max(np.abs(gram - np.eye(8))) < 1e-10


def test_label_tracking_through_avoided_crossing():
    # diabatic levels cross; adiabatic tracking keeps labels continuous
    def h_of(s):
        return np.array([[s, 0.05], [0.05, -s]], dtype=complex)

    prev = spectra.eigendecompose(h_of(-1.0))
    labels0 = prev.labels.copy()
    tracks = {lab: [] for lab in labels0}
    for s in np.linspace(-1.0, 1.0, 400):
        prev = spectra.eigendecompose(h_of(s), prev)
        assert prev.min_match > 0.99
        for lab, e in zip(prev.labels, prev.energies):
            tracks[lab].append(e)
    for lab in labels0:
        jumps = np.max(np.abs(np.diff(tracks[lab])))
        assert jumps < 0.05  # continuous through the 0.1-gap crossing


def test_dressed_states_match_exact_diagonalization():
    h = _static_h(FIG1, "jc")
    es = spectra.eigendecompose(h)
    for m in range(1, CUT.n_max + 1):
        pair = spectra.dressed_states_jc(FIG1, CUT, m)
        for energy, vec in ((pair.e_plus, pair.v_plus), (pair.e_minus, pair.v_minus)):
            k = np.argmin(np.abs(es.energies - energy))
            assert abs(es.energies[k] - energy) < 1e-10
            assert abs(abs(es.vectors[:, k].conj() @ vec) - 1.0) < 1e-10


def test_dressed_states_fig1_values():
    pair = spectra.dressed_states_jc(FIG1, CUT, 1)
    assert pair.e_plus == pytest.approx(0.5 + BETA1 / 2, abs=1e-14)
    assert pair.e_minus == pytest.approx(0.5 - BETA1 / 2, abs=1e-14)
    assert pair.e_plus == pytest.approx(0.90312, abs=2e-5)
    assert pair.e_minus == pytest.approx(0.09688, abs=2e-5)
    assert pair.gap == pytest.approx(0.80623, abs=5e-6)


def test_dressed_states_dispersive_limit():
    # g0 -> 0 with Delta < 0: |1,+> -> |e,0>, |1,-> -> |g,1>
    p = SystemParams(omega0=1.8, g0=1e-4)
    pair = spectra.dressed_states_jc(p, CUT, 1)
    v_e0 = hilbert.basis_state(CUT, 0, 1)
    v_g1 = hilbert.basis_state(CUT, 1, 0)
    assert abs(pair.v_plus.conj() @ v_e0) > 1 - 1e-6
    assert abs(pair.v_minus.conj() @ v_g1) > 1 - 1e-6
    with pytest.raises(ValueError):
        spectra.dressed_states_jc(p, CUT, 0)


def test_eta_sideband_jc():
    assert spectra.eta_sideband_jc(FIG1, 0) == pytest.approx(BETA1, abs=1e-15)
    p0 = SystemParams(omega0=1.8, g0=1e-12)
    assert spectra.eta_sideband_jc(p0, 0) == pytest.approx(0.8)
    # n=3 vs n=0 difference ~ 2 g0^2 * 3 / |Delta| to leading order
    diff = spectra.eta_sideband_jc(FIG1, 3) - spectra.eta_sideband_jc(FIG1, 0)
    assert diff == pytest.approx(2 * FIG1.g0**2 * 3 / 0.8, rel=0.05)


def test_eta_sideband_rabi():
    assert spectra.bloch_siegert_shift(FIG3) == pytest.approx(0.0025 / 1.2, abs=1e-15)
    p0 = SystemParams(omega0=0.2, g0=1e-12)
    assert spectra.eta_sideband_rabi(p0, 0) == pytest.approx(0.8)
    # reduces to the JC form when the Bloch-Siegert shift is negligible
    assert spectra.eta_sideband_rabi(p0, 2) == pytest.approx(
        spectra.eta_sideband_jc(p0, 2), abs=1e-9
    )
    # Fig-3 footnote discrepancy: the closed form sits ~0.5% above 0.8021
    assert spectra.eta_sideband_rabi(FIG3, 2) == pytest.approx(0.8063, abs=5e-5)


def test_eta_adce():
    assert spectra.eta_adce(FIG3) == pytest.approx(2.8)
    cut = FockCutoff(15)
    refined = spectra.refine_resonance(
        _static_h(FIG3, "rabi", cut),
        hilbert.basis_state(cut, 3, 0),
        hilbert.basis_state(cut, 0, 1),
    )
    assert abs(refined / 2.8 - 1.0) < 0.01


def test_refine_resonance_uncoupled():
    p = SystemParams(omega0=1.8, g0=0.0)
    gap = spectra.refine_resonance(
        _static_h(p, "jc"),
        hilbert.basis_state(CUT, 1, 0),
        hilbert.basis_state(CUT, 0, 1),
    )
    assert gap == pytest.approx(0.8, abs=1e-14)


def test_refine_resonance_ambiguity():
    h = _static_h(FIG1, "jc")
    es = spectra.eigendecompose(h)
    spread = (es.vectors[:, 0] + es.vectors[:, 1] + es.vectors[:, 2]) / np.sqrt(3)
    with pytest.raises(spectra.AmbiguousOverlapError):
        spectra.refine_resonance(h, spread, hilbert.basis_state(CUT, 0, 0))


def test_effective_rate():
    lam = spectra.effective_rate(FIG1, 0)
    assert lam == pytest.approx(0.0045, abs=1e-15)
    assert spectra.half_transfer_time(FIG1, 0) == pytest.approx(349.0659, abs=1e-3)
    assert spectra.effective_rate(FIG1.with_eta(0.8), 3) == pytest.approx(2 * lam)
    p0 = SystemParams(omega0=1.8, g0=0.05, eps=0.0)
    assert spectra.effective_rate(p0, 0) == 0.0


def test_resonance_report_fields():
    report = spectra.resonance_report(FIG3, FockCutoff(15), "rabi", n=2)
    d = report.to_dict()
    for key in ("delta_minus", "delta_plus", "eta_r", "eta_jc", "eta_adce_guess",
                "lam", "refined_sideband", "refined_adce"):
        assert np.isfinite(d[key])
    assert d["lam"] > 0
    jc_report = spectra.resonance_report(FIG1, CUT, "jc", n=0)
    assert jc_report.refined_adce is None
    # the JC sideband closed form is exact: refined == formula
    assert jc_report.refined_sideband == pytest.approx(jc_report.eta_r, abs=1e-12)


def test_floquet_resonance_matches_static_gap():
    # weak drive: the drive-dressed sideband sits on the static JC gap
    eta, lam = spectra.floquet_resonance(
        FIG1, CUT, "jc",
        hilbert.basis_state(CUT, 1, 0),
        hilbert.basis_state(CUT, 0, 1),
        BETA1,
        span=1e-2,
        npts=21,
    )
    assert eta == pytest.approx(BETA1, abs=1e-3)
    assert lam == pytest.approx(0.0045, rel=0.05)
