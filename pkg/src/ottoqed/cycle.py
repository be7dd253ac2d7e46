"""Four-stroke Otto cycle orchestration and the Rabi work-extraction protocols.

Cycle layout (all times local to each stroke):

1. hot isochore    Gamma > 0, kappa = 0, g = 0, Omega = Omega_0 (atom thermalizes)
2. work extraction Gamma = kappa = 0, g ramps on, Omega harmonically modulated
3. cold isochore   Gamma = 0, kappa > 0, g = g0, Omega = Omega_0 (T = 0 reset
   of the coupled system to its ground state)
4. reset           Gamma = kappa = 0, g ramps off, Omega = Omega_0

The work stroke ends on a drive-phase zero crossing (t3 - t2 = k pi/eta) chosen
to minimize W among the crossings in the scan window: only there does the
modulated Hamiltonian coincide with the static one, so H is continuous into the
cold isochore and the extracted work excludes the instantaneous (recoverable)
drive contribution ~ (eps/2)<sigma_z>.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, hilbert, spectra, thermo
from .dynamics import BathSpec, IntegratorConfig
from .hilbert import FockCutoff
from .model import CouplingSchedule, DriveSchedule, DrivenHamiltonian, SystemParams
from .thermo import StrokeRecord

__all__ = [
    "StrokeSpec",
    "CycleSpec",
    "CycleRecord",
    "ConvergenceWarning",
    "run_stroke",
    "optimize_t3",
    "run_otto_cycle",
    "run_rabi_extraction",
]

GROUND_FIDELITY_TOL = 0.999
THERMALIZATION_TOL = 1e-3


class ConvergenceWarning(UserWarning):
    """An isochore did not reach its stationary state within its duration."""


@dataclass(frozen=True)
class StrokeSpec:
    """One stroke: schedules, bath switches and duration (or a scan window).

    For the work stroke, duration=None requests a scan over ``window`` (in
    units of the analytic half-transfer guess pi/(2 lambda)) with the stop time
    picked by optimize_t3's zero-crossing rule.
    """

    label: str
    g_kind: str
    d_kind: str
    bath: BathSpec | None = None
    duration: float | None = None
    window: tuple[float, float] = (0.85, 1.2)

    _LABELS = ("hot_isochore", "work_extraction", "cold_isochore", "reset")

    def __post_init__(self):
        if self.label not in self._LABELS:
            raise ValueError(f"unknown stroke label {self.label!r}")
        if self.label == "hot_isochore":
            if self.bath is None or self.bath.target != "atom" or self.g_kind != "zero":
                raise ValueError("hot isochore needs an atom bath and g = 0")
        if self.label == "work_extraction":
            if self.bath is not None:
                raise ValueError("work extraction is unitary (no baths)")
            if self.d_kind != "harmonic":
                raise ValueError("work extraction needs the harmonic drive")
        if self.label == "cold_isochore":
            if self.bath is None or self.bath.target != "cavity":
                raise ValueError("cold isochore needs a cavity bath")
        if self.label == "reset":
            if self.bath is not None or self.d_kind != "constant":
                raise ValueError("reset is unitary with a constant drive")


@dataclass(frozen=True)
class CycleSpec:
    """Full Otto-cycle configuration."""

    model: str
    params: SystemParams
    cutoff: FockCutoff
    bath_atom: BathSpec
    bath_cavity: BathSpec
    eta: float | None = None            # None -> refined sideband resonance
    sideband_n: int = 0
    isochore_multiple: float = 10.0     # isochore duration in bath time constants
    reset_duration: float | None = None  # default 5/g0
    work_window: tuple[float, float] = (0.85, 1.2)
    work_duration: float | None = None  # None -> optimize t3
    pop_labels: tuple[str, ...] = ("g0", "e0", "g1", "e1")

    def validate(self) -> None:
        if self.model not in ("jc", "rabi"):
            raise ValueError(f"unknown model {self.model!r}")
        self.params.validate(self.cutoff)
        if self.bath_atom.target != "atom" or self.bath_cavity.target != "cavity":
            raise ValueError("bath_atom/bath_cavity targets are fixed")


@dataclass
class CycleRecord:
    """Concatenated stroke records plus per-stroke and cycle energy bookkeeping."""

    strokes: list[StrokeRecord]
    boundaries: list[float]              # absolute stroke end times t1..t4
    per_stroke: list[dict]               # label, delta_u, w, q_a, q_f, closure
    q_in: float
    w_out: float
    q_out: float
    w_in: float
    closure: float
    eta: float
    t3_minus_t2: float
    meta: dict = field(default_factory=dict)


def _resolve_eta(spec: CycleSpec) -> float:
    if spec.eta is not None:
        return spec.eta
    report = spectra.resonance_report(spec.params, spec.cutoff, spec.model, spec.sideband_n)
    return report.refined_sideband


def _build_ham(spec_model, params, cutoff, g_kind, d_kind, eta):
    g0 = params.g0
    g_sched = {
        "zero": CouplingSchedule.zero(),
        "constant": CouplingSchedule.constant(g0),
        "ramp_on": CouplingSchedule.ramp_on(g0),
        "ramp_off": CouplingSchedule.ramp_off(g0),
    }[g_kind]
    if d_kind == "harmonic":
        d_sched = DriveSchedule.harmonic(params.omega0, params.eps, eta)
    else:
        d_sched = DriveSchedule.constant(params.omega0)
    return DrivenHamiltonian(params, cutoff, g_sched, d_sched, spec_model)


def run_stroke(
    rho_in: np.ndarray,
    model_kind: str,
    params: SystemParams,
    cutoff: FockCutoff,
    stroke: StrokeSpec,
    cfg: IntegratorConfig,
    eta: float = 0.0,
    pop_labels: tuple[str, ...] = (),
) -> StrokeRecord:
    """Evolve one stroke (fixed duration; work-stroke scans live in the cycle)."""
    if stroke.duration is None:
        raise ValueError("run_stroke needs an explicit duration")
    ham = _build_ham(model_kind, params, cutoff, stroke.g_kind, stroke.d_kind, eta)
    liouv = None
    if stroke.bath is not None:
        liouv = dynamics.build_liouvillian(ham.static_reference(), [stroke.bath], cutoff)
    rec = dynamics.evolve(
        rho_in, stroke.duration, ham, liouv, cfg,
        pop_labels=pop_labels, label=stroke.label,
    )
    return rec


def optimize_t3(record: StrokeRecord, window: tuple[float, float], guess: float) -> tuple[int, float]:
    """Pick the work-stroke stop time from a recorded scan.

    Candidates are the drive-phase zero crossings t = k pi/eta inside
    ``window`` (in units of the analytic guess pi/(2 lambda)); returns the
    sample index and time of the candidate minimizing W(t), ties toward
    earlier times. Falls back to the crossing nearest the analytic guess
    (with a warning) when the window contains no interior minimum.
    """
    m_half = record.meta.get("m_half", 0)
    se = record.meta.get("sample_every", 1)
    if m_half <= 0:
        raise ValueError("record was not produced with a half-period-aligned step")
    if m_half % se != 0:
        raise ValueError("sample grid does not contain the drive zero crossings")
    stride = m_half // se
    cross = np.arange(0, len(record.times), stride)
    lo, hi = window[0] * guess, window[1] * guess
    sel = cross[(record.times[cross] >= lo) & (record.times[cross] <= hi)]
    if len(sel) == 0:
        raise ValueError(f"no drive zero crossings inside the window [{lo:.1f}, {hi:.1f}]")
    wvals = record.w[sel]
    k = int(np.argmin(wvals))
    if k in (0, len(sel) - 1):
        warnings.warn(
            "work minimum sits at the scan-window edge; falling back to the "
            "crossing nearest the analytic guess pi/(2 lambda)",
            ConvergenceWarning,
            stacklevel=2,
        )
        k = int(np.argmin(np.abs(record.times[sel] - guess)))
    idx = int(sel[k])
    return idx, float(record.times[idx])


def _isochore_cfg(cfg: IntegratorConfig) -> IntegratorConfig:
    return IntegratorConfig(
        step=None,
        sample_every=cfg.sample_every,
        renormalize_trace=cfg.renormalize_trace,
        leakage_tol=cfg.leakage_tol,
        store_states_every=0,
    )


def scan_work_stroke(
    rho_in: np.ndarray,
    spec: CycleSpec,
    cfg: IntegratorConfig,
) -> tuple[StrokeRecord, int, float]:
    """Run the work stroke over the scan window and locate the optimal t3.

    Returns the full scan record together with the sample index and time of
    the chosen drive-phase zero crossing; truncate the record there to obtain
    the stroke that feeds the cold isochore.
    """
    eta = _resolve_eta(spec)
    params_eta = spec.params.with_eta(eta)
    guess = spectra.half_transfer_time(params_eta, spec.sideband_n)
    ham = _build_ham(spec.model, params_eta, spec.cutoff, "ramp_on", "harmonic", eta)
    dt, m_half = dynamics._resolve_step(ham, None, cfg)
    if m_half % cfg.sample_every != 0:
        raise ValueError(
            "sample_every must divide the half-period step count so the scan "
            "samples contain the drive zero crossings"
        )
    scan_cfg = IntegratorConfig(
        step=cfg.step,
        sample_every=cfg.sample_every,
        renormalize_trace=cfg.renormalize_trace,
        leakage_tol=cfg.leakage_tol,
        store_states_every=m_half // cfg.sample_every,
        stroboscopic=cfg.stroboscopic,
    )
    half = np.pi / eta
    duration = np.ceil(spec.work_window[1] * guess / half) * half
    rec = dynamics.evolve(rho_in, duration, ham, None, scan_cfg,
                          pop_labels=spec.pop_labels, label="work_extraction")
    idx3, t3 = optimize_t3(rec, spec.work_window, guess)
    return rec, idx3, t3


def run_otto_cycle(spec: CycleSpec, cfg: IntegratorConfig) -> CycleRecord:
    """Execute the four strokes sequentially, threading the state through."""
    spec.validate()
    params, cutoff = spec.params, spec.cutoff
    eta = _resolve_eta(spec)
    params_eta = params.with_eta(eta)
    pop_labels = spec.pop_labels

    rho = hilbert.ground_state(cutoff)
    per_stroke: list[dict] = []
    strokes: list[StrokeRecord] = []

    # stroke 1: hot isochore
    s1 = StrokeSpec(
        "hot_isochore", "zero", "constant",
        bath=spec.bath_atom,
        duration=spec.isochore_multiple / spec.bath_atom.rate,
    )
    rec1 = run_stroke(rho, spec.model, params, cutoff, s1, _isochore_cfg(cfg),
                      pop_labels=pop_labels)
    p_gibbs = hilbert.thermal_atom_population(params.omega0, spec.bath_atom.temperature)
    if abs(rec1.pops["g0"][-1] - p_gibbs) > THERMALIZATION_TOL:
        warnings.warn(
            f"hot isochore not converged: p_g = {rec1.pops['g0'][-1]:.5f} vs "
            f"Gibbs {p_gibbs:.5f}",
            ConvergenceWarning,
            stacklevel=2,
        )
    rho = rec1.rho_end
    strokes.append(rec1)

    # stroke 2: isentropic work extraction (scan + zero-crossing stop rule)
    lam = spectra.effective_rate(params_eta, spec.sideband_n)
    guess = spectra.half_transfer_time(params_eta, spec.sideband_n)
    if spec.work_duration is not None:
        ham2 = _build_ham(spec.model, params_eta, cutoff, "ramp_on", "harmonic", eta)
        rec2 = dynamics.evolve(rho, spec.work_duration, ham2, None, cfg,
                               pop_labels=pop_labels, label="work_extraction")
    else:
        rec_scan, idx3, _ = scan_work_stroke(rho, spec, cfg)
        rec2 = rec_scan.truncate(idx3)
    rho = rec2.rho_end
    strokes.append(rec2)

    # stroke 3: cold isochore
    s3 = StrokeSpec(
        "cold_isochore", "constant", "constant",
        bath=spec.bath_cavity,
        duration=spec.isochore_multiple / spec.bath_cavity.rate,
    )
    rec3 = run_stroke(rho, spec.model, params, cutoff, s3, _isochore_cfg(cfg),
                      pop_labels=pop_labels)
    fid = rec3.pops["g0"][-1]
    if fid < GROUND_FIDELITY_TOL:
        warnings.warn(
            f"cold isochore not converged: <g,0|rho|g,0> = {fid:.5f} < {GROUND_FIDELITY_TOL}",
            ConvergenceWarning,
            stacklevel=2,
        )
    rho = rec3.rho_end
    strokes.append(rec3)

    # stroke 4: isentropic reset
    s4 = StrokeSpec(
        "reset", "ramp_off", "constant",
        duration=spec.reset_duration if spec.reset_duration is not None else 5.0 / params.g0,
    )
    rec4 = run_stroke(rho, spec.model, params, cutoff, s4, _isochore_cfg(cfg),
                      pop_labels=pop_labels)
    strokes.append(rec4)

    boundaries = []
    t_abs = 0.0
    for rec in strokes:
        t_abs += rec.duration
        boundaries.append(t_abs)
    for rec in strokes:
        per_stroke.append(
            {
                "label": rec.label,
                "delta_u": rec.delta_u(),
                "w": float(rec.w[-1]),
                "q_a": float(rec.q_a[-1]),
                "q_f": float(rec.q_f[-1]),
                "closure": thermo.first_law_residual(rec),
            }
        )
    q_in = per_stroke[0]["q_a"]
    w_out = per_stroke[1]["w"]
    q_out = per_stroke[2]["q_f"]
    w_in = per_stroke[3]["w"]
    closure = float(q_in + w_out + q_out + w_in - (strokes[3].u[-1] - strokes[0].u[0]))
    return CycleRecord(
        strokes=strokes,
        boundaries=boundaries,
        per_stroke=per_stroke,
        q_in=q_in,
        w_out=w_out,
        q_out=q_out,
        w_in=w_in,
        closure=closure,
        eta=eta,
        t3_minus_t2=float(strokes[1].duration),
        meta={"lambda": lam, "half_transfer_guess": guess, "p_gibbs": p_gibbs},
    )


def run_rabi_extraction(
    regime: str,
    nbar: float,
    params: SystemParams,
    cutoff: FockCutoff,
    cfg: IntegratorConfig,
    duration: float | None = None,
    eta: float | None = None,
    pop_labels: tuple[str, ...] = ("g3", "e2", "e0", "g0"),
) -> StrokeRecord:
    """Work-extraction stroke of the Rabi model from |g> (x) thermal(nbar).

    regime 'jc' drives the |g,3> -> |e,2> sideband, regime 'adce' the
    |g,3> -> |e,0> two-excitation annihilation; with eta=None the drive is
    tuned to the Floquet-refined resonance of the target pair. duration=None
    sizes the run to bracket the work minimum: ~2.2 half-transfer times for
    the sideband (whose rate has the closed form g0 eps sqrt(3)/2|Delta_-|),
    and 1.1 pi/(2 lam_Floquet) plus the ramp span for the ADCE transition
    (no closed-form rate is available).
    """
    if regime not in ("jc", "adce"):
        raise ValueError(f"unknown regime {regime!r}")
    params.validate(cutoff)
    rho0 = hilbert.thermal_cavity_state(nbar, cutoff)
    target = {
        "jc": (hilbert.basis_state(cutoff, 3, 0), hilbert.basis_state(cutoff, 2, 1)),
        "adce": (hilbert.basis_state(cutoff, 3, 0), hilbert.basis_state(cutoff, 0, 1)),
    }[regime]
    lam_eff = None
    if eta is None:
        g_sched = CouplingSchedule.constant(params.g0)
        d_sched = DriveSchedule.constant(params.omega0)
        ham_s = DrivenHamiltonian(params, cutoff, g_sched, d_sched, "rabi")
        eta_static = spectra.refine_resonance(ham_s.static_reference(), *target)
        eta, lam_eff = spectra.floquet_resonance(
            params, cutoff, "rabi", *target, eta_static,
        )
    if duration is None:
        if regime == "jc":
            duration = 2.2 * spectra.half_transfer_time(params, 2)
        else:
            if lam_eff is None or lam_eff <= 0:
                raise ValueError(
                    "cannot size the ADCE run: no Floquet rate available "
                    "(pass an explicit duration)"
                )
            ramp_span = np.log(params.g0 / 1e-15) / (2.0 * params.g0)
            duration = 1.1 * np.pi / (2.0 * lam_eff) + ramp_span
    params_eta = params.with_eta(eta)
    ham = _build_ham("rabi", params_eta, cutoff, "ramp_on", "harmonic", eta)
    rec = dynamics.evolve(rho0, duration, ham, None, cfg,
                          pop_labels=pop_labels, label="work_extraction")
    rec.meta["regime"] = regime
    rec.meta["nbar"] = nbar
    rec.meta["eta"] = eta
    rec.meta["lambda_floquet"] = lam_eff
    rec.meta["thermal_tail_mass"] = hilbert.thermal_tail_mass(nbar, cutoff)
    return rec
