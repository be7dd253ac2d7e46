"""Microscopic Markovian master equation and fixed-step RK4 time integration.

Dissipators are built in the eigenbasis of the stroke's static Hamiltonian
(ascending energies |1>..|D>): for every pair j < k with transition frequency
D_kj = E_k - E_j > 0 the downward jump |j><k| carries weight
rate * |<j|X|k>|^2 * (n(D_kj, T) + 1) and the upward jump |k><j| the same with
n(D_kj, T), where X = a + a' for the cavity bath and sigma_+ + sigma_- for the
atom bath, and n is the Bose occupation (0 at T = 0). Rates vanish for
non-positive transition frequencies. Each jump dissipates through
D[O]rho = (2 O rho O' - rho O'O - O'O rho)/2.

Driving and dissipation are never active together (the cycle's dissipative
strokes have static Hamiltonians); evolve() rejects that combination.

Integration is fixed-step RK4. Unitary strokes propagate a factorized form of
rho (the weighted eigenvector batch of rho0) in the interaction picture of the
stroke's static reference Hamiltonian: the static phases are applied exactly
through a phase-vector recurrence and RK4 integrates only the small residual
generator, which removes the spurious RK4 amplitude decay of the highest Fock
levels on very long runs. Dissipative strokes integrate vec(rho) in the
Liouvillian eigenbasis, where the generator is elementwise (this is exactly
RK4 on vec(rho), conjugated).

Once an exponential coupling ramp has decayed to zero at machine precision the
driven generator is exactly periodic, and the composition of one half-period
of RK4 steps is a fixed linear map on the state batch. Long driven strokes
(the ADCE extraction spans ~1e5 drive periods) therefore advance by two
precomputed half-period maps applied alternately: the very same RK4 step
sequence, reassociated into matrix products. Samples then fall on the
drive-phase grid sin(eta t) = 0, where the instantaneous Hamiltonian equals
the static reference, so the instantaneous eigenbasis is the reference basis
and the classical-power integrand alternates sign exactly (its trapezoid sum
telescopes instead of aliasing).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import linear_sum_assignment

from . import hilbert, spectra
from .hilbert import FockCutoff
from .model import DrivenHamiltonian
from .thermo import StrokeRecord

__all__ = [
    "BathSpec",
    "LiouvillianSpec",
    "IntegratorConfig",
    "LeakageError",
    "TraceDriftError",
    "bose_occupation",
    "build_liouvillian",
    "rhs",
    "evolve",
]

DEGENERACY_TOL = 1e-12
TRACE_DRIFT_TOL = 1e-6
STEP_EIG_BOUND = 0.1
FACTOR_WEIGHT_TOL = 1e-14
RAMP_DEAD_TOL = 1e-15      # coupling residual treated as off below this
STROBO_MIN_HALVES = 100    # shorter driven spans integrate continuously
STROBO_MAX_SAMPLES = 20000

# drive/coupling schedule codes passed to the numba kernels
_DRIVE_CONST, _DRIVE_HARMONIC = 0, 1
_G_ZERO, _G_CONST, _G_RAMP_ON, _G_RAMP_OFF = 0, 1, 2, 3
_G_CODES = {"zero": _G_ZERO, "constant": _G_CONST, "ramp_on": _G_RAMP_ON, "ramp_off": _G_RAMP_OFF}


class LeakageError(RuntimeError):
    """Population reached the top of the truncated Fock ladder."""


class TraceDriftError(RuntimeError):
    """Trace drifted beyond tolerance without renormalization enabled."""


@dataclass(frozen=True)
class BathSpec:
    """One thermal reservoir: target 'atom' (rate Gamma) or 'cavity' (rate kappa)."""

    target: str
    rate: float
    temperature: float

    def __post_init__(self):
        if self.target not in ("atom", "cavity"):
            raise ValueError(f"bath target must be 'atom' or 'cavity', got {self.target!r}")
        if self.rate < 0:
            raise ValueError("bath rate must be >= 0")
        if self.temperature < 0:
            raise ValueError("bath temperature must be >= 0")


def bose_occupation(delta_e: float, temperature: float) -> float:
    """Mean thermal occupation 1/(exp(dE/T) - 1); zero at T = 0."""
    if temperature <= 0.0:
        return 0.0
    return 1.0 / np.expm1(delta_e / temperature)


@dataclass
class LiouvillianSpec:
    """Eigenbasis dissipator data for a static Hamiltonian.

    jump_weights[b][a, k] is the weight of the jump operator |a><k| for bath b
    (nonzero only between non-degenerate eigenlevels); out_rates[b][k] is the
    summed outflow rate from level k.
    """

    energies: np.ndarray
    vectors: np.ndarray
    baths: tuple[BathSpec, ...]
    jump_weights: list[np.ndarray]
    out_rates: list[np.ndarray]
    h_static: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def apply_eigenbasis(self, bath_index: int, rho_e: np.ndarray) -> np.ndarray:
        """L_b[rho] for rho expressed in the eigenbasis."""
        j = self.jump_weights[bath_index]
        g = self.out_rates[bath_index]
        out = -0.5 * (g[:, None] + g[None, :]) * rho_e
        out[np.diag_indices(self.dim)] += j @ np.real(np.diag(rho_e))
        return out

    def apply(self, bath_index: int, rho: np.ndarray) -> np.ndarray:
        """L_b[rho] for rho in the product basis."""
        v = self.vectors
        rho_e = v.conj().T @ rho @ v
        return v @ self.apply_eigenbasis(bath_index, rho_e) @ v.conj().T

    def heat_rate(self, bath_index: int, rho_e: np.ndarray) -> float:
        """Tr[L_b[rho] H] from eigenbasis populations."""
        p = np.real(np.diag(rho_e))
        j = self.jump_weights[bath_index]
        g = self.out_rates[bath_index]
        return float(self.energies @ (j @ p - g * p))


def build_liouvillian(
    h_static: np.ndarray,
    baths: list[BathSpec] | tuple[BathSpec, ...],
    cutoff: FockCutoff,
) -> LiouvillianSpec:
    """Microscopic Liouvillian in the eigenbasis of the static Hamiltonian."""
    es = spectra.eigendecompose(h_static)
    e, v = es.energies, es.vectors
    d = e.shape[0]
    a = hilbert.annihilation(cutoff)
    sp, sm, _ = hilbert.atom_ops(cutoff)
    coupling_ops = {"cavity": a + a.conj().T, "atom": sp + sm}
    weights, outs = [], []
    for bath in baths:
        x = v.conj().T @ coupling_ops[bath.target] @ v
        j = np.zeros((d, d))
        for k in range(d):
            for jj in range(k):
                de = e[k] - e[jj]
                if de <= DEGENERACY_TOL:
                    continue  # degenerate pairs carry no dissipation
                w = bath.rate * abs(x[jj, k]) ** 2
                if w == 0.0:
                    continue
                n = bose_occupation(de, bath.temperature)
                j[jj, k] += w * (n + 1.0)
                j[k, jj] += w * n
        weights.append(j)
        outs.append(j.sum(axis=0))
    return LiouvillianSpec(e, v, tuple(baths), weights, outs, h_static)


def rhs(
    t: float,
    rho: np.ndarray,
    ham: DrivenHamiltonian,
    liouv: LiouvillianSpec | None = None,
) -> np.ndarray:
    """Master-equation right-hand side -i[H(t), rho] + sum_b L_b[rho]."""
    h = ham.h(t)
    out = -1j * (h @ rho - rho @ h)
    if liouv is not None:
        for b in range(len(liouv.baths)):
            out = out + liouv.apply(b, rho)
    return out


@dataclass
class IntegratorConfig:
    """Fixed-step RK4 configuration.

    step=None selects the default: for driven strokes an integer subdivision
    of the drive half-period below min(2pi/(200 eta), 0.1/max|eig H|); for
    undriven strokes min(0.02/max bath rate, 0.05, 0.1/max|eig H|). An
    explicit step must still satisfy step * max|eig H(t)| <= 0.1.
    """

    step: float | None = None
    sample_every: int = 1
    renormalize_trace: bool = False
    leakage_tol: float = 1e-4
    store_states_every: int = 0   # in samples; 0 stores only the endpoints
    stroboscopic: bool = True     # allow the periodic-map fast path
    method: str = "rk4_fixed"

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be > 0")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.method != "rk4_fixed":
            raise ValueError(f"unsupported integrator method {self.method!r}")


# ---------------------------------------------------------------------------
# numba kernels (interaction picture, factorized state batch)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _drive_residual(t, d_kind, eps, eta):
    if d_kind == 1:
        return 0.5 * eps * np.sin(eta * t)
    return 0.0


@njit(cache=True)
def _drive_residual_dot(t, d_kind, eps, eta):
    if d_kind == 1:
        return 0.5 * eps * eta * np.cos(eta * t)
    return 0.0


@njit(cache=True)
def _coupling_residual(t, g_kind, g0):
    if g_kind == 2:  # ramp_on, reference g0
        return -g0 * np.exp(-2.0 * g0 * t)
    if g_kind == 3:  # ramp_off, reference 0
        return g0 * np.exp(-2.0 * g0 * t)
    return 0.0


@njit(cache=True)
def _coupling_dot(t, g_kind, g0):
    if g_kind == 2:
        return 2.0 * g0 * g0 * np.exp(-2.0 * g0 * t)
    if g_kind == 3:
        return -2.0 * g0 * g0 * np.exp(-2.0 * g0 * t)
    return 0.0


@njit(cache=True)
def _apply_residual(mz, mv, c1, c2, pv, x):
    """-i e^{iEt} M(t) e^{-iEt} x with M = c1 mz + c2 mv, phases pv = e^{iEt}."""
    y = pv.conj().reshape(-1, 1) * x
    y = (c1 * mz + c2 * mv) @ y
    return -1j * (pv.reshape(-1, 1) * y)


@njit(cache=True)
def _work_rate(mz, mv, qw, pv, phi_i, t, d_kind, eps, eta, g_kind, g0):
    """Tr[rho dH/dt] for the factorized state at time t (eigenbasis coords)."""
    c1d = _drive_residual_dot(t, d_kind, eps, eta)
    c2d = _coupling_dot(t, g_kind, g0)
    phi = pv.conj().reshape(-1, 1) * phi_i
    y = (c1d * mz + c2d * mv) @ phi
    s = 0.0
    for k in range(phi.shape[1]):
        z = 0.0
        for a in range(phi.shape[0]):
            z += (np.conj(phi[a, k]) * y[a, k]).real
        s += qw[k] * z
    return s


@njit(cache=True)
def _ip_rk4_chunk(
    phi_i, pv, energies, mz, mv, qw,
    t0, dt, nsteps,
    d_kind, eps, eta, g_kind, g0,
    wacc,
):
    """Advance nsteps of interaction-picture RK4; returns (phi_i, pv, wacc).

    wacc accumulates the work integral with a per-step trapezoid rule.
    """
    uf = np.exp(1j * energies * dt)
    uh = np.exp(1j * energies * (0.5 * dt))
    r_prev = _work_rate(mz, mv, qw, pv, phi_i, t0, d_kind, eps, eta, g_kind, g0)
    for i in range(nsteps):
        t = t0 + i * dt
        c1 = _drive_residual(t, d_kind, eps, eta)
        c2 = _coupling_residual(t, g_kind, g0)
        k1 = _apply_residual(mz, mv, c1, c2, pv, phi_i)
        th = t + 0.5 * dt
        pvh = pv * uh
        c1 = _drive_residual(th, d_kind, eps, eta)
        c2 = _coupling_residual(th, g_kind, g0)
        k2 = _apply_residual(mz, mv, c1, c2, pvh, phi_i + (0.5 * dt) * k1)
        k3 = _apply_residual(mz, mv, c1, c2, pvh, phi_i + (0.5 * dt) * k2)
        tf = t + dt
        pvf = pv * uf
        c1 = _drive_residual(tf, d_kind, eps, eta)
        c2 = _coupling_residual(tf, g_kind, g0)
        k4 = _apply_residual(mz, mv, c1, c2, pvf, phi_i + dt * k3)
        phi_i = phi_i + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        pv = pvf
        r_new = _work_rate(mz, mv, qw, pvf, phi_i, tf, d_kind, eps, eta, g_kind, g0)
        wacc += 0.5 * dt * (r_prev + r_new)
        r_prev = r_new
    return phi_i, pv, wacc


@njit(cache=True)
def _strobo_chunk(
    phi, s_even, s_odd, k_half, n_halves,
    qw, szdiag, c_amp, half,
    wc, pc_prev,
):
    """Advance n_halves half-period maps from global half-index k_half.

    phi holds lab-frame eigenbasis coordinates at a drive zero crossing.
    Accumulates the classical-power trapezoid: the integrand at crossing k is
    (-1)^k * c_amp * sum_a szdiag[a] pop_a. Returns (phi, k_half, wc, pc_prev).
    """
    d, ncols = phi.shape
    for _ in range(n_halves):
        if k_half % 2 == 0:
            phi = s_even @ phi
        else:
            phi = s_odd @ phi
        k_half += 1
        acc = 0.0
        for a in range(d):
            pop = 0.0
            for c in range(ncols):
                pop += qw[c] * (phi[a, c].real ** 2 + phi[a, c].imag ** 2)
            acc += szdiag[a] * pop
        sign = 1.0 if k_half % 2 == 0 else -1.0
        pc = sign * c_amp * acc
        wc += 0.5 * half * (pc_prev + pc)
        pc_prev = pc
    return phi, k_half, wc, pc_prev


def _lab_frame_map(
    energies, mz, mv, d_kind, eps, eta, g_kind, g0, t_start, dt, nsteps,
) -> np.ndarray:
    """Linear map on lab-frame eigenbasis coordinates over [t_start, t_start + nsteps dt].

    Composition of the same interaction-picture RK4 steps applied to the
    identity batch; for a periodic generator the result depends only on
    t_start mod the drive period.
    """
    d = energies.shape[0]
    pv0 = np.exp(1j * energies * t_start)
    phi_i = pv0[:, None] * np.eye(d, dtype=complex)
    phi_i, pv, _ = _ip_rk4_chunk(
        np.ascontiguousarray(phi_i), pv0.copy(), energies, mz, mv, np.zeros(d),
        t_start, dt, nsteps, d_kind, eps, eta, g_kind, g0, 0.0,
    )
    return pv.conj()[:, None] * phi_i


# ---------------------------------------------------------------------------
# step selection
# ---------------------------------------------------------------------------


def _stroke_emax(ham: DrivenHamiltonian) -> float:
    """Bound on |eigenvalues of H(t)| over the stroke (drive extremes)."""
    emax = 0.0
    d = ham.d_sched
    omegas = {d.reference()}
    if d.kind == "harmonic":
        omegas |= {d.omega0 + d.eps, d.omega0 - d.eps}
    gs = {ham.g_sched.reference(), 0.0}
    for om in omegas:
        for g in gs:
            h = ham.h_free + 0.5 * om * ham.sz + g * ham.v_int
            emax = max(emax, float(np.max(np.abs(np.linalg.eigvalsh(h)))))
    return emax


def _resolve_step(
    ham: DrivenHamiltonian,
    liouv: LiouvillianSpec | None,
    cfg: IntegratorConfig,
) -> tuple[float, int]:
    """Return (dt, steps_per_half_period); the latter is 0 for undriven strokes."""
    emax = _stroke_emax(ham)
    cap_inv = STEP_EIG_BOUND / emax
    if cfg.step is not None:
        if cfg.step * emax > STEP_EIG_BOUND * (1 + 1e-12):
            raise ValueError(
                f"step {cfg.step} violates step*max|eig H| <= {STEP_EIG_BOUND} "
                f"(max|eig| = {emax:.3f})"
            )
        return cfg.step, 0
    if liouv is not None:
        max_rate = max((b.rate for b in liouv.baths), default=0.0)
        cap = min(0.05, cap_inv)
        if max_rate > 0:
            cap = min(cap, 0.02 / max_rate)
        return cap, 0
    if ham.d_sched.kind == "harmonic" and ham.d_sched.eps > 0:
        eta = ham.d_sched.eta
        cap = min(2.0 * np.pi / (200.0 * eta), cap_inv)
        half = np.pi / eta
        m = int(np.ceil(half / cap))
        return half / m, m
    return min(0.05, cap_inv), 0


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------


def _factorize(rho0: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """rho0 = cols diag(q) cols'; drops numerically zero weights."""
    q, cols = np.linalg.eigh(0.5 * (rho0 + rho0.conj().T))
    keep = q > FACTOR_WEIGHT_TOL
    dropped = float(np.clip(q[~keep], 0.0, None).sum())
    return q[keep].copy(), np.ascontiguousarray(cols[:, keep]), dropped


def _match_labels(prev_vecs, prev_labels, vecs):
    """Overlap-maximizing label inheritance; Hungarian only on collisions."""
    overlap = np.abs(prev_vecs.conj().T @ vecs)
    pick = np.argmax(overlap, axis=0)
    if len(np.unique(pick)) == vecs.shape[1]:
        return prev_labels[pick], float(overlap[pick, np.arange(vecs.shape[1])].min())
    rows, cols = linear_sum_assignment(-overlap)
    labels = np.empty(vecs.shape[1], dtype=int)
    labels[cols] = prev_labels[rows]
    return labels, float(overlap[rows, cols].min())


class _Recorder:
    """Grows per-sample observable arrays; shared by all evolution paths."""

    FIELDS = ("times", "u", "s", "p_inst", "w", "q_a", "q_f", "pc_inst", "wc",
              "leakage", "trace_err", "min_eig")

    def __init__(self, pop_labels):
        for f in self.FIELDS:
            setattr(self, f, [])
        self.pops = {lab: [] for lab in pop_labels}
        self.states: dict[int, np.ndarray] = {}
        self.n = 0

    def push(self, **kw):
        for f in self.FIELDS:
            getattr(self, f).append(kw[f])
        for lab, val in kw["pops"].items():
            self.pops[lab].append(val)
        self.n += 1

    def arrays(self):
        out = {f: np.asarray(getattr(self, f)) for f in self.FIELDS}
        out["pops"] = {lab: np.asarray(v) for lab, v in self.pops.items()}
        return out


def evolve(
    rho0: np.ndarray,
    duration: float,
    ham: DrivenHamiltonian,
    liouv: LiouvillianSpec | None,
    cfg: IntegratorConfig,
    pop_labels: tuple[str, ...] = (),
    label: str = "stroke",
) -> StrokeRecord:
    """Integrate the master equation over [0, duration] and record observables.

    Strokes run on local time: schedules must use t_start = t_ref = 0. The
    sample grid is every cfg.sample_every integrator steps (the last step is
    always sampled; the actual duration rounds up to a whole number of steps,
    and to a whole number of drive half-periods on the stroboscopic path).
    """
    hilbert.validate_density_matrix(rho0)
    if liouv is not None and not ham.is_static:
        raise ValueError(
            "driving and dissipation cannot be active in the same stroke; "
            "the master equation is built for a static Hamiltonian"
        )
    if ham.g_sched.t_start != 0.0 or ham.d_sched.t_ref != 0.0:
        raise ValueError("evolve uses local stroke time; schedules must start at 0")
    if duration <= 0:
        raise ValueError("duration must be > 0")

    dt, m_half = _resolve_step(ham, liouv, cfg)
    rec = _Recorder(pop_labels)
    pop_idx = {}
    for lab in pop_labels:
        n, s = hilbert.parse_state_label(lab)
        if n > ham.cutoff.n_max:
            raise ValueError(f"population label {lab!r} outside the Fock cutoff")
        pop_idx[lab] = 2 * n + s

    if liouv is None:
        meta = _evolve_unitary(rho0, duration, dt, m_half, ham, cfg, pop_idx, rec)
        unitary = True
    else:
        meta = _evolve_dissipative(rho0, duration, dt, ham, liouv, cfg, pop_idx, rec)
        unitary = False

    arrays = rec.arrays()
    meta.update(
        {
            "dt": dt,
            "m_half": m_half,
            "eta": ham.d_sched.eta if ham.d_sched.kind == "harmonic" else 0.0,
            "model": ham.model,
            "final_trace_err": float(arrays["trace_err"][-1]),
            "max_leakage": float(arrays["leakage"].max()),
            "sample_every": cfg.sample_every,
        }
    )
    last = rec.n - 1
    return StrokeRecord(
        label=label,
        times=arrays["times"],
        u=arrays["u"],
        s=arrays["s"],
        p_inst=arrays["p_inst"],
        w=arrays["w"],
        q_a=arrays["q_a"],
        q_f=arrays["q_f"],
        pc_inst=arrays["pc_inst"],
        wc=arrays["wc"],
        pops=arrays["pops"],
        leakage=arrays["leakage"],
        trace_err=arrays["trace_err"],
        min_eig=arrays["min_eig"],
        rho_start=rho0.copy(),
        rho_end=rec.states[last],
        states=rec.states,
        unitary=unitary,
        meta=meta,
    )


def _check_sample(t, leak_val, tr_err, cfg):
    if leak_val > cfg.leakage_tol:
        raise LeakageError(
            f"top-Fock-layer population {leak_val:.3e} exceeds leakage_tol "
            f"{cfg.leakage_tol:.1e} at t = {t:.3f}; increase n_max"
        )
    if not cfg.renormalize_trace and tr_err > TRACE_DRIFT_TOL:
        raise TraceDriftError(
            f"trace drift {tr_err:.3e} exceeds {TRACE_DRIFT_TOL:.1e} at t = {t:.3f} "
            "with renormalize_trace disabled; reduce the step"
        )


def _ramp_dead_time(g_sched) -> float:
    """Time after which the ramp residual |g_t - g_ref| < RAMP_DEAD_TOL."""
    if g_sched.kind in ("zero", "constant") or g_sched.g0 == 0.0:
        return 0.0
    return float(np.log(g_sched.g0 / RAMP_DEAD_TOL) / (2.0 * g_sched.g0))


def _evolve_unitary(rho0, duration, dt, m_half, ham, cfg, pop_idx, rec):
    qw, cols, dropped = _factorize(rho0)
    h_ref = ham.static_reference()
    energies, vecs = np.linalg.eigh(h_ref)
    mz = np.ascontiguousarray(vecs.conj().T @ ham.sz @ vecs)
    mv = np.ascontiguousarray(vecs.conj().T @ ham.v_int @ vecs)
    szdiag_ref = np.real(np.diag(mz)).copy()

    d_sched, g_sched = ham.d_sched, ham.g_sched
    d_kind = _DRIVE_HARMONIC if (d_sched.kind == "harmonic" and d_sched.eps > 0) else _DRIVE_CONST
    g_kind = _G_CODES[g_sched.kind]
    driven = d_kind == _DRIVE_HARMONIC

    # stroboscopic dispatch: periodic generator and a long enough tail
    half = np.pi / d_sched.eta if driven else 0.0
    use_strobo = False
    t_switch = 0.0
    n_halves = 0
    if driven and cfg.stroboscopic and m_half > 0 and g_kind != _G_RAMP_OFF:
        k_dead = int(np.ceil(_ramp_dead_time(g_sched) / half))
        tail_halves = int(np.floor(duration / half + 1e-9)) - k_dead
        if tail_halves >= STROBO_MIN_HALVES:
            use_strobo = True
            t_switch = k_dead * half
            n_halves = int(np.ceil(duration / half - 1e-9)) - k_dead

    n_steps_a = int(np.ceil((t_switch if use_strobo else duration) / dt - 1e-9))
    state = {
        "phi_i": np.ascontiguousarray(vecs.conj().T.astype(complex) @ cols),
        "pv": np.ones(energies.shape[0], dtype=complex),
        "wacc": 0.0,
        "prev_es": None,
        "track_min": 1.0,
    }
    sqrt_q = np.sqrt(qw)

    def sample_full(t, step_index):
        """Full observable set from the current factorized state (phase A)."""
        phi_lab = state["pv"].conj()[:, None] * state["phi_i"]
        psi = vecs @ phi_lab
        col_norm2 = np.real(np.sum(psi.conj() * psi, axis=0))
        tr = float(qw @ col_norm2) + dropped
        tr_err = abs(tr - 1.0)
        if cfg.renormalize_trace:
            scale = np.sqrt(col_norm2)
            psi = psi / scale[None, :]
            state["phi_i"] = state["phi_i"] / scale[None, :]
        rho = (psi * qw) @ psi.conj().T
        h_t = ham.h(t)
        dh_t = ham.dh_dt(t)
        u = float(np.real(np.sum(rho.T * h_t)))
        p_inst = float(np.real(np.sum(rho.T * dh_t)))
        gram = (sqrt_q[:, None] * (psi.conj().T @ psi)) * sqrt_q[None, :]
        ev = np.linalg.eigvalsh(gram)
        pos = np.clip(ev.real, 0.0, None)
        pos = pos[pos > 0]
        s_val = float(-(pos * np.log(pos)).sum())
        diag = np.real(np.diag(rho))
        es = spectra.eigendecompose(h_t, None)
        if state["prev_es"] is not None:
            labels, match = _match_labels(state["prev_es"].vectors, state["prev_es"].labels, es.vectors)
            es.labels = labels
            state["track_min"] = min(state["track_min"], match)
        state["prev_es"] = es
        rnn = np.real(np.einsum("ia,ij,ja->a", es.vectors.conj(), rho, es.vectors))
        den = np.real(np.einsum("ia,ij,ja->a", es.vectors.conj(), dh_t, es.vectors))
        pc = float(rnn @ den)
        return rho, dict(
            times=t, u=u, s=s_val, p_inst=p_inst, w=state["wacc"],
            q_a=0.0, q_f=0.0, pc_inst=pc, wc=0.0,
            leakage=float(diag[-4:].sum()), trace_err=tr_err,
            min_eig=float(min(ev.min(), 0.0)),
            pops={lab: float(diag[i]) for lab, i in pop_idx.items()},
        )

    def finish_sample(t, fields, rho):
        if rec.n > 0:
            dt_s = t - rec.times[-1]
            fields["wc"] = rec.wc[-1] + 0.5 * dt_s * (rec.pc_inst[-1] + fields["pc_inst"])
        rec.push(**fields)
        _check_sample(t, fields["leakage"], fields["trace_err"], cfg)
        idx = rec.n - 1
        if cfg.store_states_every and idx % cfg.store_states_every == 0:
            rec.states[idx] = rho

    # ---- phase A: continuous interaction-picture RK4 ----
    rho, fields = sample_full(0.0, 0)
    finish_sample(0.0, fields, rho)
    step = 0
    while step < n_steps_a:
        nxt = min(step + cfg.sample_every, n_steps_a)
        state["phi_i"], state["pv"], state["wacc"] = _ip_rk4_chunk(
            state["phi_i"], state["pv"], energies, mz, mv, qw,
            step * dt, dt, nxt - step,
            d_kind, d_sched.eps, d_sched.eta, g_kind, g_sched.g0,
            state["wacc"],
        )
        step = nxt
        rho, fields = sample_full(step * dt, step)
        finish_sample(step * dt, fields, rho)
    last_rho = rho

    # ---- phase B: half-period stroboscopic maps ----
    if use_strobo:
        k0 = int(round(t_switch / half))
        map_here = _lab_frame_map(
            energies, mz, mv, d_kind, d_sched.eps, d_sched.eta, _G_CONST,
            g_sched.g0, t_switch, dt, m_half,
        )
        map_next = _lab_frame_map(
            energies, mz, mv, d_kind, d_sched.eps, d_sched.eta, _G_CONST,
            g_sched.g0, t_switch + half, dt, m_half,
        )
        s_even, s_odd = (map_here, map_next) if k0 % 2 == 0 else (map_next, map_here)
        phi_lab = np.ascontiguousarray(state["pv"].conj()[:, None] * state["phi_i"])
        u_switch = rec.u[-1]
        w_switch = state["wacc"]
        c_amp = 0.5 * d_sched.eps * d_sched.eta
        wc_acc = rec.wc[-1]
        pc_prev = rec.pc_inst[-1]
        j_halves = max(1, int(np.ceil(n_halves / STROBO_MAX_SAMPLES)))
        k_half = k0
        done = 0
        mz_c = mz  # full sigma_z matrix for <sigma_z> at samples
        while done < n_halves:
            nh = min(j_halves, n_halves - done)
            phi_lab, k_half, wc_acc, pc_prev = _strobo_chunk(
                phi_lab, s_even, s_odd, k_half, nh,
                qw, szdiag_ref, c_amp, half, wc_acc, pc_prev,
            )
            done += nh
            t = (k_half) * half
            pop_ref = (np.abs(phi_lab) ** 2) @ qw
            col_norm2 = np.real(np.sum(phi_lab.conj() * phi_lab, axis=0))
            tr = float(qw @ col_norm2) + dropped
            tr_err = abs(tr - 1.0)
            if cfg.renormalize_trace:
                scale = np.sqrt(col_norm2)
                phi_lab = phi_lab / scale[None, :]
            u_val = float(energies @ pop_ref)
            w_val = w_switch + (u_val - u_switch)
            sign = 1.0 if k_half % 2 == 0 else -1.0
            y = mz_c @ phi_lab
            sz_full = float(np.real(np.sum((phi_lab.conj() * y) @ qw)))
            p_inst_val = sign * c_amp * sz_full
            gram = (sqrt_q[:, None] * (phi_lab.conj().T @ phi_lab)) * sqrt_q[None, :]
            ev = np.linalg.eigvalsh(gram)
            pos = np.clip(ev.real, 0.0, None)
            pos = pos[pos > 0]
            s_val = float(-(pos * np.log(pos)).sum())
            psi = vecs @ phi_lab
            diag = np.real((np.abs(psi) ** 2) @ qw)
            fields = dict(
                times=t, u=u_val, s=s_val, p_inst=p_inst_val, w=w_val,
                q_a=0.0, q_f=0.0, pc_inst=pc_prev, wc=wc_acc,
                leakage=float(diag[-4:].sum()), trace_err=tr_err,
                min_eig=float(min(ev.min(), 0.0)),
                pops={lab: float(diag[i]) for lab, i in pop_idx.items()},
            )
            rec.push(**fields)
            _check_sample(t, fields["leakage"], fields["trace_err"], cfg)
            idx = rec.n - 1
            if cfg.store_states_every and idx % cfg.store_states_every == 0:
                rec.states[idx] = (psi * qw) @ psi.conj().T

        last_rho = (psi * qw) @ psi.conj().T

    rec.states[0] = rho0.copy()
    rec.states[rec.n - 1] = last_rho
    return {
        "eigentrack_min_match": state["track_min"],
        "dropped_weight": dropped,
        "stroboscopic": use_strobo,
        "t_switch": t_switch if use_strobo else None,
        "strobo_halves": n_halves if use_strobo else 0,
    }


def _evolve_dissipative(rho0, duration, dt, ham, liouv, cfg, pop_idx, rec):
    d = rho0.shape[0]
    e, v = liouv.energies, liouv.vectors
    nsteps = max(1, int(np.ceil(duration / dt - 1e-9)))
    rho_e = v.conj().T @ rho0 @ v
    iw = -1j * (e[:, None] - e[None, :])
    n_baths = len(liouv.baths)
    bath_pos = {b.target: i for i, b in enumerate(liouv.baths)}

    def rhs_e(r):
        out = iw * r
        for b in range(n_baths):
            out += liouv.apply_eigenbasis(b, r)
        return out

    qacc = np.zeros(n_baths)
    qdot_prev = np.array([liouv.heat_rate(b, rho_e) for b in range(n_baths)])

    def sample(step):
        nonlocal rho_e
        t = step * dt
        rho_e = 0.5 * (rho_e + rho_e.conj().T)
        tr = float(np.trace(rho_e).real)
        tr_err = abs(tr - 1.0)
        if cfg.renormalize_trace:
            rho_e = rho_e / tr
        rho = v @ rho_e @ v.conj().T
        ev = np.linalg.eigvalsh(rho_e)
        pos = np.clip(ev.real, 0.0, None)
        pos = pos[pos > 0]
        diag = np.real(np.diag(rho))
        fields = dict(
            times=t,
            u=float(e @ np.real(np.diag(rho_e))),
            s=float(-(pos * np.log(pos)).sum()),
            p_inst=0.0,
            w=0.0,
            q_a=qacc[bath_pos["atom"]] if "atom" in bath_pos else 0.0,
            q_f=qacc[bath_pos["cavity"]] if "cavity" in bath_pos else 0.0,
            pc_inst=0.0,
            wc=0.0,
            leakage=float(diag[-4:].sum()),
            trace_err=tr_err,
            min_eig=float(ev.min()),
            pops={lab: float(diag[i]) for lab, i in pop_idx.items()},
        )
        rec.push(**fields)
        _check_sample(t, fields["leakage"], tr_err, cfg)
        idx = rec.n - 1
        if cfg.store_states_every and idx % cfg.store_states_every == 0:
            rec.states[idx] = rho
        return rho

    rho = sample(0)
    for step in range(1, nsteps + 1):
        k1 = rhs_e(rho_e)
        k2 = rhs_e(rho_e + 0.5 * dt * k1)
        k3 = rhs_e(rho_e + 0.5 * dt * k2)
        k4 = rhs_e(rho_e + dt * k3)
        rho_e = rho_e + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        qdot = np.array([liouv.heat_rate(b, rho_e) for b in range(n_baths)])
        qacc += 0.5 * dt * (qdot_prev + qdot)
        qdot_prev = qdot
        if step % cfg.sample_every == 0 or step == nsteps:
            rho = sample(step)

    rec.states[0] = rho0.copy()
    rec.states[rec.n - 1] = rho
    return {"eigentrack_min_match": 1.0, "stroboscopic": False}
