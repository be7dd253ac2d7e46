"""Thermodynamic functionals over recorded trajectories.

Work follows W = int Tr[rho dH/dt] dt, heat per bath Q_b = int Tr[L_b[rho] H] dt,
internal energy U = Tr[rho H], entropy S = -Tr[rho ln rho]. The average quantum
power is W(t)/(t - t0); the average classical power replaces the integrand by
the population-weighted instantaneous level motion sum_n rho_nn dE_n/dt
(Hellmann-Feynman), which drops the coherence contributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StrokeRecord",
    "IntegrationMismatchError",
    "internal_energy",
    "entropy",
    "work",
    "heat",
    "avg_quantum_power",
    "avg_classical_power",
    "avg_quantum_power_series",
    "avg_classical_power_series",
    "amplification_estimate",
    "first_law_residual",
]

FIRST_LAW_TOL = 1e-4
ENERGY_IMAG_TOL = 1e-10


class IntegrationMismatchError(RuntimeError):
    """Work integral disagrees with U(t) - U(start) on a unitary stroke."""


@dataclass
class StrokeRecord:
    """Sampled time series of one stroke.

    All arrays share the sample grid ``times`` (local time, 0 at stroke start).
    ``w``, ``q_a``, ``q_f`` are cumulative integrals accumulated on the
    integrator step grid; ``wc`` is the cumulative classical-work integral
    accumulated on the sample grid (it needs the instantaneous eigenbasis).
    ``states`` holds optionally thinned density-matrix snapshots by sample
    index.
    """

    label: str
    times: np.ndarray
    u: np.ndarray
    s: np.ndarray
    p_inst: np.ndarray
    w: np.ndarray
    q_a: np.ndarray
    q_f: np.ndarray
    pc_inst: np.ndarray
    wc: np.ndarray
    pops: dict[str, np.ndarray]
    leakage: np.ndarray
    trace_err: np.ndarray
    min_eig: np.ndarray
    rho_start: np.ndarray
    rho_end: np.ndarray
    states: dict[int, np.ndarray] = field(default_factory=dict)
    unitary: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def delta_u(self) -> float:
        return float(self.u[-1] - self.u[0])

    def truncate(self, idx: int) -> "StrokeRecord":
        """Record restricted to samples [0, idx] (state snapshots included)."""
        if not 0 <= idx < len(self.times):
            raise IndexError(f"sample index {idx} out of range")
        if idx not in self.states:
            raise KeyError(f"no stored state at sample {idx}; cannot truncate there")
        pops = {k: v[: idx + 1] for k, v in self.pops.items()}
        states = {i: r for i, r in self.states.items() if i <= idx}
        return StrokeRecord(
            label=self.label,
            times=self.times[: idx + 1],
            u=self.u[: idx + 1],
            s=self.s[: idx + 1],
            p_inst=self.p_inst[: idx + 1],
            w=self.w[: idx + 1],
            q_a=self.q_a[: idx + 1],
            q_f=self.q_f[: idx + 1],
            pc_inst=self.pc_inst[: idx + 1],
            wc=self.wc[: idx + 1],
            pops=pops,
            leakage=self.leakage[: idx + 1],
            trace_err=self.trace_err[: idx + 1],
            min_eig=self.min_eig[: idx + 1],
            rho_start=self.rho_start,
            rho_end=self.states[idx],
            states=states,
            unitary=self.unitary,
            meta=dict(self.meta),
        )


def internal_energy(rho: np.ndarray, h: np.ndarray) -> float:
    """U = Tr[rho H]; rejects a non-negligible imaginary residue."""
    if rho.shape != h.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {h.shape}")
    val = complex(np.sum(rho.T * h))
    if abs(val.imag) > ENERGY_IMAG_TOL * max(1.0, abs(val.real)):
        raise ValueError(f"Tr[rho H] has imaginary residue {val.imag:.3e}")
    return float(val.real)


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy -sum lambda ln lambda with 0 ln 0 = 0."""
    ev = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    ev = np.clip(ev.real, 0.0, None)
    ev = ev[ev > 0.0]
    return float(-(ev * np.log(ev)).sum())


def work(record: StrokeRecord, check_tol: float = FIRST_LAW_TOL) -> np.ndarray:
    """Cumulative work series; cross-checked against U(t) - U(0) when unitary."""
    if record.unitary:
        mismatch = float(np.max(np.abs(record.w - (record.u - record.u[0]))))
        if mismatch > check_tol:
            raise IntegrationMismatchError(
                f"work integral deviates from U(t)-U(0) by {mismatch:.3e} "
                f"(> {check_tol:.1e}); reduce the integrator step"
            )
    return record.w


def heat(record: StrokeRecord, bath: str) -> np.ndarray:
    """Cumulative heat from the atom or cavity bath over the stroke."""
    if bath == "atom":
        return record.q_a
    if bath == "cavity":
        return record.q_f
    raise ValueError(f"unknown bath {bath!r} (expected 'atom' or 'cavity')")


def _at_time(record: StrokeRecord, t: float) -> int:
    i = int(np.argmin(np.abs(record.times - t)))
    if abs(record.times[i] - t) > 1e-9 + 1e-9 * abs(t):
        raise ValueError(f"t={t} is not a sample time (nearest {record.times[i]})")
    return i


def avg_quantum_power(record: StrokeRecord, t: float) -> float:
    """P_av(t) = W(t) / (t - t_start); undefined at the stroke start."""
    i = _at_time(record, t)
    if i == 0:
        raise ValueError("average power undefined at the stroke start")
    return float(record.w[i] / (record.times[i] - record.times[0]))


def avg_classical_power(record: StrokeRecord, t: float) -> float:
    """Classical analogue of avg_quantum_power from level motion only."""
    if record.meta.get("eigentrack_min_match", 1.0) < 0.5:
        raise RuntimeError(
            "instantaneous-eigenbasis label tracking became ambiguous during "
            f"this stroke (worst overlap {record.meta['eigentrack_min_match']:.3f})"
        )
    i = _at_time(record, t)
    if i == 0:
        raise ValueError("average power undefined at the stroke start")
    return float(record.wc[i] / (record.times[i] - record.times[0]))


def avg_quantum_power_series(record: StrokeRecord) -> np.ndarray:
    """P_av at every sample; the t -> t_start limit is the instantaneous power."""
    dt = record.times - record.times[0]
    out = np.empty_like(record.w)
    out[0] = record.p_inst[0]
    out[1:] = record.w[1:] / dt[1:]
    return out


def avg_classical_power_series(record: StrokeRecord) -> np.ndarray:
    dt = record.times - record.times[0]
    out = np.empty_like(record.wc)
    out[0] = record.pc_inst[0]
    out[1:] = record.wc[1:] / dt[1:]
    return out


def amplification_estimate(p_plus: float, p_minus: float, gap: float) -> float:
    """Dressed-doublet field-amplification bookkeeping (p_+ - p_-)(E_+ - E_-)."""
    for p in (p_plus, p_minus):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"population {p} outside [0, 1]")
    return (p_plus - p_minus) * gap


def first_law_residual(record: StrokeRecord) -> float:
    """Delta U - W - Q_a - Q_f at the end of the stroke."""
    return float(record.delta_u() - record.w[-1] - record.q_a[-1] - record.q_f[-1])
