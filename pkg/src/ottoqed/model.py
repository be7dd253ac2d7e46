"""Time-dependent Jaynes-Cummings and Rabi Hamiltonians with drive schedules.

H_JC(t)   = omega a'a + (Omega_t/2) sigma_z + g_t (a sigma_+ + a' sigma_-)
H_Rabi(t) = omega a'a + (Omega_t/2) sigma_z + g_t (sigma_+ + sigma_-)(a + a')

with Omega_t = Omega_0 + eps sin(eta (t - t_ref)) and exponential coupling
ramps g_t = g0 (1 - exp[-2 g0 (t - t_start)]) (on) / g0 exp[-2 g0 (t - t_start)]
(off). All schedule derivatives are analytic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .hilbert import FockCutoff

__all__ = [
    "SystemParams",
    "CouplingSchedule",
    "DriveSchedule",
    "DrivenHamiltonian",
    "hamiltonian_jc",
    "hamiltonian_rabi",
    "dh_dt",
]


@dataclass(frozen=True)
class SystemParams:
    """Model constants, all in units of the cavity frequency omega."""

    omega0: float          # bare atomic transition frequency
    g0: float              # coupling plateau
    eps: float = 0.0       # modulation amplitude
    eta: float = 0.0       # modulation frequency
    omega: float = 1.0     # cavity frequency

    @property
    def detuning(self) -> float:
        """Bare cavity-atom detuning Delta_- = omega - Omega_0."""
        return self.omega - self.omega0

    def validate(self, cutoff: FockCutoff | None = None) -> None:
        if self.omega <= 0 or self.omega0 <= 0:
            raise ValueError("omega and omega0 must be positive")
        if self.g0 < 0 or self.eps < 0 or self.eta < 0:
            raise ValueError("g0, eps and eta must be non-negative")
        if self.eps / self.omega0 > 0.25:
            raise ValueError(
                f"perturbative drive violated: eps/omega0 = {self.eps / self.omega0:.3f} > 0.25"
            )
        if self.eps / self.omega0 > 0.1:
            warnings.warn(
                f"eps/omega0 = {self.eps / self.omega0:.3f} > 0.1; the modulation is "
                "only marginally perturbative",
                stacklevel=2,
            )
        if self.g0 / self.omega > 0.1:
            raise ValueError(
                f"weak-coupling condition violated: g0/omega = {self.g0 / self.omega:.3f} > 0.1"
            )
        if cutoff is not None:
            bound = 2.0 * self.g0 * np.sqrt(cutoff.n_max)
            if abs(self.detuning) <= bound:
                raise ValueError(
                    f"dispersive condition violated: |Delta_-| = {abs(self.detuning):.4f} "
                    f"<= 2 g0 sqrt(n_max) = {bound:.4f}"
                )

    def with_eta(self, eta: float) -> "SystemParams":
        return replace(self, eta=eta)


@dataclass(frozen=True)
class CouplingSchedule:
    """Coupling profile g_t: one of zero | constant | ramp_on | ramp_off."""

    kind: str
    g0: float = 0.0
    t_start: float = 0.0

    _KINDS = ("zero", "constant", "ramp_on", "ramp_off")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.g0 < 0:
            raise ValueError("g0 must be >= 0")

    @classmethod
    def zero(cls) -> "CouplingSchedule":
        return cls("zero")

    @classmethod
    def constant(cls, g0: float) -> "CouplingSchedule":
        return cls("constant", g0)

    @classmethod
    def ramp_on(cls, g0: float, t_start: float = 0.0) -> "CouplingSchedule":
        return cls("ramp_on", g0, t_start)

    @classmethod
    def ramp_off(cls, g0: float, t_start: float = 0.0) -> "CouplingSchedule":
        return cls("ramp_off", g0, t_start)

    def value(self, t: float) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.g0
        x = np.exp(-2.0 * self.g0 * (t - self.t_start))
        return self.g0 * (1.0 - x) if self.kind == "ramp_on" else self.g0 * x

    def derivative(self, t: float) -> float:
        if self.kind in ("zero", "constant"):
            return 0.0
        x = np.exp(-2.0 * self.g0 * (t - self.t_start))
        rate = 2.0 * self.g0**2 * x
        return rate if self.kind == "ramp_on" else -rate

    def reference(self) -> float:
        """Asymptotic coupling, used as the static-reference value."""
        return self.g0 if self.kind in ("constant", "ramp_on") else 0.0

    @property
    def is_static(self) -> bool:
        return self.kind in ("zero", "constant")


@dataclass(frozen=True)
class DriveSchedule:
    """Atomic frequency profile Omega_t: constant or harmonic."""

    kind: str
    omega0: float
    eps: float = 0.0
    eta: float = 0.0
    t_ref: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic"):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if self.kind == "harmonic" and self.eta <= 0:
            raise ValueError("harmonic drive needs eta > 0")

    @classmethod
    def constant(cls, omega0: float) -> "DriveSchedule":
        return cls("constant", omega0)

    @classmethod
    def harmonic(cls, omega0: float, eps: float, eta: float, t_ref: float = 0.0) -> "DriveSchedule":
        return cls("harmonic", omega0, eps, eta, t_ref)

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return self.omega0
        return self.omega0 + self.eps * np.sin(self.eta * (t - self.t_ref))

    def derivative(self, t: float) -> float:
        if self.kind == "constant":
            return 0.0
        return self.eps * self.eta * np.cos(self.eta * (t - self.t_ref))

    def reference(self) -> float:
        return self.omega0

    @property
    def is_static(self) -> bool:
        return self.kind == "constant" or self.eps == 0.0


class DrivenHamiltonian:
    """H(t) and dH/dt for one stroke of a given model ('jc' or 'rabi').

    Also exposes the stroke's static reference Hamiltonian (schedules replaced
    by their reference values), which dissipators and the rotating-frame
    integrator are built from.
    """

    def __init__(
        self,
        params: SystemParams,
        cutoff: FockCutoff,
        g_sched: CouplingSchedule,
        d_sched: DriveSchedule,
        model: str = "jc",
    ):
        if model not in ("jc", "rabi"):
            raise ValueError(f"unknown model {model!r}")
        self.params = params
        self.cutoff = cutoff
        self.g_sched = g_sched
        self.d_sched = d_sched
        self.model = model
        a = hilbert.annihilation(cutoff)
        sp, sm, sz = hilbert.atom_ops(cutoff)
        self.sz = sz
        self.h_free = params.omega * (a.conj().T @ a)
        if model == "jc":
            self.v_int = a @ sp + a.conj().T @ sm
        else:
            self.v_int = (sp + sm) @ (a + a.conj().T)

    def h(self, t: float) -> np.ndarray:
        return (
            self.h_free
            + 0.5 * self.d_sched.value(t) * self.sz
            + self.g_sched.value(t) * self.v_int
        )

    def dh_dt(self, t: float) -> np.ndarray:
        return (
            0.5 * self.d_sched.derivative(t) * self.sz
            + self.g_sched.derivative(t) * self.v_int
        )

    def static_reference(self) -> np.ndarray:
        return (
            self.h_free
            + 0.5 * self.d_sched.reference() * self.sz
            + self.g_sched.reference() * self.v_int
        )

    @property
    def is_static(self) -> bool:
        return self.g_sched.is_static and self.d_sched.is_static


def hamiltonian_jc(
    params: SystemParams,
    cutoff: FockCutoff,
    g_sched: CouplingSchedule,
    d_sched: DriveSchedule,
    t: float,
) -> np.ndarray:
    """Nonstationary Jaynes-Cummings Hamiltonian at time t (units of omega)."""
    return DrivenHamiltonian(params, cutoff, g_sched, d_sched, "jc").h(t)


def hamiltonian_rabi(
    params: SystemParams,
    cutoff: FockCutoff,
    g_sched: CouplingSchedule,
    d_sched: DriveSchedule,
    t: float,
) -> np.ndarray:
    """Nonstationary Rabi Hamiltonian (counter-rotating terms included)."""
    return DrivenHamiltonian(params, cutoff, g_sched, d_sched, "rabi").h(t)


def dh_dt(
    params: SystemParams,
    cutoff: FockCutoff,
    g_sched: CouplingSchedule,
    d_sched: DriveSchedule,
    t: float,
    model: str = "jc",
) -> np.ndarray:
    """Exact dH/dt from the analytic schedule derivatives."""
    return DrivenHamiltonian(params, cutoff, g_sched, d_sched, model).dh_dt(t)
