"""Truncated joint Hilbert space of one two-level atom and one cavity mode.

Conventions used everywhere in this package:

* units: hbar = k_B = 1 and the cavity frequency omega = 1, so energies are
  in units of hbar*omega, times in 1/omega, rates and temperatures likewise;
* basis ordering: joint index i = 2*n + s with the photon number n and the
  atomic level s (0 = g, 1 = e), so the joint dimension is 2*(n_max + 1);
* operators are plain complex numpy arrays on the joint space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FockCutoff",
    "annihilation",
    "creation",
    "number_op",
    "atom_ops",
    "identity",
    "basis_state",
    "parse_state_label",
    "ground_state",
    "thermal_tail_mass",
    "thermal_cavity_state",
    "thermal_atom_population",
    "atom_thermal_mixture",
    "density_checks",
    "validate_density_matrix",
    "top_layer_population",
]

# Density-matrix sanity tolerances (trace bound matches the integrator's
# drift abort threshold).
TOL_HERM = 1e-9
TOL_TRACE = 1e-6
TOL_POS = 1e-8


@dataclass(frozen=True)
class FockCutoff:
    """Maximum retained photon number; joint dimension is 2*(n_max+1)."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def _atom_sigma_plus() -> np.ndarray:
    # |e><g| in the {g, e} ordering
    return np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


def annihilation(cutoff: FockCutoff) -> np.ndarray:
    """Cavity annihilation operator a (tensored with the atomic identity)."""
    n = cutoff.n_max
    a_cav = np.diag(np.sqrt(np.arange(1, n + 1)), 1).astype(complex)
    return np.kron(a_cav, np.eye(2, dtype=complex))


def creation(cutoff: FockCutoff) -> np.ndarray:
    return annihilation(cutoff).conj().T


def number_op(cutoff: FockCutoff) -> np.ndarray:
    a = annihilation(cutoff)
    return a.conj().T @ a


def atom_ops(cutoff: FockCutoff) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Atomic ladder operators (sigma_plus, sigma_minus, sigma_z) on the joint space."""
    eye_cav = np.eye(cutoff.n_max + 1, dtype=complex)
    sp = np.kron(eye_cav, _atom_sigma_plus())
    sm = sp.conj().T
    sz = sp @ sm - sm @ sp
    return sp, sm, sz


def identity(cutoff: FockCutoff) -> np.ndarray:
    return np.eye(cutoff.dim, dtype=complex)


def basis_state(cutoff: FockCutoff, n: int, s: int) -> np.ndarray:
    """Product basis ket |s, n> as a complex vector (s: 0 = g, 1 = e)."""
    if not 0 <= n <= cutoff.n_max:
        raise ValueError(f"photon number {n} outside cutoff {cutoff.n_max}")
    if s not in (0, 1):
        raise ValueError(f"atomic level must be 0 (g) or 1 (e), got {s}")
    v = np.zeros(cutoff.dim, dtype=complex)
    v[2 * n + s] = 1.0
    return v


def parse_state_label(label: str) -> tuple[int, int]:
    """Parse labels like 'g0' or 'e12' into (n, s)."""
    if len(label) < 2 or label[0] not in "ge":
        raise ValueError(f"bad state label {label!r}; expected e.g. 'g0', 'e2'")
    s = 0 if label[0] == "g" else 1
    try:
        n = int(label[1:])
    except ValueError as exc:
        raise ValueError(f"bad state label {label!r}") from exc
    return n, s


def ground_state(cutoff: FockCutoff) -> np.ndarray:
    """Density matrix |g,0><g,0|."""
    v = basis_state(cutoff, 0, 0)
    return np.outer(v, v.conj())


def thermal_tail_mass(nbar: float, cutoff: FockCutoff) -> float:
    """Probability mass of the geometric photon distribution above the cutoff."""
    if nbar <= 0:
        return 0.0
    r = nbar / (nbar + 1.0)
    return r ** (cutoff.n_max + 1)


def thermal_cavity_state(nbar: float, cutoff: FockCutoff, tail_tol: float = 1e-2) -> np.ndarray:
    """|g><g| (x) thermal cavity state with mean photon number nbar.

    p_n = nbar^n / (nbar+1)^(n+1); the truncated tail is renormalized so the
    result is a valid density matrix. Rejects cutoffs that drop more than
    tail_tol of probability mass.
    """
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    tail = thermal_tail_mass(nbar, cutoff)
    if tail > tail_tol:
        raise ValueError(
            f"thermal tail mass {tail:.3e} beyond n_max={cutoff.n_max} exceeds "
            f"tolerance {tail_tol:.1e}; increase the cutoff"
        )
    ns = np.arange(cutoff.n_max + 1)
    if nbar == 0:
        pn = np.zeros(cutoff.n_max + 1)
        pn[0] = 1.0
    else:
        pn = nbar**ns / (nbar + 1.0) ** (ns + 1)
        pn = pn / pn.sum()
    rho = np.zeros((cutoff.dim, cutoff.dim), dtype=complex)
    rho[2 * ns, 2 * ns] = pn  # atom in |g>
    return rho


def thermal_atom_population(omega0: float, temperature: float) -> float:
    """Ground-state population p of the two-level Gibbs state at T > 0."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0 (T=0 limit is p=1)")
    return 1.0 / (1.0 + np.exp(-omega0 / temperature))


def atom_thermal_mixture(omega0: float, temperature: float, cutoff: FockCutoff) -> np.ndarray:
    """p|g,0><g,0| + (1-p)|e,0><e,0| with p the Gibbs ground population."""
    p = thermal_atom_population(omega0, temperature)
    vg = basis_state(cutoff, 0, 0)
    ve = basis_state(cutoff, 0, 1)
    return p * np.outer(vg, vg.conj()) + (1.0 - p) * np.outer(ve, ve.conj())


def density_checks(rho: np.ndarray) -> tuple[float, float, float]:
    """Return (hermiticity error, |trace-1|, smallest eigenvalue) of rho."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag))
    lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return herm, tr, lo


def validate_density_matrix(
    rho: np.ndarray,
    tol_herm: float = TOL_HERM,
    tol_tr: float = TOL_TRACE,
    tol_pos: float = TOL_POS,
) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and PSD to tolerance."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm, tr, lo = density_checks(rho)
    if herm > tol_herm:
        raise ValueError(f"density matrix not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    if tr > tol_tr:
        raise ValueError(f"density matrix trace error {tr:.3e} exceeds {tol_tr:.1e}")
    if lo < -tol_pos:
        raise ValueError(f"density matrix has eigenvalue {lo:.3e} < -{tol_pos:.1e}")


def top_layer_population(rho: np.ndarray, cutoff: FockCutoff) -> float:
    """Population of the top two Fock layers (truncation-leakage monitor)."""
    d = cutoff.dim
    return float(np.sum(np.real(np.diag(rho)[d - 4 : d])))
