"""Deterministic density-matrix propagation.

This is the ground-truth oracle that trajectory ensembles are checked
against: the density matrix evolves under

    drho/dt = -i[H(t), rho] + sum_m ( L_m rho L_m† - 1/2 {L_m† L_m, rho} )

integrated with fixed-step classical RK4.  Fixed steps keep the oracle
bit-reproducible.  Dense dim² storage limits it to desk-scale dimensions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError, ValidationError
from .fock import OperatorMatrix, StateVector
from .model import LindbladModel, hamiltonian_at

__all__ = [
    "DensityMatrix",
    "pure_density",
    "lindblad_rhs",
    "propagate",
    "moment",
    "purity",
    "DEFAULT_DIM_LIMIT",
]

DEFAULT_DIM_LIMIT = 128


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Trace-one Hermitian positive matrix (up to numerical noise)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"density matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def check_invariants(self, trace_tol=1e-8, herm_tol=1e-10, eig_floor=-1e-8) -> None:
        """Raise if trace, Hermiticity, or positivity are out of tolerance."""
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValidationError(f"trace {tr} deviates from 1 by more than {trace_tol:g}")
        defect = float(np.max(np.abs(self.entries - self.entries.conj().T)))
        if defect > herm_tol:
            raise ValidationError(f"Hermiticity defect {defect:.3e} > {herm_tol:g}")
        lam_min = float(np.linalg.eigvalsh(self.entries).min())
        if lam_min < eig_floor:
            raise ValidationError(f"minimum eigenvalue {lam_min:.3e} below {eig_floor:g}")


def pure_density(psi: StateVector) -> DensityMatrix:
    """Projector |psi><psi| of a normalized state."""
    v = psi.amplitudes
    return DensityMatrix(np.outer(v, v.conj()))


def _rhs(rho: np.ndarray, h: np.ndarray, ls: list[np.ndarray], k: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for l in ls:
        out += l @ rho @ l.conj().T
    out -= 0.5 * (k @ rho + rho @ k)
    return out


def _compiled(m: LindbladModel):
    ls = [op.entries for op in m.lindblads]
    k = np.zeros((m.dim, m.dim), dtype=np.complex128)
    for l in ls:
        k += l.conj().T @ l
    return ls, k


def lindblad_rhs(rho: DensityMatrix, m: LindbladModel, t: float) -> np.ndarray:
    """Right-hand side drho/dt at time t (a plain matrix, not a state).

    The result is traceless and Hermitian up to rounding.
    """
    if rho.dim != m.dim:
        raise ShapeError(f"density dim {rho.dim} != model dim {m.dim}")
    ls, k = _compiled(m)
    return _rhs(rho.entries, hamiltonian_at(m, t).entries, ls, k)


def propagate(rho0: DensityMatrix, m: LindbladModel, t_final: float, dt: float = 1e-3,
              *, allow_large: bool = False) -> DensityMatrix:
    """Propagate rho0 to t_final with fixed-step RK4.

    The number of steps is round(t_final/dt) and the step is adjusted to
    land exactly on t_final.  The result is re-Hermitized and trace-
    renormalized once, at the output checkpoint.
    """
    if rho0.dim != m.dim:
        raise ShapeError(f"density dim {rho0.dim} != model dim {m.dim}")
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if t_final < 0.0:
        raise ValidationError(f"t_final must be >= 0, got {t_final}")
    if rho0.dim > DEFAULT_DIM_LIMIT:
        if not allow_large:
            raise ConfigurationError(
                f"oracle dim {rho0.dim} exceeds the default limit {DEFAULT_DIM_LIMIT}; "
                "pass allow_large=True to override")
        warnings.warn(
            f"propagating a {rho0.dim}x{rho0.dim} density matrix "
            f"(~{16 * rho0.dim ** 2 / 1e6:.0f} MB per copy, RK4 keeps several)",
            stacklevel=2)
    if t_final == 0.0:
        return rho0
    n_steps = max(1, round(t_final / dt))
    if n_steps > 1e9:
        raise ConfigurationError(f"{n_steps} steps requested; refusing more than 1e9")
    h_step = t_final / n_steps

    ls, k = _compiled(m)
    h0 = m.h_static.entries
    drive = m.drive_op.entries
    amp, om = m.drive_amplitude, m.drive_frequency

    def h_at(t: float) -> np.ndarray:
        if amp == 0.0:
            return h0
        return h0 + (amp * np.cos(om * t)) * drive

    rho = rho0.entries.copy()
    t = 0.0
    for i in range(n_steps):
        t = i * h_step
        k1 = _rhs(rho, h_at(t), ls, k)
        k2 = _rhs(rho + 0.5 * h_step * k1, h_at(t + 0.5 * h_step), ls, k)
        k3 = _rhs(rho + 0.5 * h_step * k2, h_at(t + 0.5 * h_step), ls, k)
        k4 = _rhs(rho + h_step * k3, h_at(t + h_step), ls, k)
        rho += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    rho = (rho + rho.conj().T) / 2.0
    rho /= np.trace(rho).real
    return DensityMatrix(rho)


def moment(rho: DensityMatrix, a: OperatorMatrix) -> complex:
    """trace(A rho)."""
    if rho.dim != a.dim:
        raise ShapeError(f"density dim {rho.dim} != operator dim {a.dim}")
    return complex(np.sum(a.entries * rho.entries.T))


def purity(rho: DensityMatrix) -> float:
    """trace(rho^2); 1 for pure states, 1/dim for the maximally mixed state."""
    return float(np.sum(rho.entries * rho.entries.T).real)
